// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "irscale/error.hpp"

namespace irscale {

FrechetStats fit_stats(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) fail(ErrorCode::InvalidArgument, "fit_stats needs at least two feature vectors");
    const std::size_t dim = features.front().size();
    if (dim == 0) fail(ErrorCode::InvalidArgument, "fit_stats: empty feature vectors");

    Eigen::MatrixXd data(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != dim) fail(ErrorCode::InvalidArgument, "fit_stats: dimension mismatch");
        for (std::size_t d = 0; d < dim; ++d) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = features[i][d];
    }
    if (!data.allFinite()) fail(ErrorCode::Numerical, "fit_stats: non-finite features");

    FrechetStats stats;
    stats.count = features.size();
    stats.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - stats.mean.transpose();
    stats.covariance = (centered.transpose() * centered) / static_cast<double>(features.size() - 1);
    stats.covariance = 0.5 * (stats.covariance + stats.covariance.transpose());
    return stats;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eigendecomposition of " << what << " failed (max |entry| " << sym.cwiseAbs().maxCoeff() << ")";
        fail(ErrorCode::Numerical, msg.str());
    }
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const FrechetStats& a, const FrechetStats& b) {
    if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows())
        fail(ErrorCode::InvalidArgument, "frechet_distance: dimension mismatch");
    if (!a.covariance.allFinite() || !b.covariance.allFinite() || !a.mean.allFinite() || !b.mean.allFinite())
        fail(ErrorCode::Numerical, "frechet_distance: non-finite statistics");

    const Eigen::MatrixXd root_a = psd_sqrt(a.covariance, "first covariance");
    const Eigen::MatrixXd inner = root_a * b.covariance * root_a;
    const Eigen::MatrixXd sym = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eigendecomposition of covariance product failed (trace " << sym.trace() << ")";
        fail(ErrorCode::Numerical, msg.str());
    }
    const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double d = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    return std::max(d, 0.0);
}

std::vector<ScalingRow> scaling_curve(const std::vector<SearchReport>& reports,
                                      const std::vector<std::vector<double>>& reference_features,
                                      const EmbeddingBackend& backend, const ScoreWeights& weights) {
    struct Group {
        ScalingRow row;
        std::vector<std::vector<double>> features;
        double score_sum = 0.0;
    };
    std::vector<Group> groups;
    std::map<std::pair<Strategy, std::uint64_t>, std::size_t> index;

    for (const auto& report : reports) {
        const auto key = std::make_pair(report.config.strategy, report.ledger.spent());
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) {
            Group g;
            g.row.method = to_string(report.config.strategy);
            g.row.nfes = report.ledger.spent();
            g.row.alpha = weights.alpha;
            groups.push_back(std::move(g));
        }
        auto& g = groups[it->second];
        g.score_sum += report.best.combined_score();
        g.features.push_back(backend.embed_sample(report.best.sample));
    }

    std::optional<FrechetStats> reference;
    if (reference_features.size() >= 2) reference = fit_stats(reference_features);

    std::vector<ScalingRow> rows;
    for (auto& g : groups) {
        g.row.count = g.features.size();
        g.row.mean_score = g.score_sum / static_cast<double>(g.row.count);
        g.row.mean_score_scaled = g.row.mean_score * weights.report_scale;
        g.row.fid = (reference && g.features.size() >= 2)
                        ? frechet_distance(fit_stats(g.features), *reference)
                        : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(g.row);
    }
    return rows;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
    out << kScalingCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.method << ',' << r.nfes << ',' << format_double(r.alpha) << ',' << format_double(r.mean_score)
            << ',' << format_double(r.mean_score_scaled) << ',' << format_double(r.fid) << '\n';
    }
}

}  // namespace irscale
