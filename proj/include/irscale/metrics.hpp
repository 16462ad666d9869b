// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irscale/search.hpp"
#include "irscale/verifier.hpp"

namespace irscale {

/// Mean and unbiased (n - 1) covariance of a feature set.
struct FrechetStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::size_t count = 0;
};

inline constexpr const char* kCovarianceNormalization = "unbiased (n-1)";

FrechetStats fit_stats(const std::vector<std::vector<double>>& features);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
///
/// The trace of the cross term is taken as the sum of square roots of the
/// eigenvalues of S_a^{1/2} S_b S_a^{1/2} (symmetrized), with round-off
/// negatives clamped to zero. The result is clamped to >= 0.
double frechet_distance(const FrechetStats& a, const FrechetStats& b);

struct ScalingRow {
    std::string method;
    std::uint64_t nfes = 0;
    double alpha = 0.0;
    double mean_score = 0.0;
    double mean_score_scaled = 0.0;
    double fid = 0.0;  // NaN when the group has fewer than two selections
    std::size_t count = 0;
};

inline constexpr const char* kScalingCsvHeader = "method,nfes,alpha,mean_score,mean_score_scaled,fid";

/// Groups reports by (strategy, NFEs) in first-appearance order and computes
/// the mean selected score and the Fréchet distance between the selected
/// samples' embeddings and `reference_features`.
std::vector<ScalingRow> scaling_curve(const std::vector<SearchReport>& reports,
                                      const std::vector<std::vector<double>>& reference_features,
                                      const EmbeddingBackend& backend, const ScoreWeights& weights);

/// Writes the rows with the fixed scaling header. Numbers use round-trip precision.
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace irscale
