// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/toy_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "irscale/error.hpp"
#include "irscale/rng.hpp"

namespace irscale {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_finite(const Eigen::VectorXd& x) {
    if (!x.allFinite()) fail(ErrorCode::Numerical, "non-finite input to score");
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : m_components(std::move(components)) {
    if (m_components.empty()) fail(ErrorCode::InvalidArgument, "mixture needs at least one component");
    m_dim = static_cast<std::size_t>(m_components.front().mean.size());
    if (m_dim == 0) fail(ErrorCode::InvalidArgument, "mixture dimension must be > 0");

    double total = 0.0;
    for (std::size_t k = 0; k < m_components.size(); ++k) {
        const auto& c = m_components[k];
        std::ostringstream where;
        where << "mixture component " << k << ": ";
        if (!(c.weight > 0.0 && c.weight <= 1.0))
            fail(ErrorCode::InvalidArgument, where.str() + "weight must lie in (0,1]");
        if (static_cast<std::size_t>(c.mean.size()) != m_dim || c.covariance.rows() != c.mean.size() ||
            c.covariance.cols() != c.mean.size())
            fail(ErrorCode::InvalidArgument, where.str() + "dimension mismatch");
        if (!c.mean.allFinite() || !c.covariance.allFinite())
            fail(ErrorCode::InvalidArgument, where.str() + "non-finite parameters");
        if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            fail(ErrorCode::InvalidArgument, where.str() + "covariance is not symmetric");

        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            fail(ErrorCode::InvalidArgument, where.str() + "covariance is not positive-definite");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.covariance);
        if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
            fail(ErrorCode::InvalidArgument, where.str() + "covariance is not positive-definite");

        m_spectral.push_back({eig.eigenvectors(), eig.eigenvalues(), llt.matrixL()});
        m_log_weights.push_back(std::log(c.weight));
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
}

double GaussianMixture::log_density(const Eigen::VectorXd& x, double alpha_bar) const {
    const double signal = std::sqrt(alpha_bar);
    const auto m = static_cast<double>(m_dim);
    std::vector<double> terms(m_components.size());
    for (std::size_t k = 0; k < m_components.size(); ++k) {
        const auto& sp = m_spectral[k];
        const Eigen::VectorXd s = (alpha_bar * sp.eigenvalues.array() + (1.0 - alpha_bar)).matrix();
        const Eigen::VectorXd y = sp.basis.transpose() * (x - signal * m_components[k].mean);
        const double quad = (y.array().square() / s.array()).sum();
        terms[k] = m_log_weights[k] - 0.5 * (quad + s.array().log().sum() + m * kLog2Pi);
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

Eigen::VectorXd GaussianMixture::score(const Eigen::VectorXd& x, double alpha_bar) const {
    const double signal = std::sqrt(alpha_bar);
    const std::size_t n = m_components.size();
    std::vector<double> log_terms(n);
    std::vector<Eigen::VectorXd> grads(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& sp = m_spectral[k];
        const Eigen::ArrayXd s = alpha_bar * sp.eigenvalues.array() + (1.0 - alpha_bar);
        const Eigen::ArrayXd y = (sp.basis.transpose() * (x - signal * m_components[k].mean)).array();
        log_terms[k] = m_log_weights[k] - 0.5 * ((y.square() / s).sum() + s.log().sum());
        grads[k] = -(sp.basis * (y / s).matrix());
    }
    const double peak = *std::max_element(log_terms.begin(), log_terms.end());
    double norm = 0.0;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_dim));
    for (std::size_t k = 0; k < n; ++k) {
        const double r = std::exp(log_terms[k] - peak);
        norm += r;
        out += r * grads[k];
    }
    return out / norm;
}

Eigen::VectorXd GaussianMixture::draw_from_component(std::size_t index, std::uint64_t seed) const {
    const auto& c = m_components.at(index);
    NormalStream stream(seed);
    Eigen::VectorXd eps(static_cast<Eigen::Index>(m_dim));
    for (auto& v : eps) v = stream.next();
    return c.mean + m_spectral[index].cholesky * eps;
}

GaussianMixture GaussianMixture::default_toy() {
    std::vector<MixtureComponent> components;
    const Eigen::MatrixXd cov = 0.25 * Eigen::MatrixXd::Identity(2, 2);
    for (auto [mx, my] : {std::pair{3.0, 3.0}, {-3.0, 3.0}, {-3.0, -3.0}, {3.0, -3.0}}) {
        Eigen::VectorXd mean(2);
        mean << mx, my;
        components.push_back({0.25, mean, cov});
    }
    return GaussianMixture(std::move(components));
}

// ---------------------------------------------------------------------------

void VpSchedule::validate() const {
    if (!(beta_min > 0.0)) fail(ErrorCode::InvalidArgument, "beta_min must be positive");
    if (!(beta_max > beta_min)) fail(ErrorCode::InvalidArgument, "beta_max must exceed beta_min");
    if (steps <= 0) fail(ErrorCode::InvalidArgument, "steps must be positive");
    if (!(t_min > 0.0 && t_min < 1.0)) fail(ErrorCode::InvalidArgument, "t_min must lie in (0,1)");
}

double VpSchedule::alpha_bar(double t) const noexcept {
    return std::exp(-(beta_min * t + 0.5 * (beta_max - beta_min) * t * t));
}

Eigen::VectorXd score(const GaussianMixture& mixture, const Eigen::VectorXd& x, double t,
                      const VpSchedule& schedule) {
    if (static_cast<std::size_t>(x.size()) != mixture.dim())
        fail(ErrorCode::InvalidArgument, "score: dimension mismatch");
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::InvalidArgument, "score: t must lie in [0,1]");
    check_finite(x);
    return mixture.score(x, schedule.alpha_bar(t));
}

// ---------------------------------------------------------------------------

ToySampler::ToySampler(GaussianMixture mixture, VpSchedule schedule, int max_steps)
    : m_mixture(std::move(mixture)), m_schedule(schedule), m_max_steps(max_steps) {
    m_schedule.validate();
}

Sample ToySampler::generate(const Latent& latent, int steps, std::string_view) const {
    if (latent.dim() != m_mixture.dim()) fail(ErrorCode::InvalidArgument, "latent dimension mismatch");
    if (steps <= 0 || steps > m_max_steps) fail(ErrorCode::InvalidArgument, "step count out of range");

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(latent.values.data(),
                                                          static_cast<Eigen::Index>(latent.dim()));
    check_finite(x);

    const auto drift = [&](const Eigen::VectorXd& at, double t) -> Eigen::VectorXd {
        return -0.5 * m_schedule.beta(t) * (at + m_mixture.score(at, m_schedule.alpha_bar(t)));
    };

    const double t_end = m_schedule.t_min;
    const double h = -(1.0 - t_end) / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = 1.0 + i * h;
        const double t_next = (i + 1 == steps) ? t_end : 1.0 + (i + 1) * h;
        const Eigen::VectorXd d1 = drift(x, t);
        const Eigen::VectorXd euler = x + (t_next - t) * d1;
        const Eigen::VectorXd d2 = drift(euler, t_next);
        x += 0.5 * (t_next - t) * (d1 + d2);
    }
    if (!x.allFinite()) fail(ErrorCode::Numerical, "probability-flow integration diverged");

    return Sample::vector(std::vector<double>(x.data(), x.data() + x.size()), kName);
}

Sample denoise(const GaussianMixture& mixture, const Latent& latent, const VpSchedule& schedule,
               NfeLedger& ledger) {
    const ToySampler sampler(mixture, schedule);
    return denoise(sampler, latent, schedule.steps, {}, ledger);
}

// ---------------------------------------------------------------------------

GaussianMixture mixture_from_json(const nlohmann::json& j) {
    if (j.is_string() && j.get<std::string>() == "default") return GaussianMixture::default_toy();
    std::vector<MixtureComponent> components;
    for (const auto& c : j.at("components")) {
        const auto mean = c.at("mean").get<std::vector<double>>();
        const auto n = static_cast<Eigen::Index>(mean.size());
        MixtureComponent comp;
        comp.weight = c.at("weight").get<double>();
        comp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
        const auto& cov = c.at("covariance");
        if (cov.is_number()) {
            comp.covariance = cov.get<double>() * Eigen::MatrixXd::Identity(n, n);
        } else {
            const auto rows = cov.get<std::vector<std::vector<double>>>();
            if (static_cast<Eigen::Index>(rows.size()) != n)
                fail(ErrorCode::Config, "covariance row count does not match mean dimension");
            comp.covariance.resize(n, n);
            for (Eigen::Index r = 0; r < n; ++r) {
                if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
                    fail(ErrorCode::Config, "covariance is not square");
                for (Eigen::Index col = 0; col < n; ++col)
                    comp.covariance(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            }
        }
        components.push_back(std::move(comp));
    }
    return GaussianMixture(std::move(components));
}

nlohmann::json mixture_to_json(const GaussianMixture& mixture) {
    nlohmann::json comps = nlohmann::json::array();
    for (std::size_t k = 0; k < mixture.size(); ++k) {
        const auto& c = mixture.component(k);
        std::vector<std::vector<double>> cov(static_cast<std::size_t>(c.covariance.rows()));
        for (Eigen::Index r = 0; r < c.covariance.rows(); ++r)
            for (Eigen::Index col = 0; col < c.covariance.cols(); ++col)
                cov[static_cast<std::size_t>(r)].push_back(c.covariance(r, col));
        comps.push_back({{"weight", c.weight},
                         {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                         {"covariance", cov}});
    }
    return {{"components", comps}};
}

VpSchedule schedule_from_json(const nlohmann::json& j) {
    VpSchedule s;
    s.beta_min = j.value("beta_min", s.beta_min);
    s.beta_max = j.value("beta_max", s.beta_max);
    s.steps = j.value("steps", s.steps);
    s.t_min = j.value("t_min", s.t_min);
    s.validate();
    return s;
}

nlohmann::json schedule_to_json(const VpSchedule& s) {
    return {{"beta_min", s.beta_min}, {"beta_max", s.beta_max}, {"steps", s.steps}, {"t_min", s.t_min}};
}

}  // namespace irscale
