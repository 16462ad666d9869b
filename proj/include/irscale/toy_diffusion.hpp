// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "irscale/sampler.hpp"

namespace irscale {

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Gaussian mixture data distribution with analytically diffused marginals.
///
/// Each covariance is eigendecomposed once at construction so that the
/// VP-diffused covariance a*S + (1-a)*I can be inverted for any t without
/// another factorization.
class GaussianMixture {
public:
    /// Validates weights (sum to 1 within 1e-12) and that every covariance
    /// is symmetric positive-definite.
    explicit GaussianMixture(std::vector<MixtureComponent> components);

    std::size_t dim() const noexcept { return m_dim; }
    std::size_t size() const noexcept { return m_components.size(); }
    const MixtureComponent& component(std::size_t i) const { return m_components.at(i); }

    /// log p_t(x) and its gradient for the mixture diffused to signal level
    /// alpha_bar. Evaluated with log-sum-exp over components.
    double log_density(const Eigen::VectorXd& x, double alpha_bar) const;
    Eigen::VectorXd score(const Eigen::VectorXd& x, double alpha_bar) const;

    /// Exact draw from component `index` using the standard-normal stream `seed`.
    Eigen::VectorXd draw_from_component(std::size_t index, std::uint64_t seed) const;

    /// Four equally weighted modes at (+-3, +-3) with covariance 0.25 I, ordered
    /// (3,3), (-3,3), (-3,-3), (3,-3).
    static GaussianMixture default_toy();

private:
    struct Spectral {
        Eigen::MatrixXd basis;     // columns are eigenvectors of the covariance
        Eigen::VectorXd eigenvalues;
        Eigen::MatrixXd cholesky;  // lower factor of the clean covariance
    };

    std::vector<MixtureComponent> m_components;
    std::vector<Spectral> m_spectral;
    std::vector<double> m_log_weights;
    std::size_t m_dim = 0;
};

/// Variance-preserving schedule with linear beta(t) on [0, 1].
struct VpSchedule {
    double beta_min = 0.1;
    double beta_max = 20.0;
    int steps = 28;
    /// Integration stops here; the covariance map is singular at t = 0.
    double t_min = 1e-3;

    void validate() const;
    double beta(double t) const noexcept { return beta_min + t * (beta_max - beta_min); }
    double alpha_bar(double t) const noexcept;
};

/// grad_x log p_t(x) for the VP-diffused mixture; t must lie in [0, 1].
Eigen::VectorXd score(const GaussianMixture& mixture, const Eigen::VectorXd& x, double t,
                      const VpSchedule& schedule);

/// Probability-flow ODE sampler integrating dx/dt = -0.5 beta(t) (x + score)
/// from t = 1 down to t_min with Heun's method over `steps` uniform steps.
class ToySampler final : public Sampler {
public:
    static constexpr const char* kName = "toy-gmm";

    ToySampler(GaussianMixture mixture, VpSchedule schedule, int max_steps = 4096);

    std::string name() const override { return kName; }
    std::size_t latent_dim() const override { return m_mixture.dim(); }
    int max_steps() const override { return m_max_steps; }

    Sample generate(const Latent& latent, int steps, std::string_view prompt = {}) const override;

    const GaussianMixture& mixture() const noexcept { return m_mixture; }
    const VpSchedule& schedule() const noexcept { return m_schedule; }

private:
    GaussianMixture m_mixture;
    VpSchedule m_schedule;
    int m_max_steps;
};

/// Charges schedule.steps NFEs to the ledger (refusing up front if it cannot).
Sample denoise(const GaussianMixture& mixture, const Latent& latent, const VpSchedule& schedule,
               NfeLedger& ledger);

GaussianMixture mixture_from_json(const nlohmann::json& j);
nlohmann::json mixture_to_json(const GaussianMixture& mixture);
VpSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const VpSchedule& schedule);

}  // namespace irscale
