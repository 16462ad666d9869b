// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "irscale/error.hpp"
#include "irscale/parallel.hpp"
#include "irscale/toy_diffusion.hpp"

using namespace irscale;

namespace {

GaussianMixture single(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    return GaussianMixture({{1.0, mean, cov}});
}

GaussianMixture two_modes(double cov_scale = 1.0) {
    Eigen::VectorXd a(2), b(2);
    a << 3.0, 0.0;
    b << -3.0, 0.0;
    const Eigen::MatrixXd cov = cov_scale * Eigen::MatrixXd::Identity(2, 2);
    return GaussianMixture({{0.5, a, cov}, {0.5, b, cov}});
}

// Independent closed-form log density: explicit inverse and determinant of
// each diffused covariance, summed in plain (not log-sum-exp) space.
double reference_log_density(const std::vector<MixtureComponent>& comps, const Eigen::VectorXd& x, double ab) {
    double p = 0.0;
    const auto m = static_cast<double>(x.size());
    for (const auto& c : comps) {
        const Eigen::MatrixXd cov =
            ab * c.covariance + (1.0 - ab) * Eigen::MatrixXd::Identity(x.size(), x.size());
        const Eigen::VectorXd diff = x - std::sqrt(ab) * c.mean;
        const double quad = diff.dot(cov.inverse() * diff);
        p += c.weight * std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * std::numbers::pi, m) * cov.determinant());
    }
    return std::log(p);
}

Eigen::VectorXd to_vec(const Sample& s) {
    return Eigen::Map<const Eigen::VectorXd>(s.values.data(), static_cast<Eigen::Index>(s.values.size()));
}

}  // namespace

TEST_CASE("score of the standard normal is -x at every t") {
    const auto mix = single(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    const VpSchedule sched;
    Eigen::VectorXd x(3);
    x << 0.3, -1.7, 2.2;
    for (double t : {0.0, 0.001, 0.3, 0.9, 1.0}) CHECK((score(mix, x, t, sched) + x).norm() < 1e-12);
}

TEST_CASE("score of a unit-covariance Gaussian at t=0 is -(x - mu)") {
    Eigen::VectorXd mu(2), x(2);
    mu << 1.5, -0.5;
    x << -0.25, 4.0;
    const auto mix = single(mu, Eigen::MatrixXd::Identity(2, 2));
    CHECK((score(mix, x, 0.0, VpSchedule{}) + (x - mu)).norm() < 1e-12);
}

TEST_CASE("score matches central differences of the closed-form log density") {
    Eigen::MatrixXd cov_a(2, 2), cov_b(2, 2);
    cov_a << 0.5, 0.2, 0.2, 0.8;
    cov_b << 1.2, -0.3, -0.3, 0.4;
    Eigen::VectorXd mu_a(2), mu_b(2);
    mu_a << 2.0, 1.0;
    mu_b << -1.5, -2.5;
    const std::vector<MixtureComponent> comps{{0.3, mu_a, cov_a}, {0.7, mu_b, cov_b}};
    const GaussianMixture mix(comps);
    const VpSchedule sched;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-5.0, 5.0), time(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd x(2);
        x << coord(rng), coord(rng);
        const double t = time(rng);
        const double ab = sched.alpha_bar(t);
        const double h = 1e-5;
        Eigen::VectorXd fd(2);
        for (int d = 0; d < 2; ++d) {
            Eigen::VectorXd xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            fd[d] = (reference_log_density(comps, xp, ab) - reference_log_density(comps, xm, ab)) / (2 * h);
        }
        const Eigen::VectorXd s = score(mix, x, t, sched);
        CHECK((s - fd).norm() <= 1e-5 * std::max(1.0, s.norm()));
        CHECK(mix.log_density(x, ab) == doctest::Approx(reference_log_density(comps, x, ab)).epsilon(1e-10));
    }
}

TEST_CASE("score validates its inputs") {
    const auto mix = GaussianMixture::default_toy();
    const VpSchedule sched;
    CHECK_THROWS_AS(score(mix, Eigen::VectorXd::Zero(3), 0.5, sched), Error);
    CHECK_THROWS_AS(score(mix, Eigen::VectorXd::Zero(2), 1.5, sched), Error);
    Eigen::VectorXd bad(2);
    bad << std::nan(""), 0.0;
    CHECK_THROWS_AS(score(mix, bad, 0.5, sched), Error);
}

TEST_CASE("mixture validation") {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(GaussianMixture({{0.5, mu, id}, {0.4, mu, id}}), Error);
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(GaussianMixture({{1.0, mu, indefinite}}), Error);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.1, 0.0, 1.0;
    CHECK_THROWS_AS(GaussianMixture({{1.0, mu, asym}}), Error);
    CHECK_THROWS_AS(GaussianMixture({}), Error);
}

TEST_CASE("alpha_bar is strictly decreasing") {
    const VpSchedule sched;
    double prev = sched.alpha_bar(0.0);
    CHECK(prev == 1.0);
    for (int i = 1; i <= 1000; ++i) {
        const double cur = sched.alpha_bar(i / 1000.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("denoising a standard-normal target keeps the prior's mean") {
    const ToySampler sampler(single(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), VpSchedule{});
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    constexpr int kDraws = 10000;
    for (int i = 0; i < kDraws; ++i) mean += to_vec(sampler.generate(sample_prior(static_cast<std::uint64_t>(i), 2), 28));
    mean /= kDraws;
    CHECK(std::abs(mean[0]) < 0.05);
    CHECK(std::abs(mean[1]) < 0.05);
}

TEST_CASE("denoising recovers a balanced two-mode mixture") {
    VpSchedule sched;
    sched.steps = 64;
    const ToySampler sampler(two_modes(), sched);
    constexpr int kDraws = 10000;
    int right = 0;
    Eigen::VectorXd sum_right = Eigen::VectorXd::Zero(2), sum_left = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < kDraws; ++i) {
        const auto x = to_vec(sampler.generate(sample_prior(1000 + static_cast<std::uint64_t>(i), 2), 64));
        if (x[0] > 0) {
            ++right;
            sum_right += x;
        } else {
            sum_left += x;
        }
    }
    const double frac = static_cast<double>(right) / kDraws;
    CHECK(std::abs(frac - 0.5) <= 0.03);
    const Eigen::VectorXd mean_right = sum_right / right;
    const Eigen::VectorXd mean_left = sum_left / (kDraws - right);
    CHECK(std::abs(mean_right[0] - 3.0) < 0.1);
    CHECK(std::abs(mean_right[1]) < 0.1);
    CHECK(std::abs(mean_left[0] + 3.0) < 0.1);
    CHECK(std::abs(mean_left[1]) < 0.1);
}

TEST_CASE("denoise charges exactly `steps` NFEs and refuses without budget") {
    VpSchedule sched;
    sched.steps = 64;
    const auto mix = two_modes();
    NfeLedger ledger(100);
    const auto latent = sample_prior(1, 2);
    const auto s = denoise(mix, latent, sched, ledger);
    CHECK(ledger.spent() == 64);
    CHECK(s.producer == ToySampler::kName);

    const NfeLedger before = ledger;
    try {
        denoise(mix, latent, sched, ledger);
        FAIL("expected budget refusal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BudgetExhausted);
    }
    CHECK(ledger == before);
}

TEST_CASE("denoise is pure: parallel and sequential evaluation agree bitwise") {
    const ToySampler sampler(GaussianMixture::default_toy(), VpSchedule{});
    constexpr std::size_t kCount = 64;
    std::vector<Sample> seq(kCount), par(kCount);
    for (std::size_t i = 0; i < kCount; ++i) seq[i] = sampler.generate(sample_prior(i, 2), 28);
    parallel_for(kCount, 8, [&](std::size_t i) { par[i] = sampler.generate(sample_prior(i, 2), 28); });
    CHECK(seq == par);
}

TEST_CASE("default four-mode mixture is reproduced by the sampler") {
    const auto mix = GaussianMixture::default_toy();
    const ToySampler sampler(mix, VpSchedule{});
    std::vector<Eigen::VectorXd> sums(4, Eigen::VectorXd::Zero(2));
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 4000; ++i) {
        const auto x = to_vec(sampler.generate(sample_prior(static_cast<std::uint64_t>(i), 2), 28));
        std::size_t best = 0;
        for (std::size_t k = 1; k < 4; ++k)
            if ((x - mix.component(k).mean).norm() < (x - mix.component(best).mean).norm()) best = k;
        sums[best] += x;
        ++counts[best];
    }
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(counts[k] / 4000.0 - 0.25) < 0.03);
        CHECK((sums[k] / counts[k] - mix.component(k).mean).norm() < 0.1);
    }
}

TEST_CASE("mixture json round trip") {
    const auto mix = GaussianMixture::default_toy();
    const auto back = mixture_from_json(mixture_to_json(mix));
    REQUIRE(back.size() == mix.size());
    for (std::size_t k = 0; k < mix.size(); ++k) {
        CHECK(back.component(k).mean == mix.component(k).mean);
        CHECK(back.component(k).covariance == mix.component(k).covariance);
    }
    CHECK_THROWS_AS(schedule_from_json({{"beta_min", 5.0}, {"beta_max", 1.0}}), Error);
}
