// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "irscale/error.hpp"
#include "irscale/metrics.hpp"

using namespace irscale;

namespace {

FrechetStats stats(Eigen::VectorXd mean, Eigen::MatrixXd cov) { return {std::move(mean), std::move(cov), 2}; }

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("fit_stats uses the unbiased covariance") {
    const auto s = fit_stats({{1.0, 2.0}, {3.0, 6.0}});
    CHECK(s.count == 2);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.mean[1] == doctest::Approx(4.0));
    CHECK(s.covariance(0, 0) == doctest::Approx(2.0));
    CHECK(s.covariance(0, 1) == doctest::Approx(4.0));
    CHECK(s.covariance(1, 1) == doctest::Approx(8.0));
    CHECK_THROWS_AS(fit_stats({{1.0}}), Error);
    CHECK_THROWS_AS(fit_stats({{1.0, 2.0}, {1.0}}), Error);
}

TEST_CASE("fit_stats recovers Gaussian moments") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10000; ++i) {
        const double a = n01(rng), b = n01(rng);
        rows.push_back({1.0 + a, -2.0 + 0.5 * a + b});
    }
    const auto s = fit_stats(rows);
    CHECK(std::abs(s.mean[0] - 1.0) < 0.05);
    CHECK(std::abs(s.mean[1] + 2.0) < 0.05);
    CHECK(std::abs(s.covariance(0, 0) - 1.0) < 0.05);
    CHECK(std::abs(s.covariance(0, 1) - 0.5) < 0.05);
    CHECK(std::abs(s.covariance(1, 1) - 1.25) < 0.05);
}

TEST_CASE("frechet distance closed-form cases") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    const auto a = stats(vec({0.5, -1.0, 2.0}), id);
    CHECK(std::abs(frechet_distance(a, a)) < 1e-10);

    // Equal covariances: only the squared mean distance remains.
    CHECK(frechet_distance(stats(vec({0, 0, 0}), id), stats(vec({1, 2, 2}), id)) == doctest::Approx(9.0));

    // Diagonal: sum (sqrt(a_i) - sqrt(b_i))^2 plus mean term.
    Eigen::MatrixXd da = Eigen::Vector3d(4.0, 1.0, 9.0).asDiagonal();
    Eigen::MatrixXd db = Eigen::Vector3d(1.0, 1.0, 4.0).asDiagonal();
    CHECK(frechet_distance(stats(vec({0, 0, 0}), da), stats(vec({0, 0, 1}), db)) == doctest::Approx(1.0 + 0.0 + 1.0 + 1.0));
}

TEST_CASE("frechet distance matches a high-precision reference for full covariances") {
    Eigen::MatrixXd a(3, 3), b(3, 3);
    a << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.8;
    b << 1.0, -0.4, 0.0, -0.4, 2.2, 0.5, 0.0, 0.5, 1.1;
    const auto sa = stats(vec({0.5, -1.0, 2.0}), a);
    const auto sb = stats(vec({0.0, 0.25, 1.5}), b);
    CHECK(std::abs(frechet_distance(sa, sb) - 2.654566533357393) < 1e-9);
    CHECK(std::abs(frechet_distance(sb, sa) - 2.654566533357393) < 1e-9);
}

TEST_CASE("frechet distance properties on random inputs") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    auto random_spd = [&](int d) {
        Eigen::MatrixXd m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = n01(rng);
        return Eigen::MatrixXd(m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d));
    };
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 6;
        Eigen::VectorXd ma(d), mb(d), shift(d);
        for (int i = 0; i < d; ++i) {
            ma[i] = n01(rng);
            mb[i] = n01(rng);
            shift[i] = n01(rng);
        }
        const auto a = stats(ma, random_spd(d));
        const auto b = stats(mb, random_spd(d));
        const double ab = frechet_distance(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(frechet_distance(b, a)).epsilon(1e-8));
        CHECK(ab == doctest::Approx(frechet_distance(stats(ma + shift, a.covariance), stats(mb + shift, b.covariance)))
                        .epsilon(1e-8));
    }
    CHECK_THROWS_AS(frechet_distance(stats(vec({0, 0}), Eigen::MatrixXd::Identity(2, 2)),
                                     stats(vec({0, 0, 0}), Eigen::MatrixXd::Identity(3, 3))),
                    Error);
}

TEST_CASE("scaling curve groups by method and budget") {
    const auto mix = GaussianMixture::default_toy();
    const ToyEmbeddingBackend backend(mix, 0, 1);
    auto make = [](Strategy s, std::uint64_t spent, double score, std::vector<double> x) {
        SearchReport r;
        r.config.strategy = s;
        r.ledger = NfeLedger(1000);
        r.ledger.charge("denoise", spent);
        r.best.sample = Sample::vector(std::move(x), "t");
        r.best.scores[kScoreKey] = score;
        return r;
    };
    const std::vector<SearchReport> reports{make(Strategy::Naive, 28, 0.1, {1.0, 2.0}),
                                            make(Strategy::Random, 336, 0.4, {3.0, 3.0}),
                                            make(Strategy::Naive, 28, 0.3, {2.0, 1.0})};
    const std::vector<std::vector<double>> reference{{0.1, 0.2, 0.3}, {0.2, 0.1, 0.3}, {0.3, 0.3, 0.1}};
    const auto rows = scaling_curve(reports, reference, backend, ScoreWeights{});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "naive");
    CHECK(rows[0].count == 2);
    CHECK(rows[0].mean_score == doctest::Approx(0.2));
    CHECK(rows[0].mean_score_scaled == doctest::Approx(2.0));
    CHECK(std::isfinite(rows[0].fid));
    CHECK(rows[1].method == "random");
    CHECK(rows[1].nfes == 336);
    CHECK(std::isnan(rows[1].fid));

    std::ostringstream out;
    write_scaling_csv(out, rows);
    CHECK(out.str().rfind(std::string(kScalingCsvHeader) + "\n", 0) == 0);
    CHECK(out.str().find("random,336,0.5,0.4,4,nan") != std::string::npos);
}
