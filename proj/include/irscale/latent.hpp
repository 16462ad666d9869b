// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace irscale {

inline constexpr double kDefaultNeighborhoodScale = 0.25;

struct LatentOrigin {
    enum class Kind { Prior, Neighborhood };

    Kind kind = Kind::Prior;
    std::uint64_t parent_seed = 0;  // Neighborhood only
    double lambda = 0.0;            // Neighborhood only

    static LatentOrigin prior() { return {}; }
    static LatentOrigin neighborhood(std::uint64_t parent, double lambda) {
        return {Kind::Neighborhood, parent, lambda};
    }

    friend bool operator==(const LatentOrigin&, const LatentOrigin&) = default;
};

/// A point in the sampler's noise space together with the seed of the stream
/// that produced it.
struct Latent {
    std::vector<double> values;
    std::uint64_t seed = 0;
    LatentOrigin origin;

    std::size_t dim() const noexcept { return values.size(); }

    friend bool operator==(const Latent&, const Latent&) = default;
};

/// d i.i.d. standard-normal draws keyed by `seed`; throws on d == 0.
Latent sample_prior(std::uint64_t seed, std::size_t dim);

/// sqrt(1 - lambda^2) * pivot + lambda * eps with eps drawn from `seed`.
/// The mixing keeps N(0, I) marginals, so neighbours stay on the prior's
/// typical set. Requires 0 < lambda < 1.
Latent perturb(const Latent& pivot, double lambda, std::uint64_t seed);

void to_json(nlohmann::json& j, const Latent& latent);
void from_json(const nlohmann::json& j, Latent& latent);

}  // namespace irscale
