// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "irscale/latent.hpp"
#include "irscale/sample.hpp"

namespace irscale {

inline constexpr const char* kScoreKey = "irscore";
inline constexpr const char* kIrSimilarityKey = "ir_similarity";
inline constexpr const char* kGraySimilarityKey = "gray_similarity";

/// A generated sample with its provenance, cost and verifier scores.
struct SampleTrace {
    Latent latent;
    Sample sample;
    std::map<std::string, double> scores;
    std::uint64_t nfe_cost = 0;

    double combined_score() const { return scores.at(kScoreKey); }

    friend bool operator==(const SampleTrace&, const SampleTrace&) = default;
};

void to_json(nlohmann::json& j, const SampleTrace& trace);

}  // namespace irscale
