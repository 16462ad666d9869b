// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irscale/nfe_ledger.hpp"
#include "irscale/sampler.hpp"
#include "irscale/trace.hpp"
#include "irscale/verifier.hpp"

namespace irscale {

enum class Strategy { Naive, Random, ZeroOrder };

const char* to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

struct SearchConfig {
    Strategy strategy = Strategy::Naive;
    int n_candidates = 1;  // N
    int iterations = 1;    // k, zero-order only
    double lambda = kDefaultNeighborhoodScale;
    int steps = 28;
    std::uint64_t base_seed = 0;
    /// Reuse the pivot's previous evaluation instead of denoising it again.
    /// Off by default so that spent NFEs equal k * N * steps.
    bool cache_pivot = false;

    /// Naive forces N = k = 1. Throws on out-of-range values.
    void validate() const;

    /// N * steps (naive, random) or k * N * steps (zero-order).
    std::uint64_t required_nfes() const;

    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

void to_json(nlohmann::json& j, const SearchConfig& config);
void from_json(const nlohmann::json& j, SearchConfig& config);

struct IterationRecord {
    int iteration = 0;
    std::vector<SampleTrace> candidates;
    std::size_t selected = 0;
};

struct SearchReport {
    SampleTrace best;
    std::vector<IterationRecord> history;
    NfeLedger ledger{0};
    SearchConfig config;
};

void to_json(nlohmann::json& j, const SearchReport& report);

/// Everything a search needs besides its configuration. `workers` > 1 fans
/// candidate evaluation out to threads when the sampler and verifier are
/// reentrant; results do not depend on the worker count.
struct SearchContext {
    const Sampler& sampler;
    const Verifier& verifier;
    std::string prompt;
    int workers = 1;
};

/// Candidate seeds for random search are base_seed + i, so a run with N
/// candidates evaluates a prefix of the run with N' > N.
std::uint64_t random_candidate_seed(std::uint64_t base_seed, std::size_t index) noexcept;

/// Seed of neighbour `index` (1-based) generated in zero-order iteration `iteration`.
std::uint64_t neighbor_seed(std::uint64_t base_seed, int iteration, std::size_t index) noexcept;

SearchReport naive_sample(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger);
SearchReport random_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger);
SearchReport zero_order_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger);

/// Dispatches on config.strategy.
SearchReport run_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger);

/// Index of the highest score; ties go to the lowest index.
std::size_t select_best(const std::vector<SampleTrace>& candidates);

}  // namespace irscale
