// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/search.hpp"

#include <optional>
#include <sstream>

#include "irscale/error.hpp"
#include "irscale/parallel.hpp"
#include "irscale/rng.hpp"

namespace irscale {

const char* to_string(Strategy strategy) {
    switch (strategy) {
    case Strategy::Naive: return "naive";
    case Strategy::Random: return "random";
    case Strategy::ZeroOrder: return "zero_order";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "naive") return Strategy::Naive;
    if (name == "random") return Strategy::Random;
    if (name == "zero_order") return Strategy::ZeroOrder;
    fail(ErrorCode::Config, "unknown search strategy '" + name + "'");
}

void SearchConfig::validate() const {
    if (steps <= 0) fail(ErrorCode::Config, "steps must be positive");
    switch (strategy) {
    case Strategy::Naive:
        if (n_candidates != 1 || iterations != 1)
            fail(ErrorCode::Config, "naive sampling requires n_candidates = 1 and iterations = 1");
        break;
    case Strategy::Random:
        if (n_candidates < 1) fail(ErrorCode::Config, "random search requires n_candidates >= 1");
        break;
    case Strategy::ZeroOrder:
        if (n_candidates < 2) fail(ErrorCode::Config, "zero-order search requires n_candidates >= 2");
        if (iterations < 1) fail(ErrorCode::Config, "zero-order search requires iterations >= 1");
        if (!(lambda > 0.0 && lambda < 1.0)) fail(ErrorCode::Config, "lambda must lie in (0,1)");
        break;
    }
}

std::uint64_t SearchConfig::required_nfes() const {
    const auto n = static_cast<std::uint64_t>(n_candidates);
    const auto k = static_cast<std::uint64_t>(iterations);
    const auto s = static_cast<std::uint64_t>(steps);
    if (strategy != Strategy::ZeroOrder) return n * s;
    if (cache_pivot) return (n + (k - 1) * (n - 1)) * s;
    return k * n * s;
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
    j = nlohmann::json{{"strategy", to_string(c.strategy)},
                       {"n_candidates", c.n_candidates},
                       {"iterations", c.iterations},
                       {"lambda", c.lambda},
                       {"steps", c.steps},
                       {"base_seed", c.base_seed},
                       {"cache_pivot", c.cache_pivot}};
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
    c = SearchConfig{};
    c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    c.n_candidates = j.value("n_candidates", 1);
    c.iterations = j.value("iterations", 1);
    c.lambda = j.value("lambda", kDefaultNeighborhoodScale);
    c.steps = j.value("steps", c.steps);
    c.base_seed = j.value("base_seed", std::uint64_t{0});
    c.cache_pivot = j.value("cache_pivot", false);
}

void to_json(nlohmann::json& j, const SearchReport& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& it : r.history)
        history.push_back({{"iteration", it.iteration}, {"selected", it.selected}, {"candidates", it.candidates}});
    j = nlohmann::json{{"config", r.config}, {"best", r.best}, {"history", std::move(history)}, {"ledger", r.ledger}};
}

std::uint64_t random_candidate_seed(std::uint64_t base_seed, std::size_t index) noexcept {
    return base_seed + index;
}

std::uint64_t neighbor_seed(std::uint64_t base_seed, int iteration, std::size_t index) noexcept {
    return derive_seed(base_seed, static_cast<std::uint64_t>(iteration) + 1, index);
}

std::size_t select_best(const std::vector<SampleTrace>& candidates) {
    if (candidates.empty()) fail(ErrorCode::Internal, "no candidates to select from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].combined_score() > candidates[best].combined_score()) best = i;
    return best;
}

namespace {

SampleTrace make_trace(Latent latent, Sample sample, const ScoredSample& scored, int steps) {
    SampleTrace trace;
    trace.latent = std::move(latent);
    trace.sample = std::move(sample);
    trace.scores = {{kScoreKey, scored.score},
                    {kIrSimilarityKey, scored.pair.ir_similarity},
                    {kGraySimilarityKey, scored.pair.gray_similarity}};
    trace.nfe_cost = static_cast<std::uint64_t>(steps);
    return trace;
}

// Denoises and scores every latent whose slot is empty. Generation runs
// without touching the ledger; charges are applied afterwards in index
// order, only for candidates that succeeded.
void evaluate(const SearchContext& ctx, int steps, std::vector<Latent>& latents,
              std::vector<std::optional<SampleTrace>>& slots, NfeLedger& ledger) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (!slots[i]) todo.push_back(i);

    const bool concurrent = ctx.sampler.reentrant() && ctx.verifier.reentrant();
    std::vector<std::optional<SampleTrace>> fresh(todo.size());
    std::exception_ptr failure;
    try {
        parallel_for(todo.size(), concurrent ? ctx.workers : 1, [&](std::size_t n) {
            const std::size_t i = todo[n];
            Sample sample = ctx.sampler.generate(latents[i], steps, ctx.prompt);
            sample.validate();
            const ScoredSample scored = ctx.verifier.score(sample);
            fresh[n] = make_trace(latents[i], std::move(sample), scored, steps);
        });
    } catch (...) {
        failure = std::current_exception();
    }

    for (std::size_t n = 0; n < todo.size(); ++n) {
        if (!fresh[n]) continue;
        ledger.charge("denoise", static_cast<std::uint64_t>(steps));
        ledger.note_verifier_calls(1);
        slots[todo[n]] = std::move(fresh[n]);
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<SampleTrace> unwrap(std::vector<std::optional<SampleTrace>>& slots) {
    std::vector<SampleTrace> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

void precheck(const SearchContext& ctx, const SearchConfig& config, const NfeLedger& ledger) {
    config.validate();
    if (config.steps > ctx.sampler.max_steps()) {
        std::ostringstream msg;
        msg << "steps " << config.steps << " exceed the sampler's maximum of " << ctx.sampler.max_steps();
        fail(ErrorCode::Config, msg.str());
    }
    ledger.require(config.required_nfes(), std::string(to_string(config.strategy)) + " search");
}

SearchReport best_of(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger) {
    precheck(ctx, config, ledger);
    const auto n = static_cast<std::size_t>(config.n_candidates);
    std::vector<Latent> latents;
    latents.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        latents.push_back(sample_prior(random_candidate_seed(config.base_seed, i), ctx.sampler.latent_dim()));

    std::vector<std::optional<SampleTrace>> slots(n);
    evaluate(ctx, config.steps, latents, slots, ledger);

    SearchReport report;
    report.config = config;
    IterationRecord record{0, unwrap(slots), 0};
    record.selected = select_best(record.candidates);
    report.best = record.candidates[record.selected];
    report.history.push_back(std::move(record));
    report.ledger = std::move(ledger);
    return report;
}

}  // namespace

SearchReport naive_sample(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger) {
    if (config.strategy != Strategy::Naive) fail(ErrorCode::Config, "naive_sample needs a naive config");
    return best_of(ctx, config, std::move(ledger));
}

SearchReport random_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger) {
    if (config.strategy != Strategy::Random) fail(ErrorCode::Config, "random_search needs a random config");
    return best_of(ctx, config, std::move(ledger));
}

SearchReport zero_order_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger) {
    if (config.strategy != Strategy::ZeroOrder)
        fail(ErrorCode::Config, "zero_order_search needs a zero-order config");
    precheck(ctx, config, ledger);

    const auto n = static_cast<std::size_t>(config.n_candidates);
    Latent pivot = sample_prior(config.base_seed, ctx.sampler.latent_dim());
    std::optional<SampleTrace> pivot_trace;

    SearchReport report;
    report.config = config;
    for (int iteration = 0; iteration < config.iterations; ++iteration) {
        std::vector<Latent> latents;
        latents.reserve(n);
        latents.push_back(pivot);
        for (std::size_t i = 1; i < n; ++i)
            latents.push_back(perturb(pivot, config.lambda, neighbor_seed(config.base_seed, iteration, i)));

        std::vector<std::optional<SampleTrace>> slots(n);
        if (config.cache_pivot && pivot_trace) slots[0] = *pivot_trace;
        evaluate(ctx, config.steps, latents, slots, ledger);

        IterationRecord record{iteration, unwrap(slots), 0};
        record.selected = select_best(record.candidates);
        pivot_trace = record.candidates[record.selected];
        pivot = pivot_trace->latent;
        report.history.push_back(std::move(record));
    }
    report.best = std::move(*pivot_trace);
    report.ledger = std::move(ledger);
    return report;
}

SearchReport run_search(const SearchContext& ctx, const SearchConfig& config, NfeLedger ledger) {
    switch (config.strategy) {
    case Strategy::Naive: return naive_sample(ctx, config, std::move(ledger));
    case Strategy::Random: return random_search(ctx, config, std::move(ledger));
    case Strategy::ZeroOrder: return zero_order_search(ctx, config, std::move(ledger));
    }
    fail(ErrorCode::Internal, "unhandled strategy");
}

}  // namespace irscale
