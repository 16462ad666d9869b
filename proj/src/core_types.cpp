// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "irscale/error.hpp"
#include "irscale/latent.hpp"
#include "irscale/nfe_ledger.hpp"
#include "irscale/rng.hpp"
#include "irscale/sample.hpp"
#include "irscale/trace.hpp"

namespace irscale {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::BudgetExhausted: return "budget-exhausted";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Protocol: return "protocol";
    case ErrorCode::Connection: return "connection";
    case ErrorCode::Backend: return "backend";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Latent

Latent sample_prior(std::uint64_t seed, std::size_t dim) {
    if (dim == 0) fail(ErrorCode::InvalidArgument, "invalid dimension: latent dimension must be > 0");
    NormalStream stream(seed);
    Latent latent;
    latent.seed = seed;
    latent.values.resize(dim);
    for (auto& v : latent.values) v = stream.next();
    return latent;
}

Latent perturb(const Latent& pivot, double lambda, std::uint64_t seed) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        std::ostringstream msg;
        msg << "invalid parameter: neighbourhood scale lambda must lie in (0,1), got " << lambda;
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    if (pivot.values.empty()) fail(ErrorCode::InvalidArgument, "invalid dimension: empty pivot");
    const double keep = std::sqrt(1.0 - lambda * lambda);
    NormalStream stream(seed);
    Latent out;
    out.seed = seed;
    out.origin = LatentOrigin::neighborhood(pivot.seed, lambda);
    out.values.resize(pivot.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = keep * pivot.values[i] + lambda * stream.next();
    return out;
}

void to_json(nlohmann::json& j, const Latent& latent) {
    j = nlohmann::json{{"seed", latent.seed}, {"values", latent.values}};
    if (latent.origin.kind == LatentOrigin::Kind::Prior) {
        j["origin"] = {{"kind", "prior"}};
    } else {
        j["origin"] = {{"kind", "neighborhood"},
                       {"parent_seed", latent.origin.parent_seed},
                       {"lambda", latent.origin.lambda}};
    }
}

void from_json(const nlohmann::json& j, Latent& latent) {
    latent.seed = j.at("seed").get<std::uint64_t>();
    latent.values = j.at("values").get<std::vector<double>>();
    latent.origin = {};
    if (j.contains("origin") && j["origin"].at("kind") == "neighborhood") {
        latent.origin = LatentOrigin::neighborhood(j["origin"].at("parent_seed").get<std::uint64_t>(),
                                                   j["origin"].at("lambda").get<double>());
    }
}

// ---------------------------------------------------------------------------
// Sample

const char* to_string(Modality modality) {
    return modality == Modality::Vector ? "vector" : "image_gray";
}

Modality modality_from_string(const std::string& name) {
    if (name == "vector") return Modality::Vector;
    if (name == "image_gray") return Modality::ImageGray;
    fail(ErrorCode::InvalidArgument, "unknown modality '" + name + "'");
}

Sample Sample::vector(std::vector<double> values, std::string producer) {
    Sample s;
    s.modality = Modality::Vector;
    s.values = std::move(values);
    s.producer = std::move(producer);
    return s;
}

Sample Sample::image(std::size_t height, std::size_t width, const std::vector<float>& pixels,
                     std::string producer) {
    Sample s;
    s.modality = Modality::ImageGray;
    s.height = height;
    s.width = width;
    s.values.assign(pixels.begin(), pixels.end());
    s.producer = std::move(producer);
    return s;
}

void Sample::validate() const {
    if (values.empty()) fail(ErrorCode::InvalidArgument, "empty sample");
    if (modality == Modality::ImageGray) {
        if (height * width != values.size())
            fail(ErrorCode::InvalidArgument, "image sample shape does not match pixel count");
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0))
                fail(ErrorCode::InvalidArgument, "image intensity outside [0,1]");
    } else {
        for (double v : values)
            if (!std::isfinite(v)) fail(ErrorCode::Numerical, "non-finite sample value");
    }
}

void to_json(nlohmann::json& j, const Sample& sample) {
    j = nlohmann::json{{"modality", to_string(sample.modality)},
                       {"producer", sample.producer},
                       {"values", sample.values}};
    if (sample.modality == Modality::ImageGray) {
        j["height"] = sample.height;
        j["width"] = sample.width;
    }
}

void from_json(const nlohmann::json& j, Sample& sample) {
    sample.modality = modality_from_string(j.at("modality").get<std::string>());
    sample.producer = j.value("producer", std::string{});
    sample.values = j.at("values").get<std::vector<double>>();
    sample.height = j.value("height", std::size_t{0});
    sample.width = j.value("width", std::size_t{0});
}

// ---------------------------------------------------------------------------
// NfeLedger

void NfeLedger::require(std::uint64_t count, const std::string& what) const {
    if (!can_afford(count)) {
        std::ostringstream msg;
        msg << "budget exhausted: " << what << " needs " << count << " NFEs but only " << remaining()
            << " of " << m_budget << " remain";
        throw Error(ErrorCode::BudgetExhausted, msg.str());
    }
}

void NfeLedger::charge(const std::string& label, std::uint64_t count) {
    require(count, label);
    for (auto& [name, total] : m_per_call) {
        if (name == label) {
            total += count;
            m_spent += count;
            return;
        }
    }
    m_per_call.emplace_back(label, count);
    m_spent += count;
}

void to_json(nlohmann::json& j, const NfeLedger& ledger) {
    nlohmann::json calls = nlohmann::json::array();
    for (const auto& [label, count] : ledger.per_call()) calls.push_back({{"label", label}, {"count", count}});
    j = nlohmann::json{{"budget", ledger.budget()},
                       {"spent", ledger.spent()},
                       {"per_call", std::move(calls)},
                       {"verifier_calls", ledger.verifier_calls()}};
}

void to_json(nlohmann::json& j, const SampleTrace& trace) {
    j = nlohmann::json{{"latent", trace.latent},
                       {"sample", trace.sample},
                       {"scores", trace.scores},
                       {"nfe_cost", trace.nfe_cost}};
}

}  // namespace irscale
