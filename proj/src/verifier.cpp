// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "irscale/error.hpp"

namespace irscale {

PromptPair PromptPair::from_caption(const std::string& caption) {
    return {caption, kIrPromptPrefix + caption + ".", kGrayPromptPrefix + caption + "."};
}

void ScoreWeights::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in [0,1]");
    if (!(report_scale > 0.0)) fail(ErrorCode::InvalidArgument, "report_scale must be positive");
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorCode::Numerical, "degenerate embedding: zero norm");
    if (!std::isfinite(dot) || !std::isfinite(na) || !std::isfinite(nb))
        fail(ErrorCode::Numerical, "degenerate embedding: non-finite values");
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double ir_score(const ScorePair& pair, const ScoreWeights& weights) {
    return (1.0 - weights.alpha) * pair.ir_similarity - weights.alpha * pair.gray_similarity;
}

namespace {

template <class F>
auto with_backend_context(const EmbeddingBackend& backend, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.code(), "backend '" + backend.name() + "': " + e.what(), e.retriable());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::Backend, "backend '" + backend.name() + "': " + e.what());
    }
}

}  // namespace

ScoredSample score_sample(const EmbeddingBackend& backend, const Sample& sample, const PromptPair& prompts,
                          const ScoreWeights& weights) {
    return with_backend_context(backend, [&] {
        const auto image = backend.embed_sample(sample);
        const auto ir = backend.embed_text(prompts.ir_prompt);
        const auto gray = backend.embed_text(prompts.gray_prompt);
        ScoredSample out;
        out.pair = {cosine(ir, image), cosine(gray, image)};
        out.score = ir_score(out.pair, weights);
        return out;
    });
}

Verifier::Verifier(std::shared_ptr<const EmbeddingBackend> backend, PromptPair prompts, ScoreWeights weights)
    : m_backend(std::move(backend)), m_prompts(std::move(prompts)), m_weights(weights) {
    if (!m_backend) fail(ErrorCode::InvalidArgument, "verifier needs an embedding backend");
    m_weights.validate();
    with_backend_context(*m_backend, [&] {
        m_ir_embedding = m_backend->embed_text(m_prompts.ir_prompt);
        m_gray_embedding = m_backend->embed_text(m_prompts.gray_prompt);
        return 0;
    });
}

ScoredSample Verifier::score(const Sample& sample) const {
    return with_backend_context(*m_backend, [&] {
        const auto image = m_backend->embed_sample(sample);
        ScoredSample out;
        out.pair = {cosine(m_ir_embedding, image), cosine(m_gray_embedding, image)};
        out.score = ir_score(out.pair, m_weights);
        return out;
    });
}

// ---------------------------------------------------------------------------

ToyEmbeddingBackend::ToyEmbeddingBackend(const GaussianMixture& mixture, std::size_t target,
                                         std::size_t distractor)
    : m_dim(mixture.dim()), m_target(target), m_distractor(distractor) {
    if (target >= mixture.size() || distractor >= mixture.size()) {
        std::ostringstream msg;
        msg << "invalid component index: mixture has " << mixture.size() << " components";
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    if (target == distractor) fail(ErrorCode::InvalidArgument, "target and distractor must differ");
    const auto& t = mixture.component(target).mean;
    const auto& d = mixture.component(distractor).mean;
    m_target_embedding = embed_point({t.data(), static_cast<std::size_t>(t.size())});
    m_distractor_embedding = embed_point({d.data(), static_cast<std::size_t>(d.size())});
}

std::vector<double> ToyEmbeddingBackend::embed_point(std::span<const double> x) const {
    if (x.size() != m_dim) fail(ErrorCode::InvalidArgument, "toy embedding: dimension mismatch");
    std::vector<double> e(x.begin(), x.end());
    e.push_back(1.0);
    double norm = 0.0;
    for (double v : e) norm += v * v;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) fail(ErrorCode::Numerical, "toy embedding: non-finite input");
    for (double& v : e) v /= norm;
    return e;
}

std::vector<double> ToyEmbeddingBackend::embed_sample(const Sample& sample) const {
    if (sample.modality != Modality::Vector)
        fail(ErrorCode::InvalidArgument, "toy embedding accepts vector samples only");
    return embed_point(sample.values);
}

std::vector<double> ToyEmbeddingBackend::embed_text(const std::string& text) const {
    if (text.starts_with(kIrPromptPrefix)) return m_target_embedding;
    if (text.starts_with(kGrayPromptPrefix)) return m_distractor_embedding;
    fail(ErrorCode::InvalidArgument, "toy embedding: unrecognised prompt template: '" + text + "'");
}

}  // namespace irscale
