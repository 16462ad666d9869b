// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irscale/sample.hpp"
#include "irscale/toy_diffusion.hpp"

namespace irscale {

/// Captions wrapped in the infrared and grayscale templates.
struct PromptPair {
    std::string caption;
    std::string ir_prompt;
    std::string gray_prompt;

    static PromptPair from_caption(const std::string& caption);
};

inline constexpr const char* kIrPromptPrefix = "An INFRARED photo of ";
inline constexpr const char* kGrayPromptPrefix = "A GRAYSCALE photo of ";

struct ScoreWeights {
    double alpha = 0.5;
    /// Presentation multiplier only; combined scores are stored unscaled.
    double report_scale = 10.0;

    void validate() const;
};

/// The two cosine terms of the infrared quality score.
struct ScorePair {
    double ir_similarity = 0.0;
    double gray_similarity = 0.0;
};

/// Image/text encoders behind the verifier.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t embed_dim() const = 0;
    virtual bool reentrant() const { return true; }

    virtual std::vector<double> embed_sample(const Sample& sample) const = 0;
    virtual std::vector<double> embed_text(const std::string& text) const = 0;
};

/// a.b / (|a||b|). Zero-norm inputs raise a degenerate-embedding error rather
/// than scoring 0.
double cosine(std::span<const double> a, std::span<const double> b);

/// (1 - alpha) * ir_similarity - alpha * gray_similarity, unscaled.
double ir_score(const ScorePair& pair, const ScoreWeights& weights);

struct ScoredSample {
    ScorePair pair;
    double score = 0.0;
};

/// Embeds the sample and both prompts and combines them. Backend failures are
/// rethrown with the backend name attached.
ScoredSample score_sample(const EmbeddingBackend& backend, const Sample& sample, const PromptPair& prompts,
                          const ScoreWeights& weights);

/// Scoring bound to a fixed backend, prompt pair and weighting. The prompt
/// embeddings are computed once at construction.
class Verifier {
public:
    Verifier(std::shared_ptr<const EmbeddingBackend> backend, PromptPair prompts, ScoreWeights weights);

    ScoredSample score(const Sample& sample) const;

    const EmbeddingBackend& backend() const noexcept { return *m_backend; }
    const PromptPair& prompts() const noexcept { return m_prompts; }
    const ScoreWeights& weights() const noexcept { return m_weights; }
    bool reentrant() const { return m_backend->reentrant(); }

private:
    std::shared_ptr<const EmbeddingBackend> m_backend;
    PromptPair m_prompts;
    ScoreWeights m_weights;
    std::vector<double> m_ir_embedding;
    std::vector<double> m_gray_embedding;
};

/// Desk-scale stand-in for a finetuned image-text encoder. A sample x embeds
/// as normalize((x, 1)); the infrared prompt embeds as the target mode's mean
/// under the same map and the grayscale prompt as the distractor's.
class ToyEmbeddingBackend final : public EmbeddingBackend {
public:
    static constexpr const char* kName = "toy-embed";

    ToyEmbeddingBackend(const GaussianMixture& mixture, std::size_t target, std::size_t distractor);

    std::string name() const override { return kName; }
    std::size_t embed_dim() const override { return m_dim + 1; }

    std::vector<double> embed_sample(const Sample& sample) const override;
    std::vector<double> embed_text(const std::string& text) const override;

    /// The fixed affine map followed by normalization.
    std::vector<double> embed_point(std::span<const double> x) const;

    std::size_t target() const noexcept { return m_target; }
    std::size_t distractor() const noexcept { return m_distractor; }

private:
    std::size_t m_dim;
    std::size_t m_target;
    std::size_t m_distractor;
    std::vector<double> m_target_embedding;
    std::vector<double> m_distractor_embedding;
};

}  // namespace irscale
