// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irscale/metrics.hpp"
#include "irscale/search.hpp"
#include "irscale/toy_diffusion.hpp"
#include "irscale/verifier.hpp"

namespace irscale {

inline constexpr const char* kLibraryVersion = "0.3.0";

struct ToyBackendSpec {
    nlohmann::json mixture = "default";
    VpSchedule schedule;
};

struct RemoteBackendSpec {
    std::string address;
    double timeout_s = 30.0;
};

struct SearchSpec {
    SearchConfig search;
    std::optional<std::uint64_t> budget;
};

struct ReferenceSpec {
    enum class Kind { None, ToyTarget, File };
    Kind kind = Kind::None;
    std::size_t count = 1000;
    std::uint64_t seed = 0x5EED;
    std::string path;
};

/// One experiment document. Every search shares its denoising step count so
/// that NFE comparisons are step-matched.
struct ExperimentConfig {
    std::string name = "experiment";
    std::string caption = "a city street at night";
    std::optional<ToyBackendSpec> toy_backend;
    std::optional<RemoteBackendSpec> remote_backend;
    bool remote_verifier = false;
    /// Mixture whose modes the toy verifier scores against; defaults to the
    /// toy backend's mixture.
    nlohmann::json verifier_mixture;
    std::size_t target = 0;
    std::size_t distractor = 1;
    ScoreWeights weights;
    std::vector<SearchSpec> searches;
    int trials = 1;
    std::uint64_t seed = 0;
    int workers = 1;
    ReferenceSpec reference;
    std::string output_dir = "out";

    /// Parses and validates. Throws ErrorCode::Config on any problem.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    void validate() const;

    /// Switches the sampler (and a toy verifier) to the server at `address`.
    void use_remote_backend(const std::string& address);
};

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend_addr;
};

ExperimentConfig apply_overrides(ExperimentConfig config, const Overrides& overrides);

/// Seed shared by every search of trial `trial`, so methods are compared on paired draws.
std::uint64_t trial_seed(std::uint64_t experiment_seed, int trial) noexcept;

struct SweepRow {
    int n = 0;
    std::uint64_t nfes = 0;
    double mean_score = 0.0;
    double mean_score_scaled = 0.0;
    double fid = 0.0;
};

inline constexpr const char* kSweepCsvHeader = "n,nfes,mean_score,mean_score_scaled,fid";

/// A configured experiment with live backends.
class Experiment {
public:
    explicit Experiment(ExperimentConfig config);

    const ExperimentConfig& config() const noexcept { return m_config; }
    const Sampler& sampler() const noexcept { return *m_sampler; }
    const Verifier& verifier() const noexcept { return *m_verifier; }

    /// One search of the config, with the given base seed.
    SearchReport run_search(std::size_t search_index, std::uint64_t base_seed, int workers = 1) const;

    /// Embeddings of the FID reference set (empty if none configured).
    const std::vector<std::vector<double>>& reference_features() const;

    /// Runs every search for every trial and writes
    /// <output_dir>/<name>/{manifest.json, runs/<seed>.json, table.csv}.
    /// Returns the experiment directory.
    std::filesystem::path run() const;

    /// Random search over each N with nested candidate streams; writes
    /// sweep.csv and sweep_manifest.json. Returns the CSV path.
    std::filesystem::path sweep(const std::vector<int>& n_values) const;

    std::vector<SweepRow> sweep_rows(const std::vector<int>& n_values) const;

private:
    nlohmann::json manifest(const char* mode) const;

    ExperimentConfig m_config;
    std::shared_ptr<const Sampler> m_sampler;
    std::shared_ptr<const EmbeddingBackend> m_embedder;
    std::unique_ptr<Verifier> m_verifier;
    nlohmann::json m_backend_fingerprint;
    mutable std::optional<std::vector<std::vector<double>>> m_reference;
};

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Reads features as a JSON array of arrays, or as rows of comma/space
/// separated numbers.
std::vector<std::vector<double>> read_features(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace irscale
