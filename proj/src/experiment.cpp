// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/experiment.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "irscale/error.hpp"
#include "irscale/parallel.hpp"
#include "irscale/protocol.hpp"
#include "irscale/remote.hpp"
#include "irscale/rng.hpp"

namespace irscale {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& what) {
    fail(ErrorCode::Config, "config: " + what);
}

nlohmann::json mixture_spec_or_default(const nlohmann::json& spec) {
    return spec.is_null() ? nlohmann::json("default") : spec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) config_error("document must be a JSON object");
        c.name = j.value("name", c.name);
        c.caption = j.value("caption", c.caption);

        const auto& backend = j.at("backend");
        const auto backend_type = backend.at("type").get<std::string>();
        if (backend_type == "toy") {
            ToyBackendSpec spec;
            spec.mixture = backend.value("mixture", nlohmann::json("default"));
            if (backend.contains("schedule")) {
                spec.schedule = schedule_from_json(backend["schedule"]);
            }
            c.toy_backend = spec;
        } else if (backend_type == "remote") {
            RemoteBackendSpec spec;
            spec.address = backend.at("address").get<std::string>();
            spec.timeout_s = backend.value("timeout_s", spec.timeout_s);
            c.remote_backend = spec;
        } else {
            config_error("unknown backend type '" + backend_type + "'");
        }

        const auto verifier = j.value("verifier", nlohmann::json{{"type", "toy"}});
        const auto verifier_type = verifier.at("type").get<std::string>();
        if (verifier_type == "toy") {
            c.target = verifier.value("target", c.target);
            c.distractor = verifier.value("distractor", c.distractor);
            c.verifier_mixture = verifier.value("mixture", nlohmann::json());
        } else if (verifier_type == "remote") {
            c.remote_verifier = true;
        } else {
            config_error("unknown verifier type '" + verifier_type + "'");
        }

        if (j.contains("weights")) {
            c.weights.alpha = j["weights"].value("alpha", c.weights.alpha);
            c.weights.report_scale = j["weights"].value("report_scale", c.weights.report_scale);
        }

        for (const auto& s : j.at("searches")) {
            SearchSpec spec;
            spec.search = s.get<SearchConfig>();
            if (s.contains("budget")) spec.budget = s["budget"].get<std::uint64_t>();
            c.searches.push_back(spec);
        }

        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.output_dir = j.value("output_dir", c.output_dir);

        if (j.contains("reference")) {
            const auto& r = j["reference"];
            const auto kind = r.at("type").get<std::string>();
            if (kind == "toy_target") {
                c.reference.kind = ReferenceSpec::Kind::ToyTarget;
                c.reference.count = r.value("count", c.reference.count);
                c.reference.seed = r.value("seed", c.reference.seed);
            } else if (kind == "file") {
                c.reference.kind = ReferenceSpec::Kind::File;
                c.reference.path = r.at("path").get<std::string>();
            } else if (kind != "none") {
                config_error("unknown reference type '" + kind + "'");
            }
        } else if (!c.remote_verifier) {
            c.reference.kind = ReferenceSpec::Kind::ToyTarget;
        }
    } catch (const nlohmann::json::exception& e) {
        config_error(e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        config_error(e.what());
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (name.empty() || name.find('/') != std::string::npos) config_error("name must be a non-empty path segment");
    if (toy_backend.has_value() == remote_backend.has_value()) config_error("exactly one backend must be configured");
    if (trials < 1) config_error("trials must be positive");
    if (workers < 1) config_error("workers must be positive");
    try {
        weights.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    if (searches.empty()) config_error("at least one search is required");

    const int steps = searches.front().search.steps;
    for (std::size_t i = 0; i < searches.size(); ++i) {
        const auto& s = searches[i];
        std::ostringstream where;
        where << "search " << i << " (" << to_string(s.search.strategy) << "): ";
        try {
            s.search.validate();
        } catch (const Error& e) {
            config_error(where.str() + e.what());
        }
        if (s.search.steps != steps)
            config_error(where.str() + "all searches must share the same denoising step count");
        if (s.budget && *s.budget < s.search.required_nfes()) {
            std::ostringstream msg;
            msg << where.str() << "budget " << *s.budget << " is below the " << s.search.required_nfes()
                << " NFEs this search requires";
            config_error(msg.str());
        }
    }

    if (!remote_verifier) {
        if (target == distractor) config_error("verifier target and distractor must differ");
        try {
            const auto mixture = mixture_from_json(
                verifier_mixture.is_null() && toy_backend ? toy_backend->mixture : mixture_spec_or_default(verifier_mixture));
            if (target >= mixture.size() || distractor >= mixture.size())
                config_error("verifier component index out of range");
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Config) throw;
            config_error(e.what());
        }
    }
    if (toy_backend) {
        try {
            mixture_from_json(toy_backend->mixture);
            toy_backend->schedule.validate();
        } catch (const Error& e) {
            config_error(e.what());
        }
    }
    if (reference.kind == ReferenceSpec::Kind::ToyTarget && reference.count < 2)
        config_error("reference count must be at least 2");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["caption"] = caption;
    if (toy_backend) {
        j["backend"] = {{"type", "toy"},
                        {"mixture", toy_backend->mixture},
                        {"schedule", schedule_to_json(toy_backend->schedule)}};
    } else {
        j["backend"] = {{"type", "remote"}, {"address", remote_backend->address}, {"timeout_s", remote_backend->timeout_s}};
    }
    if (remote_verifier) {
        j["verifier"] = {{"type", "remote"}};
    } else {
        j["verifier"] = {{"type", "toy"}, {"target", target}, {"distractor", distractor}};
        if (!verifier_mixture.is_null()) j["verifier"]["mixture"] = verifier_mixture;
    }
    j["weights"] = {{"alpha", weights.alpha}, {"report_scale", weights.report_scale}};
    j["searches"] = nlohmann::json::array();
    for (const auto& s : searches) {
        nlohmann::json e = s.search;
        e.erase("base_seed");
        if (s.budget) e["budget"] = *s.budget;
        j["searches"].push_back(std::move(e));
    }
    j["trials"] = trials;
    j["seed"] = seed;
    switch (reference.kind) {
    case ReferenceSpec::Kind::None: j["reference"] = {{"type", "none"}}; break;
    case ReferenceSpec::Kind::ToyTarget:
        j["reference"] = {{"type", "toy_target"}, {"count", reference.count}, {"seed", reference.seed}};
        break;
    case ReferenceSpec::Kind::File: j["reference"] = {{"type", "file"}, {"path", reference.path}}; break;
    }
    return j;
}

void ExperimentConfig::use_remote_backend(const std::string& address) {
    if (!remote_verifier && verifier_mixture.is_null() && toy_backend) verifier_mixture = toy_backend->mixture;
    double timeout = remote_backend ? remote_backend->timeout_s : 30.0;
    toy_backend.reset();
    remote_backend = RemoteBackendSpec{address, timeout};
    remote_verifier = true;
}

ExperimentConfig apply_overrides(ExperimentConfig config, const Overrides& o) {
    if (o.output_dir) config.output_dir = *o.output_dir;
    if (o.workers) config.workers = *o.workers;
    if (o.seed) config.seed = *o.seed;
    if (o.backend_addr) config.use_remote_backend(*o.backend_addr);
    config.validate();
    return config;
}

std::uint64_t trial_seed(std::uint64_t experiment_seed, int trial) noexcept {
    return derive_seed(experiment_seed, static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------------------
// Experiment

Experiment::Experiment(ExperimentConfig config) : m_config(std::move(config)) {
    m_config.validate();

    std::shared_ptr<RemoteBackend> remote;
    if (m_config.remote_backend) {
        RemoteOptions options;
        options.timeout = std::chrono::milliseconds(static_cast<long long>(m_config.remote_backend->timeout_s * 1000));
        options.pool_size = m_config.workers;
        remote = RemoteBackend::connect(transport::Address::parse(m_config.remote_backend->address), options);
        m_sampler = remote;
        m_backend_fingerprint = protocol::descriptor_to_json(remote->descriptor());
        m_backend_fingerprint["protocol_version"] = protocol::kVersion;
    } else {
        auto toy = std::make_shared<ToySampler>(mixture_from_json(m_config.toy_backend->mixture),
                                                m_config.toy_backend->schedule);
        m_backend_fingerprint = {{"name", toy->name()}, {"in_process", true}};
        m_sampler = toy;
    }

    if (m_config.remote_verifier) {
        if (!remote) config_error("a remote verifier requires a remote backend");
        m_embedder = remote;
    } else {
        const nlohmann::json spec = m_config.verifier_mixture.is_null() && m_config.toy_backend
                                        ? m_config.toy_backend->mixture
                                        : mixture_spec_or_default(m_config.verifier_mixture);
        m_embedder = std::make_shared<ToyEmbeddingBackend>(mixture_from_json(spec), m_config.target,
                                                           m_config.distractor);
    }
    m_verifier = std::make_unique<Verifier>(m_embedder, PromptPair::from_caption(m_config.caption), m_config.weights);
}

SearchReport Experiment::run_search(std::size_t search_index, std::uint64_t base_seed, int workers) const {
    const auto& spec = m_config.searches.at(search_index);
    SearchConfig search = spec.search;
    search.base_seed = base_seed;
    const SearchContext ctx{*m_sampler, *m_verifier, m_config.caption, workers};
    return irscale::run_search(ctx, search, NfeLedger(spec.budget.value_or(search.required_nfes())));
}

const std::vector<std::vector<double>>& Experiment::reference_features() const {
    if (m_reference) return *m_reference;
    std::vector<std::vector<double>> features;
    switch (m_config.reference.kind) {
    case ReferenceSpec::Kind::None: break;
    case ReferenceSpec::Kind::File: features = read_features(m_config.reference.path); break;
    case ReferenceSpec::Kind::ToyTarget: {
        const nlohmann::json spec = m_config.verifier_mixture.is_null() && m_config.toy_backend
                                        ? m_config.toy_backend->mixture
                                        : mixture_spec_or_default(m_config.verifier_mixture);
        const auto mixture = mixture_from_json(spec);
        for (std::size_t i = 0; i < m_config.reference.count; ++i) {
            const Eigen::VectorXd x = mixture.draw_from_component(m_config.target, derive_seed(m_config.reference.seed, i));
            features.push_back(
                m_embedder->embed_sample(Sample::vector(std::vector<double>(x.data(), x.data() + x.size()), "reference")));
        }
        break;
    }
    }
    m_reference = std::move(features);
    return *m_reference;
}

nlohmann::json Experiment::manifest(const char* mode) const {
    return {{"mode", mode},
            {"library_version", kLibraryVersion},
            {"protocol_version", protocol::kVersion},
            {"config", m_config.to_json()},
            {"sampler", m_backend_fingerprint},
            {"verifier", m_embedder->name()},
            {"covariance_normalization", kCovarianceNormalization},
            {"nfe_accounting", "denoising steps only; verifier calls tallied separately"}};
}

fs::path Experiment::run() const {
    const fs::path dir = fs::path(m_config.output_dir) / m_config.name;
    const fs::path runs_dir = dir / "runs";
    std::error_code ec;
    fs::create_directories(runs_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + runs_dir.string() + ": " + ec.message());
    fs::remove(dir / "table.csv", ec);

    write_file_atomic(dir / "manifest.json", manifest("run").dump(2) + "\n");

    const auto& reference = reference_features();
    const auto trials = static_cast<std::size_t>(m_config.trials);
    const std::size_t n_searches = m_config.searches.size();
    const int inner_workers = trials == 1 ? m_config.workers : 1;

    std::vector<std::vector<SearchReport>> results(trials);
    std::mutex write_mutex;
    parallel_for(trials, m_config.workers, [&](std::size_t t) {
        const std::uint64_t seed = trial_seed(m_config.seed, static_cast<int>(t));
        std::vector<SearchReport> reports;
        nlohmann::json doc{{"trial", t}, {"seed", seed}, {"reports", nlohmann::json::array()}};
        for (std::size_t s = 0; s < n_searches; ++s) {
            reports.push_back(run_search(s, seed, inner_workers));
            doc["reports"].push_back(reports.back());
        }
        {
            std::lock_guard lock(write_mutex);
            write_file_atomic(runs_dir / (std::to_string(seed) + ".json"), doc.dump(2) + "\n");
        }
        results[t] = std::move(reports);
    });

    // Rows follow config order: search-major, then trial.
    std::vector<SearchReport> ordered;
    for (std::size_t s = 0; s < n_searches; ++s)
        for (auto& trial : results) ordered.push_back(trial[s]);

    std::ostringstream csv;
    write_scaling_csv(csv, scaling_curve(ordered, reference, *m_embedder, m_config.weights));
    write_file_atomic(dir / "table.csv", csv.str());
    return dir;
}

std::vector<SweepRow> Experiment::sweep_rows(const std::vector<int>& n_values) const {
    if (n_values.empty()) config_error("sweep needs at least one N");
    for (int n : n_values)
        if (n < 1) config_error("sweep N values must be positive");

    const int steps = m_config.searches.front().search.steps;
    const auto trials = static_cast<std::size_t>(m_config.trials);
    const auto& reference = reference_features();

    // results[i][t]: best trace of random search with n_values[i] at trial t.
    std::vector<std::vector<SampleTrace>> results(n_values.size(), std::vector<SampleTrace>(trials));
    parallel_for(trials, m_config.workers, [&](std::size_t t) {
        const SearchContext ctx{*m_sampler, *m_verifier, m_config.caption, 1};
        for (std::size_t i = 0; i < n_values.size(); ++i) {
            SearchConfig cfg;
            cfg.strategy = Strategy::Random;
            cfg.n_candidates = n_values[i];
            cfg.steps = steps;
            cfg.base_seed = trial_seed(m_config.seed, static_cast<int>(t));
            results[i][t] = random_search(ctx, cfg, NfeLedger(cfg.required_nfes())).best;
        }
    });

    std::optional<FrechetStats> ref_stats;
    if (reference.size() >= 2) ref_stats = fit_stats(reference);

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        SweepRow row;
        row.n = n_values[i];
        row.nfes = static_cast<std::uint64_t>(n_values[i]) * static_cast<std::uint64_t>(steps);
        std::vector<std::vector<double>> features;
        double sum = 0.0;
        for (const auto& trace : results[i]) {
            sum += trace.combined_score();
            features.push_back(m_embedder->embed_sample(trace.sample));
        }
        row.mean_score = sum / static_cast<double>(trials);
        row.mean_score_scaled = row.mean_score * m_config.weights.report_scale;
        row.fid = (ref_stats && features.size() >= 2) ? frechet_distance(fit_stats(features), *ref_stats)
                                                      : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

fs::path Experiment::sweep(const std::vector<int>& n_values) const {
    const fs::path dir = fs::path(m_config.output_dir) / m_config.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    fs::remove(dir / "sweep.csv", ec);

    auto meta = manifest("sweep");
    meta["n_values"] = n_values;
    write_file_atomic(dir / "sweep_manifest.json", meta.dump(2) + "\n");

    const auto rows = sweep_rows(n_values);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    write_file_atomic(dir / "sweep.csv", csv.str());
    return dir / "sweep.csv";
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.n << ',' << r.nfes << ',' << format_double(r.mean_score) << ',' << format_double(r.mean_score_scaled)
            << ',' << format_double(r.fid) << '\n';
    }
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> read_features(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open feature file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            return nlohmann::json::parse(text).get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Io, "feature file " + path.string() + ": " + e.what());
        }
    }

    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        for (char& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream fields(line);
        std::vector<double> row;
        std::string token;
        while (fields >> token) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(token, &used));
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                fail(ErrorCode::Io, "feature file " + path.string() + ": bad number '" + token + "' on line " +
                                        std::to_string(line_no));
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) fail(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace irscale
