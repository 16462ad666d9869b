// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/irscale.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "irscale/error.hpp"
#include "irscale/experiment.hpp"
#include "irscale/metrics.hpp"
#include "irscale/protocol.hpp"
#include "irscale/toy_server.hpp"

struct irs_experiment {
    std::unique_ptr<irscale::Experiment> impl;
};

struct irs_server {
    std::unique_ptr<irscale::ToyServer> impl;
};

namespace {

thread_local std::string g_last_error;

irs_status status_of(irscale::ErrorCode code) {
    using irscale::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return IRS_ERR_INVALID_ARGUMENT;
    case ErrorCode::Config: return IRS_ERR_CONFIG;
    case ErrorCode::BudgetExhausted: return IRS_ERR_BUDGET;
    case ErrorCode::Numerical: return IRS_ERR_NUMERICAL;
    case ErrorCode::Protocol: return IRS_ERR_PROTOCOL;
    case ErrorCode::Connection: return IRS_ERR_CONNECTION;
    case ErrorCode::Backend: return IRS_ERR_BACKEND;
    case ErrorCode::Io: return IRS_ERR_IO;
    case ErrorCode::Internal: return IRS_ERR_INTERNAL;
    }
    return IRS_ERR_INTERNAL;
}

template <class F>
irs_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return IRS_OK;
    } catch (const irscale::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("config: ") + e.what();
        return IRS_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return IRS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return IRS_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) irscale::fail(irscale::ErrorCode::InvalidArgument, what);
}

char* copy_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

irscale::ExperimentConfig load_config(const char* config_json, const irs_overrides* o) {
    require(config_json != nullptr, "config_json is null");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
        irscale::fail(irscale::ErrorCode::Config,
                      "config: malformed JSON at byte " + std::to_string(e.byte));
    }
    auto config = irscale::ExperimentConfig::from_json(doc);
    if (!o) return config;
    irscale::Overrides overrides;
    if (o->output_dir) overrides.output_dir = o->output_dir;
    if (o->workers > 0) overrides.workers = o->workers;
    if (o->has_seed) overrides.seed = o->seed;
    if (o->backend_addr) overrides.backend_addr = o->backend_addr;
    return irscale::apply_overrides(std::move(config), overrides);
}

std::vector<std::vector<double>> rows_of(const double* data, std::size_t rows, std::size_t dim) {
    std::vector<std::vector<double>> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r].assign(data + r * dim, data + (r + 1) * dim);
    return out;
}

}  // namespace

extern "C" {

const char* irs_version(void) {
    return irscale::kLibraryVersion;
}

int irs_protocol_version(void) {
    return irscale::protocol::kVersion;
}

const char* irs_last_error(void) {
    return g_last_error.c_str();
}

const char* irs_status_name(irs_status status) {
    switch (status) {
    case IRS_OK: return "ok";
    case IRS_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case IRS_ERR_CONFIG: return "config";
    case IRS_ERR_BUDGET: return "budget-exhausted";
    case IRS_ERR_NUMERICAL: return "numerical";
    case IRS_ERR_PROTOCOL: return "protocol";
    case IRS_ERR_CONNECTION: return "connection";
    case IRS_ERR_BACKEND: return "backend";
    case IRS_ERR_IO: return "io";
    case IRS_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void irs_string_free(char* str) {
    std::free(str);
}

irs_status irs_ir_score(double ir_similarity, double gray_similarity, double alpha, double* out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        irscale::ScoreWeights weights;
        weights.alpha = alpha;
        weights.validate();
        for (double v : {ir_similarity, gray_similarity})
            require(v >= -1.0 && v <= 1.0, "similarities must lie in [-1, 1]");
        *out = irscale::ir_score({ir_similarity, gray_similarity}, weights);
    });
}

irs_status irs_config_validate(const char* config_json, const irs_overrides* overrides) {
    return guarded([&] { load_config(config_json, overrides); });
}

irs_status irs_experiment_create(const char* config_json, const irs_overrides* overrides, irs_experiment** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        *out = nullptr;
        auto handle = std::make_unique<irs_experiment>();
        handle->impl = std::make_unique<irscale::Experiment>(load_config(config_json, overrides));
        *out = handle.release();
    });
}

void irs_experiment_destroy(irs_experiment* experiment) {
    delete experiment;
}

irs_status irs_experiment_run(irs_experiment* experiment, char** out_dir) {
    return guarded([&] {
        require(experiment != nullptr, "experiment is null");
        const auto dir = experiment->impl->run();
        if (out_dir) *out_dir = copy_string(dir.string());
    });
}

irs_status irs_experiment_sweep(irs_experiment* experiment, const uint32_t* n_values, size_t count, char** out_csv) {
    return guarded([&] {
        require(experiment != nullptr, "experiment is null");
        require(n_values != nullptr || count == 0, "n_values is null");
        std::vector<int> ns;
        for (std::size_t i = 0; i < count; ++i) {
            require(n_values[i] > 0 && n_values[i] <= 1u << 20, "N values must lie in [1, 2^20]");
            ns.push_back(static_cast<int>(n_values[i]));
        }
        const auto path = experiment->impl->sweep(ns);
        if (out_csv) *out_csv = copy_string(path.string());
    });
}

irs_status irs_experiment_search(irs_experiment* experiment, size_t search_index, uint64_t base_seed,
                                 char** report_json) {
    return guarded([&] {
        require(experiment != nullptr, "experiment is null");
        require(report_json != nullptr, "report_json is null");
        require(search_index < experiment->impl->config().searches.size(), "search index out of range");
        const nlohmann::json j = experiment->impl->run_search(search_index, base_seed, experiment->impl->config().workers);
        *report_json = copy_string(j.dump());
    });
}

irs_status irs_server_create(const char* config_json, const char* listen_addr, irs_server** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        require(listen_addr != nullptr, "listen_addr is null");
        *out = nullptr;
        const auto config = load_config(config_json, nullptr);
        if (!config.toy_backend) irscale::fail(irscale::ErrorCode::Config, "config: serving requires a toy backend");
        if (config.remote_verifier) irscale::fail(irscale::ErrorCode::Config, "config: serving requires a toy verifier");
        auto mixture = irscale::mixture_from_json(config.toy_backend->mixture);
        const auto verifier_mixture = config.verifier_mixture.is_null()
                                          ? mixture
                                          : irscale::mixture_from_json(config.verifier_mixture);
        auto sampler = std::make_shared<irscale::ToySampler>(std::move(mixture), config.toy_backend->schedule);
        auto embedder =
            std::make_shared<irscale::ToyEmbeddingBackend>(verifier_mixture, config.target, config.distractor);
        irscale::ToyServer::Options options;
        options.address = irscale::transport::Address::parse(listen_addr);
        auto handle = std::make_unique<irs_server>();
        handle->impl = std::make_unique<irscale::ToyServer>(sampler, embedder, options);
        *out = handle.release();
    });
}

irs_status irs_server_start(irs_server* server) {
    return guarded([&] {
        require(server != nullptr, "server is null");
        server->impl->start();
    });
}

irs_status irs_server_port(const irs_server* server, int* port) {
    return guarded([&] {
        require(server != nullptr && port != nullptr, "null argument");
        *port = server->impl->port();
    });
}

void irs_server_stop(irs_server* server) {
    if (server) server->impl->stop();
}

void irs_server_destroy(irs_server* server) {
    delete server;
}

irs_status irs_frechet_distance(const double* features_a, size_t rows_a, const double* features_b, size_t rows_b,
                                size_t dim, double* out) {
    return guarded([&] {
        require(features_a != nullptr && features_b != nullptr && out != nullptr, "null argument");
        require(dim > 0, "dim must be positive");
        const auto a = irscale::fit_stats(rows_of(features_a, rows_a, dim));
        const auto b = irscale::fit_stats(rows_of(features_b, rows_b, dim));
        *out = irscale::frechet_distance(a, b);
    });
}

irs_status irs_fid_files(const char* path_a, const char* path_b, double* out) {
    return guarded([&] {
        require(path_a != nullptr && path_b != nullptr && out != nullptr, "null argument");
        const auto a = irscale::fit_stats(irscale::read_features(path_a));
        const auto b = irscale::fit_stats(irscale::read_features(path_b));
        *out = irscale::frechet_distance(a, b);
    });
}

}  // extern "C"
