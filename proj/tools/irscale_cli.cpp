// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the irscale C interface.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irscale/irscale.h"

namespace {

constexpr int kUsageExit = 64;

struct Options {
    std::string config_path;
    std::string out_dir;
    int workers = 0;
    std::optional<std::uint64_t> seed;
    std::string backend_addr;
    std::string n_values = "1,2,4,8,16";
    std::string features_a;
    std::string features_b;
};

int report(irs_status status) {
    if (status == IRS_OK) return 0;
    std::cerr << "error [" << irs_status_name(status) << "]: " << irs_last_error() << '\n';
    return static_cast<int>(status);
}

std::optional<std::string> read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

irs_overrides make_overrides(const Options& o) {
    irs_overrides ov{};
    ov.output_dir = o.out_dir.empty() ? nullptr : o.out_dir.c_str();
    ov.workers = o.workers;
    ov.has_seed = o.seed.has_value();
    ov.seed = o.seed.value_or(0);
    ov.backend_addr = o.backend_addr.empty() ? nullptr : o.backend_addr.c_str();
    return ov;
}

std::vector<std::uint32_t> parse_n_values(const std::string& text) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const long long v = std::stoll(item);
        if (v <= 0) throw std::invalid_argument("N values must be positive");
        out.push_back(static_cast<std::uint32_t>(v));
    }
    return out;
}

int with_config(const Options& o, auto&& body) {
    const auto text = read_text(o.config_path);
    if (!text) {
        std::cerr << "error [io]: cannot read config " << o.config_path << '\n';
        return IRS_ERR_IO;
    }
    return body(*text);
}

int cmd_validate(const Options& o) {
    return with_config(o, [&](const std::string& config) {
        const auto ov = make_overrides(o);
        const int rc = report(irs_config_validate(config.c_str(), &ov));
        if (rc == 0) std::cout << "config OK\n";
        return rc;
    });
}

int cmd_run(const Options& o) {
    return with_config(o, [&](const std::string& config) {
        const auto ov = make_overrides(o);
        irs_experiment* exp = nullptr;
        if (const int rc = report(irs_experiment_create(config.c_str(), &ov, &exp))) return rc;
        char* dir = nullptr;
        const int rc = report(irs_experiment_run(exp, &dir));
        if (rc == 0) {
            std::cout << dir << '\n';
            irs_string_free(dir);
        }
        irs_experiment_destroy(exp);
        return rc;
    });
}

int cmd_sweep(const Options& o) {
    std::vector<std::uint32_t> ns;
    try {
        ns = parse_n_values(o.n_values);
    } catch (const std::exception& e) {
        std::cerr << "error [usage]: bad --n-values: " << e.what() << '\n';
        return kUsageExit;
    }
    return with_config(o, [&](const std::string& config) {
        const auto ov = make_overrides(o);
        irs_experiment* exp = nullptr;
        if (const int rc = report(irs_experiment_create(config.c_str(), &ov, &exp))) return rc;
        char* csv = nullptr;
        const int rc = report(irs_experiment_sweep(exp, ns.data(), ns.size(), &csv));
        if (rc == 0) {
            std::cout << csv << '\n';
            irs_string_free(csv);
        }
        irs_experiment_destroy(exp);
        return rc;
    });
}

int cmd_serve(const Options& o) {
    return with_config(o, [&](const std::string& config) {
        const std::string addr = o.backend_addr.empty() ? "127.0.0.1:7860" : o.backend_addr;

        // Block termination signals before any server thread exists so only sigwait sees them.
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);

        irs_server* server = nullptr;
        if (const int rc = report(irs_server_create(config.c_str(), addr.c_str(), &server))) return rc;
        if (const int rc = report(irs_server_start(server))) {
            irs_server_destroy(server);
            return rc;
        }
        int port = 0;
        irs_server_port(server, &port);
        if (addr.rfind("unix:", 0) == 0)
            std::cout << "listening on " << addr << std::endl;
        else
            std::cout << "listening on " << addr.substr(0, addr.rfind(':')) << ':' << port << std::endl;

        int sig = 0;
        sigwait(&signals, &sig);
        irs_server_stop(server);
        irs_server_destroy(server);
        return 0;
    });
}

int cmd_fid(const Options& o) {
    double fid = 0.0;
    if (const int rc = report(irs_fid_files(o.features_a.c_str(), o.features_b.c_str(), &fid))) return rc;
    std::ostringstream out;
    out.precision(17);
    out << fid;
    std::cout << out.str() << '\n';
    return 0;
}

void add_common(CLI::App* cmd, Options& o, bool needs_out) {
    cmd->add_option("--config", o.config_path, "Experiment document (JSON)")->required()->check(CLI::ExistingFile);
    if (needs_out) {
        cmd->add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
        cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    }
    cmd->add_option("--seed", o.seed, "Experiment seed (overrides seed)");
    cmd->add_option("--backend-addr", o.backend_addr, "Remote backend HOST:PORT or unix:PATH");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"irscale: verifier-guided noise search for diffusion samplers"};
    app.set_version_flag("--version", std::string(irs_version()));
    app.require_subcommand(1);

    Options o;
    auto* validate = app.add_subcommand("validate", "Check an experiment document");
    add_common(validate, o, true);

    auto* run = app.add_subcommand("run", "Run every configured search and write table.csv");
    add_common(run, o, true);

    auto* sweep = app.add_subcommand("sweep", "Random-search score/FID curve over N");
    add_common(sweep, o, true);
    sweep->add_option("--n-values", o.n_values, "Comma-separated candidate counts");

    auto* serve = app.add_subcommand("serve-toy", "Serve the toy backend over protocol v1");
    serve->add_option("--config", o.config_path, "Experiment document (JSON)")->required()->check(CLI::ExistingFile);
    serve->add_option("--backend-addr", o.backend_addr, "Listen address HOST:PORT or unix:PATH");

    auto* fid = app.add_subcommand("fid", "Fréchet distance between two feature files");
    fid->add_option("features_a", o.features_a, "First feature file")->required()->check(CLI::ExistingFile);
    fid->add_option("features_b", o.features_b, "Second feature file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsageExit;
    }

    if (*validate) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*serve) return cmd_serve(o);
    if (*fid) return cmd_fid(o);
    return kUsageExit;
}
