// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "irscale/irscale.h"

namespace fs = std::filesystem;

namespace {

std::string default_config() {
    std::ifstream in(IRSCALE_SOURCE_DIR "/configs/toy_default.json");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string take(char* s) {
    std::string out(s);
    irs_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(irs_version()) == "0.3.0");
    CHECK(irs_protocol_version() == 1);
    CHECK(std::string(irs_status_name(IRS_ERR_BUDGET)) == "budget-exhausted");
}

TEST_CASE("ir score through the C surface") {
    double out = 0.0;
    REQUIRE(irs_ir_score(0.4213, 0.3186, 0.5, &out) == IRS_OK);
    CHECK(out == doctest::Approx(0.05135));
    CHECK(irs_ir_score(0.4, 0.3, 1.5, &out) == IRS_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(irs_last_error()) > 0);
    CHECK(irs_ir_score(0.4, 0.3, 0.5, nullptr) == IRS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config validation") {
    CHECK(irs_config_validate(default_config().c_str(), nullptr) == IRS_OK);
    CHECK(irs_config_validate("{", nullptr) == IRS_ERR_CONFIG);
    CHECK(irs_config_validate(R"({"backend": {"type": "toy"}, "searches": [{"strategy": "beam"}]})", nullptr) ==
          IRS_ERR_CONFIG);
    CHECK(std::string(irs_last_error()).find("beam") != std::string::npos);
}

TEST_CASE("experiment search, run and sweep") {
    const auto out = fs::temp_directory_path() / ("irscale_capi_" + std::to_string(::getpid()));
    fs::remove_all(out);
    const std::string out_str = out.string();
    irs_overrides o{};
    o.output_dir = out_str.c_str();
    o.has_seed = 1;
    o.seed = 5;

    auto doc = default_config();
    doc.replace(doc.find("\"trials\": 100"), 13, "\"trials\": 4");
    irs_experiment* exp = nullptr;
    REQUIRE(irs_experiment_create(doc.c_str(), &o, &exp) == IRS_OK);

    char* report = nullptr;
    REQUIRE(irs_experiment_search(exp, 1, 9, &report) == IRS_OK);
    CHECK(take(report).find("\"spent\":336") != std::string::npos);
    CHECK(irs_experiment_search(exp, 7, 9, &report) == IRS_ERR_INVALID_ARGUMENT);

    char* dir = nullptr;
    REQUIRE(irs_experiment_run(exp, &dir) == IRS_OK);
    CHECK(fs::exists(fs::path(take(dir)) / "table.csv"));

    const std::uint32_t ns[] = {1, 2};
    char* csv = nullptr;
    REQUIRE(irs_experiment_sweep(exp, ns, 2, &csv) == IRS_OK);
    CHECK(fs::exists(take(csv)));
    irs_experiment_destroy(exp);
    fs::remove_all(out);
}

TEST_CASE("server and remote experiment through the C surface") {
    irs_server* server = nullptr;
    REQUIRE(irs_server_create(default_config().c_str(), "127.0.0.1:0", &server) == IRS_OK);
    REQUIRE(irs_server_start(server) == IRS_OK);
    int port = 0;
    REQUIRE(irs_server_port(server, &port) == IRS_OK);
    CHECK(port > 0);

    const std::string addr = "127.0.0.1:" + std::to_string(port);
    irs_overrides o{};
    o.backend_addr = addr.c_str();
    irs_experiment* remote = nullptr;
    irs_experiment* local = nullptr;
    REQUIRE(irs_experiment_create(default_config().c_str(), &o, &remote) == IRS_OK);
    REQUIRE(irs_experiment_create(default_config().c_str(), nullptr, &local) == IRS_OK);
    char* a = nullptr;
    char* b = nullptr;
    REQUIRE(irs_experiment_search(remote, 2, 123, &a) == IRS_OK);
    REQUIRE(irs_experiment_search(local, 2, 123, &b) == IRS_OK);
    CHECK(take(a) == take(b));
    irs_experiment_destroy(remote);
    irs_experiment_destroy(local);
    irs_server_stop(server);
    irs_server_destroy(server);
}

TEST_CASE("frechet distance through the C surface") {
    const double a[] = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    double out = -1.0;
    REQUIRE(irs_frechet_distance(a, 4, a, 4, 2, &out) == IRS_OK);
    CHECK(std::abs(out) < 1e-10);
    CHECK(irs_frechet_distance(a, 1, a, 4, 2, &out) != IRS_OK);
    CHECK(irs_fid_files("/nonexistent/a", "/nonexistent/b", &out) == IRS_ERR_IO);
}
