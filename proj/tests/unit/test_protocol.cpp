// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <thread>

#include <unistd.h>

#include "doctest.h"
#include "irscale/error.hpp"
#include "irscale/remote.hpp"
#include "irscale/search.hpp"
#include "irscale/toy_server.hpp"

using namespace irscale;
using namespace std::chrono_literals;
namespace proto = irscale::protocol;

namespace {

std::string hex_decode(const std::string& hex) {
    std::string out;
    for (std::size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
    return out;
}

std::shared_ptr<const ToySampler> toy_sampler() {
    return std::make_shared<ToySampler>(GaussianMixture::default_toy(), VpSchedule{});
}

std::shared_ptr<const ToyEmbeddingBackend> toy_embedder() {
    return std::make_shared<ToyEmbeddingBackend>(GaussianMixture::default_toy(), 0, 1);
}

struct RunningServer {
    explicit RunningServer(ToyServer::Options options = {}) : server(toy_sampler(), toy_embedder(), options) {
        server.start();
    }
    ~RunningServer() { server.stop(); }
    transport::Address address() const { return transport::Address::parse("127.0.0.1:" + std::to_string(server.port())); }
    ToyServer server;
};

// A single-connection server whose behaviour after the handshake is scripted.
class ScriptedServer {
public:
    using Script = std::function<void(transport::Connection&)>;

    ScriptedServer(proto::BackendDescriptor descriptor, Script script)
        : m_listener(transport::Address::parse("127.0.0.1:0")) {
        m_thread = std::thread([this, descriptor, script] {
            for (;;) {
                auto conn = m_listener.accept();
                if (!conn.valid()) return;
                conn.set_timeout(-1ms);
                try {
                    conn.receive();
                    conn.send(proto::HandshakeOk{proto::kVersion, descriptor});
                    script(conn);
                } catch (const Error&) {
                }
            }
        });
    }
    ~ScriptedServer() {
        m_listener.close();
        m_thread.join();
    }
    transport::Address address() const { return transport::Address::parse("127.0.0.1:" + std::to_string(m_listener.port())); }

private:
    transport::Listener m_listener;
    std::thread m_thread;
};

proto::BackendDescriptor toy_descriptor() { return {"scripted", Modality::Vector, 2, 3, 64, 1}; }

}  // namespace

TEST_CASE("base64 matches the RFC 4648 test vectors") {
    const std::pair<const char*, const char*> cases[] = {{"", ""},           {"f", "Zg=="},         {"fo", "Zm8="},
                                                         {"foo", "Zm9v"},    {"foob", "Zm9vYg=="},  {"fooba", "Zm9vYmE="},
                                                         {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, encoded] : cases) {
        CHECK(proto::base64_encode(plain) == encoded);
        CHECK(proto::base64_decode(encoded) == plain);
    }
    CHECK_THROWS_AS(proto::base64_decode("Zm9"), Error);
    CHECK_THROWS_AS(proto::base64_decode("Zm9*"), Error);
}

TEST_CASE("framing uses a big-endian length prefix") {
    const std::string framed = proto::frame("{}");
    REQUIRE(framed.size() == 6);
    CHECK(framed.substr(0, 4) == std::string("\0\0\0\2", 4));
    const unsigned char header[4] = {0x01, 0x02, 0x03, 0x04};
    CHECK(proto::read_length_prefix(header) == 0x01020304u);
}

TEST_CASE("malformed payloads are protocol errors") {
    try {
        proto::parse(R"({"type": "handshake", "version": )");
        FAIL("expected parse failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("malformed JSON at byte") != std::string::npos);
    }
    CHECK_THROWS_AS(proto::parse(R"({"type": "teleport"})"), Error);
    CHECK_THROWS_AS(proto::parse(R"({"type": "denoise", "seed": 1})"), Error);
    CHECK_THROWS_AS(proto::parse(R"([1, 2])"), Error);
    CHECK_THROWS_AS(proto::parse(R"({"type": "sample", "image": "AAAA", "h": 2, "w": 2})"), Error);
}

TEST_CASE("conformance vectors serialize and parse exactly") {
    std::ifstream in(IRSCALE_SOURCE_DIR "/tests/data/protocol_v1_vectors.json");
    REQUIRE(in);
    const auto doc = nlohmann::json::parse(in);
    CHECK(doc.at("protocol_version") == proto::kVersion);
    const auto& vectors = doc.at("vectors");
    REQUIRE(vectors.size() == 9);
    for (const auto& v : vectors) {
        INFO(v.at("message").dump());
        const std::string framed = hex_decode(v.at("frame_hex").get<std::string>());
        const auto message = proto::decode(v.at("message"));
        CHECK(proto::frame(proto::serialize(message)) == framed);
        CHECK(proto::parse(framed.substr(4)) == message);
        CHECK(proto::read_length_prefix(reinterpret_cast<const unsigned char*>(framed.data())) == framed.size() - 4);
    }
}

TEST_CASE("random messages round-trip") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<float> pixel(0.0f, 1.0f);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> values(1 + rng() % 8);
        for (double& v : values) v = n01(rng) * 1e3;
        std::vector<proto::Message> messages{
            proto::Handshake{static_cast<int>(rng() % 5)},
            proto::DenoiseRequest{rng(), values, 1 + static_cast<int>(rng() % 100), "caption " + std::to_string(i)},
            proto::SampleReply{Sample::vector(values, "p")},
            proto::EmbedRequest{std::string("An INFRARED photo of x.")},
            proto::EmbedRequest{Sample::vector(values, "")},
            proto::EmbeddingReply{values},
            proto::ErrorReply{"boom " + std::to_string(i)},
        };
        const std::size_t h = 1 + rng() % 5, w = 1 + rng() % 5;
        std::vector<float> pixels(h * w);
        for (float& p : pixels) p = pixel(rng);
        messages.push_back(proto::SampleReply{Sample::image(h, w, pixels, "img")});
        for (const auto& m : messages) CHECK(proto::parse(proto::serialize(m)) == m);
    }
}

TEST_CASE("image payloads are bit-exact little-endian float32") {
    const std::vector<float> pixels{0.0f, 0.25f, 0.5f, 1.0f};
    const auto sample = Sample::image(2, 2, pixels, "");
    CHECK(proto::encode_image(sample) == "AAAAAAAAgD4AAAA/AACAPw==");
    const auto decoded = proto::decode_image("AAAAAAAAgD4AAAA/AACAPw==", 2, 2);
    CHECK(std::memcmp(decoded.data(), pixels.data(), sizeof(float) * 4) == 0);
}

TEST_CASE("addresses parse") {
    const auto tcp = transport::Address::parse("127.0.0.1:7860");
    CHECK(tcp.kind == transport::Address::Kind::Tcp);
    CHECK(tcp.port == 7860);
    const auto unix_addr = transport::Address::parse("unix:/tmp/irs.sock");
    CHECK(unix_addr.kind == transport::Address::Kind::Unix);
    CHECK(unix_addr.path == "/tmp/irs.sock");
    CHECK_THROWS_AS(transport::Address::parse("nohost"), Error);
    CHECK_THROWS_AS(transport::Address::parse("host:99999"), Error);
}

TEST_CASE("handshake against the toy server") {
    RunningServer running;
    auto conn = transport::Connection::connect(running.address(), 2000ms);
    const auto d = handshake(conn);
    CHECK(d.name == ToySampler::kName);
    CHECK(d.modality == Modality::Vector);
    CHECK(d.latent_dim == 2);
    CHECK(d.embed_dim == 3);
}

TEST_CASE("requests before the handshake are refused") {
    const ToyServer server(toy_sampler(), toy_embedder(), {});
    bool negotiated = false;
    const auto reply = server.handle(proto::DenoiseRequest{0, {0.0, 0.0}, 4, ""}, negotiated);
    CHECK(std::holds_alternative<proto::ErrorReply>(reply));
}

TEST_CASE("version mismatch names both versions") {
    ToyServer::Options options;
    options.advertised_version = 2;
    RunningServer running(options);
    auto conn = transport::Connection::connect(running.address(), 2000ms);
    try {
        handshake(conn);
        FAIL("expected mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("client speaks 1, server speaks 2") != std::string::npos);
    }
}

TEST_CASE("remote and in-process search are bit-identical") {
    RunningServer running;
    const auto remote = RemoteBackend::connect(running.address(), {2000ms, 4});
    const auto local_sampler = toy_sampler();

    const auto local_embedder = toy_embedder();
    const auto prompts = PromptPair::from_caption("a city street");
    const Verifier local_verifier(local_embedder, prompts, {});
    const Verifier remote_verifier(remote, prompts, {});

    SearchConfig config;
    config.strategy = Strategy::ZeroOrder;
    config.n_candidates = 3;
    config.iterations = 4;
    config.base_seed = 42;
    const auto a = run_search({*local_sampler, local_verifier, "a city street", 1}, config, NfeLedger(336));
    const auto b = run_search({*remote, remote_verifier, "a city street", 4}, config, NfeLedger(336));
    CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
}

TEST_CASE("remote backend over a unix socket") {
    const std::string path = "/tmp/irscale_test_" + std::to_string(::getpid()) + ".sock";
    ToyServer::Options options;
    options.address = transport::Address::parse("unix:" + path);
    RunningServer running(options);
    const auto remote = RemoteBackend::connect(options.address, {2000ms, 1});
    const auto latent = sample_prior(5, 2);
    CHECK(remote->generate(latent, 28, "x") == toy_sampler()->generate(latent, 28, "x"));
}

TEST_CASE("steps above the backend maximum are rejected before transmission") {
    std::atomic<int> requests{0};
    ScriptedServer server(toy_descriptor(), [&](transport::Connection& conn) {
        for (;;) {
            conn.receive();
            ++requests;
            conn.send(proto::ErrorReply{"unexpected"});
        }
    });
    const auto remote = RemoteBackend::connect(server.address(), {2000ms, 1});
    NfeLedger ledger(10000);
    CHECK_THROWS_AS(remote_denoise(*remote, sample_prior(1, 2), 65, "x", ledger), Error);
    CHECK_THROWS_AS(remote->generate(sample_prior(1, 3), 8, "x"), Error);
    CHECK(ledger.spent() == 0);
    CHECK(requests == 0);
}

TEST_CASE("backend errors and dropped connections leave the ledger unchanged") {
    SUBCASE("error reply") {
        ScriptedServer server(toy_descriptor(), [](transport::Connection& conn) {
            conn.receive();
            conn.send(proto::ErrorReply{"GPU fell over"});
        });
        const auto remote = RemoteBackend::connect(server.address(), {2000ms, 1});
        NfeLedger ledger(100);
        try {
            remote_denoise(*remote, sample_prior(1, 2), 8, "x", ledger);
            FAIL("expected backend error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Backend);
            CHECK(std::string(e.what()).find("GPU fell over") != std::string::npos);
        }
        CHECK(ledger.spent() == 0);
    }
    SUBCASE("dropped mid-request") {
        ScriptedServer server(toy_descriptor(), [](transport::Connection& conn) { conn.receive(); });
        const auto remote = RemoteBackend::connect(server.address(), {2000ms, 1});
        NfeLedger ledger(100);
        try {
            remote_denoise(*remote, sample_prior(1, 2), 8, "x", ledger);
            FAIL("expected connection error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Connection);
            CHECK(e.retriable());
        }
        CHECK(ledger.spent() == 0);
    }
}

TEST_CASE("malformed embeddings are rejected") {
    SUBCASE("all zeros") {
        ScriptedServer server(toy_descriptor(), [](transport::Connection& conn) {
            conn.receive();
            conn.send(proto::EmbeddingReply{{0.0, 0.0, 0.0}});
        });
        const auto remote = RemoteBackend::connect(server.address(), {2000ms, 1});
        try {
            remote->embed_text("An INFRARED photo of x.");
            FAIL("expected degenerate embedding");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Numerical);
        }
    }
    SUBCASE("wrong length") {
        ScriptedServer server(toy_descriptor(), [](transport::Connection& conn) {
            conn.receive();
            conn.send(proto::EmbeddingReply{{1.0, 0.0}});
        });
        const auto remote = RemoteBackend::connect(server.address(), {2000ms, 1});
        try {
            remote->embed_sample(Sample::vector({1.0, 2.0}, ""));
            FAIL("expected length error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Protocol);
        }
    }
}

TEST_CASE("a silent backend times out") {
    std::atomic<bool> done{false};
    ScriptedServer server(toy_descriptor(), [&](transport::Connection& conn) {
        conn.receive();
        while (!done) std::this_thread::sleep_for(10ms);
    });
    const auto remote = RemoteBackend::connect(server.address(), {150ms, 1});
    const auto start = std::chrono::steady_clock::now();
    try {
        remote->generate(sample_prior(1, 2), 8, "x");
        FAIL("expected timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Connection);
    }
    CHECK(std::chrono::steady_clock::now() - start < 2s);
    done = true;
}

TEST_CASE("connecting to a closed port fails with a connection error") {
    int port = 0;
    {
        transport::Listener probe(transport::Address::parse("127.0.0.1:0"));
        port = probe.port();
    }
    try {
        RemoteBackend::connect(transport::Address::parse("127.0.0.1:" + std::to_string(port)), {500ms, 1});
        FAIL("expected connection failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Connection);
    }
}
