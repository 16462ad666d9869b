// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "irscale/protocol.hpp"
#include "irscale/toy_diffusion.hpp"
#include "irscale/transport.hpp"
#include "irscale/verifier.hpp"

namespace irscale {

/// Serves the toy sampler and toy embedding backend over protocol v1.
class ToyServer {
public:
    struct Options {
        transport::Address address = transport::Address::parse("127.0.0.1:0");
        /// Version announced in handshake replies; only differs from kVersion in tests.
        int advertised_version = protocol::kVersion;
        int concurrency = 8;
    };

    ToyServer(std::shared_ptr<const ToySampler> sampler, std::shared_ptr<const ToyEmbeddingBackend> embedder,
              Options options);
    ~ToyServer();
    ToyServer(const ToyServer&) = delete;
    ToyServer& operator=(const ToyServer&) = delete;

    /// Binds and starts accepting on a background thread.
    void start();
    /// Closes the listener and all client connections, then joins.
    void stop();

    int port() const;
    const protocol::BackendDescriptor& descriptor() const noexcept { return m_descriptor; }

    /// Request handler, exposed for testing without sockets. `negotiated`
    /// tracks whether this connection completed a matching handshake.
    protocol::Message handle(const protocol::Message& request, bool& negotiated) const;

private:
    void serve_connection(std::shared_ptr<transport::Connection> conn);

    std::shared_ptr<const ToySampler> m_sampler;
    std::shared_ptr<const ToyEmbeddingBackend> m_embedder;
    Options m_options;
    protocol::BackendDescriptor m_descriptor;

    std::unique_ptr<transport::Listener> m_listener;
    std::thread m_accept_thread;
    std::mutex m_mutex;
    std::vector<std::shared_ptr<transport::Connection>> m_connections;
    std::vector<std::thread> m_workers;
    std::atomic<bool> m_running{false};
};

}  // namespace irscale
