// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "irscale/sampler.hpp"
#include "irscale/transport.hpp"
#include "irscale/verifier.hpp"

namespace irscale {

/// Exchanges protocol versions on a fresh connection and returns the
/// server's descriptor. A differing server version is a fatal protocol error.
protocol::BackendDescriptor handshake(transport::Connection& connection, int client_version = protocol::kVersion);

struct RemoteOptions {
    std::chrono::milliseconds timeout = transport::kDefaultTimeout;
    /// Upper bound on open connections; also capped by the server's concurrency.
    int pool_size = 1;
};

/// Generative model and encoders served over protocol v1. One request is in
/// flight per connection; concurrent callers draw from a connection pool.
class RemoteBackend final : public Sampler, public EmbeddingBackend {
public:
    static std::shared_ptr<RemoteBackend> connect(const transport::Address& address, RemoteOptions options = {});

    const protocol::BackendDescriptor& descriptor() const noexcept { return m_descriptor; }
    const transport::Address& address() const noexcept { return m_address; }

    std::string name() const override { return m_descriptor.name; }
    std::size_t latent_dim() const override { return m_descriptor.latent_dim; }
    int max_steps() const override { return m_descriptor.max_steps; }
    std::size_t embed_dim() const override { return m_descriptor.embed_dim; }
    bool reentrant() const override { return true; }

    /// Rejects steps > max_steps or a wrong latent dimension before sending.
    Sample generate(const Latent& latent, int steps, std::string_view prompt) const override;

    /// Rejects wrong-length and all-zero embeddings.
    std::vector<double> embed_sample(const Sample& sample) const override;
    std::vector<double> embed_text(const std::string& text) const override;

private:
    RemoteBackend(transport::Address address, RemoteOptions options);

    protocol::Message request(const protocol::Message& message) const;
    std::vector<double> embed(const protocol::EmbedRequest& req) const;

    transport::Address m_address;
    RemoteOptions m_options;
    protocol::BackendDescriptor m_descriptor;

    mutable std::mutex m_mutex;
    mutable std::condition_variable m_available;
    mutable std::vector<transport::Connection> m_idle;
    mutable int m_open = 0;
};

/// Budget-checked remote generation. NFEs are charged only when a sample
/// comes back; failed calls leave the ledger untouched.
Sample remote_denoise(const RemoteBackend& backend, const Latent& latent, int steps, std::string_view prompt,
                      NfeLedger& ledger);

}  // namespace irscale
