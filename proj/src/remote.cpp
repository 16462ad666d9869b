// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/remote.hpp"

#include <algorithm>
#include <sstream>

#include "irscale/error.hpp"

namespace irscale {

namespace {

[[noreturn]] void backend_error(const std::string& message) {
    fail(ErrorCode::Backend, "backend error: " + message);
}

}  // namespace

protocol::BackendDescriptor handshake(transport::Connection& connection, int client_version) {
    connection.send(protocol::Handshake{client_version});
    const auto reply = connection.receive();
    if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) backend_error(err->message);
    const auto* ok = std::get_if<protocol::HandshakeOk>(&reply);
    if (!ok) fail(ErrorCode::Protocol, std::string("protocol: expected handshake_ok, got ") + protocol::type_name(reply));
    if (ok->version != client_version) {
        std::ostringstream msg;
        msg << "protocol version mismatch: client speaks " << client_version << ", server speaks " << ok->version;
        fail(ErrorCode::Protocol, msg.str());
    }
    return ok->descriptor;
}

RemoteBackend::RemoteBackend(transport::Address address, RemoteOptions options)
    : m_address(std::move(address)), m_options(options) {}

std::shared_ptr<RemoteBackend> RemoteBackend::connect(const transport::Address& address, RemoteOptions options) {
    std::shared_ptr<RemoteBackend> backend(new RemoteBackend(address, options));
    auto conn = transport::Connection::connect(address, options.timeout);
    backend->m_descriptor = handshake(conn);
    backend->m_options.pool_size =
        std::max(1, std::min(options.pool_size, backend->m_descriptor.concurrency));
    backend->m_idle.push_back(std::move(conn));
    backend->m_open = 1;
    return backend;
}

protocol::Message RemoteBackend::request(const protocol::Message& message) const {
    transport::Connection conn;
    {
        std::unique_lock lock(m_mutex);
        m_available.wait(lock, [&] { return !m_idle.empty() || m_open < m_options.pool_size; });
        if (!m_idle.empty()) {
            conn = std::move(m_idle.back());
            m_idle.pop_back();
        } else {
            ++m_open;
        }
    }

    const auto release = [&](bool keep) {
        std::lock_guard lock(m_mutex);
        if (keep)
            m_idle.push_back(std::move(conn));
        else
            --m_open;
        m_available.notify_one();
    };

    protocol::Message reply;
    try {
        if (!conn.valid()) {
            conn = transport::Connection::connect(m_address, m_options.timeout);
            if (handshake(conn) != m_descriptor)
                fail(ErrorCode::Protocol, "protocol: backend descriptor changed within a session");
        }
        conn.send(message);
        reply = conn.receive();
    } catch (...) {
        // The stream position is unknown after a failure, so the connection is dropped.
        release(false);
        throw;
    }
    release(true);
    if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) backend_error(err->message);
    return reply;
}

Sample RemoteBackend::generate(const Latent& latent, int steps, std::string_view prompt) const {
    if (steps <= 0 || steps > m_descriptor.max_steps) {
        std::ostringstream msg;
        msg << "steps " << steps << " outside [1, " << m_descriptor.max_steps << "] advertised by '"
            << m_descriptor.name << "'";
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    if (latent.dim() != m_descriptor.latent_dim) {
        std::ostringstream msg;
        msg << "latent dimension " << latent.dim() << " does not match backend dimension " << m_descriptor.latent_dim;
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    const auto reply = request(protocol::DenoiseRequest{latent.seed, latent.values, steps, std::string(prompt)});
    const auto* s = std::get_if<protocol::SampleReply>(&reply);
    if (!s) fail(ErrorCode::Protocol, std::string("protocol: expected sample, got ") + protocol::type_name(reply));
    Sample sample = s->sample;
    if (sample.modality != m_descriptor.modality) fail(ErrorCode::Protocol, "protocol: sample modality mismatch");
    if (sample.producer.empty()) sample.producer = m_descriptor.name;
    return sample;
}

std::vector<double> RemoteBackend::embed(const protocol::EmbedRequest& req) const {
    const auto reply = request(req);
    const auto* e = std::get_if<protocol::EmbeddingReply>(&reply);
    if (!e) fail(ErrorCode::Protocol, std::string("protocol: expected embedding, got ") + protocol::type_name(reply));
    if (e->values.size() != m_descriptor.embed_dim) {
        std::ostringstream msg;
        msg << "protocol: embedding has length " << e->values.size() << ", expected " << m_descriptor.embed_dim;
        fail(ErrorCode::Protocol, msg.str());
    }
    if (std::all_of(e->values.begin(), e->values.end(), [](double v) { return v == 0.0; }))
        fail(ErrorCode::Numerical, "degenerate embedding: backend returned all zeros");
    return e->values;
}

std::vector<double> RemoteBackend::embed_sample(const Sample& sample) const {
    return embed(protocol::EmbedRequest{sample});
}

std::vector<double> RemoteBackend::embed_text(const std::string& text) const {
    return embed(protocol::EmbedRequest{text});
}

Sample remote_denoise(const RemoteBackend& backend, const Latent& latent, int steps, std::string_view prompt,
                      NfeLedger& ledger) {
    return denoise(backend, latent, steps, prompt, ledger);
}

}  // namespace irscale
