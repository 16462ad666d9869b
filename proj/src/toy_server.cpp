// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/toy_server.hpp"

#include <sstream>

#include "irscale/error.hpp"

namespace irscale {

ToyServer::ToyServer(std::shared_ptr<const ToySampler> sampler, std::shared_ptr<const ToyEmbeddingBackend> embedder,
                     Options options)
    : m_sampler(std::move(sampler)), m_embedder(std::move(embedder)), m_options(std::move(options)) {
    if (!m_sampler || !m_embedder) fail(ErrorCode::InvalidArgument, "toy server needs a sampler and an embedder");
    m_descriptor.name = m_sampler->name();
    m_descriptor.modality = Modality::Vector;
    m_descriptor.latent_dim = m_sampler->latent_dim();
    m_descriptor.embed_dim = m_embedder->embed_dim();
    m_descriptor.max_steps = m_sampler->max_steps();
    m_descriptor.concurrency = m_options.concurrency;
}

ToyServer::~ToyServer() {
    stop();
}

protocol::Message ToyServer::handle(const protocol::Message& request, bool& negotiated) const {
    using namespace protocol;
    if (const auto* hello = std::get_if<Handshake>(&request)) {
        negotiated = hello->version == m_options.advertised_version;
        return HandshakeOk{m_options.advertised_version, m_descriptor};
    }
    if (!negotiated) return ErrorReply{"handshake required before requests"};

    try {
        if (const auto* req = std::get_if<DenoiseRequest>(&request)) {
            if (req->steps <= 0 || req->steps > m_descriptor.max_steps) {
                std::ostringstream msg;
                msg << "steps " << req->steps << " outside [1, " << m_descriptor.max_steps << "]";
                return ErrorReply{msg.str()};
            }
            Latent latent;
            latent.seed = req->seed;
            latent.values = req->latent;
            return SampleReply{m_sampler->generate(latent, req->steps, req->prompt)};
        }
        if (const auto* req = std::get_if<EmbedRequest>(&request)) {
            if (const auto* text = std::get_if<std::string>(&req->payload))
                return EmbeddingReply{m_embedder->embed_text(*text)};
            return EmbeddingReply{m_embedder->embed_sample(std::get<Sample>(req->payload))};
        }
    } catch (const std::exception& e) {
        return ErrorReply{e.what()};
    }
    return ErrorReply{std::string("unexpected message type '") + type_name(request) + "'"};
}

void ToyServer::serve_connection(std::shared_ptr<transport::Connection> conn) {
    conn->set_timeout(std::chrono::milliseconds(-1));
    bool negotiated = false;
    while (m_running) {
        std::string payload;
        try {
            payload = conn->receive_payload();
        } catch (const Error&) {
            break;
        }
        protocol::Message reply;
        try {
            reply = handle(protocol::parse(payload), negotiated);
        } catch (const Error& e) {
            reply = protocol::ErrorReply{e.what()};
        }
        try {
            conn->send(reply);
        } catch (const Error&) {
            break;
        }
    }
    conn->shutdown();
}

void ToyServer::start() {
    if (m_running.exchange(true)) return;
    m_listener = std::make_unique<transport::Listener>(m_options.address);
    m_accept_thread = std::thread([this] {
        while (m_running) {
            auto conn = m_listener->accept();
            if (!conn.valid()) break;
            auto shared = std::make_shared<transport::Connection>(std::move(conn));
            std::lock_guard lock(m_mutex);
            if (!m_running) break;
            m_connections.push_back(shared);
            m_workers.emplace_back([this, shared] { serve_connection(shared); });
        }
    });
}

void ToyServer::stop() {
    if (!m_running.exchange(false)) return;
    if (m_listener) m_listener->close();
    if (m_accept_thread.joinable()) m_accept_thread.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(m_mutex);
        for (auto& c : m_connections) c->shutdown();
        workers.swap(m_workers);
        m_connections.clear();
    }
    for (auto& w : workers) w.join();
}

int ToyServer::port() const {
    return m_listener ? m_listener->port() : 0;
}

}  // namespace irscale
