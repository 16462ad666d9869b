// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

#include "irscale/protocol.hpp"

namespace irscale::transport {

inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};

/// "HOST:PORT" for TCP or "unix:PATH" for a local socket.
struct Address {
    enum class Kind { Tcp, Unix };
    Kind kind = Kind::Tcp;
    std::string host;
    int port = 0;
    std::string path;

    static Address parse(std::string_view text);
    std::string to_string() const;
};

/// A negative timeout waits indefinitely.
///
/// Owning socket handle carrying framed messages. Transport failures raise
/// retriable ErrorCode::Connection errors; framing/JSON errors raise
/// ErrorCode::Protocol.
class Connection {
public:
    Connection() = default;
    explicit Connection(int fd) noexcept : m_fd(fd) {}
    ~Connection();
    Connection(Connection&& other) noexcept;
    Connection& operator=(Connection&& other) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    static Connection connect(const Address& address, std::chrono::milliseconds timeout = kDefaultTimeout);

    bool valid() const noexcept { return m_fd >= 0; }
    void set_timeout(std::chrono::milliseconds timeout) noexcept { m_timeout = timeout; }

    void send_raw(std::string_view bytes);
    void send(const protocol::Message& message);
    /// Returns the raw JSON payload of the next frame.
    std::string receive_payload();
    protocol::Message receive();

    /// Unblocks any pending receive from another thread.
    void shutdown() noexcept;

private:
    void read_exact(char* out, std::size_t n);

    int m_fd = -1;
    std::chrono::milliseconds m_timeout = kDefaultTimeout;
};

class Listener {
public:
    explicit Listener(const Address& address);
    ~Listener();
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    /// The bound TCP port (useful when binding port 0).
    int port() const noexcept { return m_port; }

    /// Blocks until a client connects; returns an invalid Connection after close().
    Connection accept();
    void close() noexcept;

private:
    std::atomic<int> m_fd{-1};
    int m_port = 0;
    std::string m_unix_path;
};

}  // namespace irscale::transport
