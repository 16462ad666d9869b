// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <utility>

#include "irscale/error.hpp"

namespace irscale::transport {

namespace {

[[noreturn]] void connection_error(const std::string& what) {
    throw Error(ErrorCode::Connection, "connection: " + what, /*retriable=*/true);
}

std::string errno_text() { return std::strerror(errno); }

void wait_for(int fd, short events, std::chrono::milliseconds timeout, const char* what) {
    pollfd p{fd, events, 0};
    for (;;) {
        const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc > 0) return;
        if (rc == 0) connection_error(std::string("timed out waiting to ") + what);
        if (errno != EINTR) connection_error(std::string("poll failed: ") + errno_text());
    }
}

sockaddr_un unix_address(const std::string& path) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) fail(ErrorCode::InvalidArgument, "unix socket path too long");
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    return addr;
}

}  // namespace

Address Address::parse(std::string_view text) {
    Address a;
    if (text.starts_with("unix:")) {
        a.kind = Kind::Unix;
        a.path = std::string(text.substr(5));
        if (a.path.empty()) fail(ErrorCode::InvalidArgument, "empty unix socket path");
        return a;
    }
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) fail(ErrorCode::InvalidArgument, "address must be HOST:PORT or unix:PATH");
    a.host = std::string(text.substr(0, colon));
    const auto port_text = text.substr(colon + 1);
    const auto res = std::from_chars(port_text.data(), port_text.data() + port_text.size(), a.port);
    if (res.ec != std::errc{} || res.ptr != port_text.data() + port_text.size() || a.port < 0 || a.port > 65535)
        fail(ErrorCode::InvalidArgument, "invalid port in address '" + std::string(text) + "'");
    if (a.host.empty()) a.host = "127.0.0.1";
    return a;
}

std::string Address::to_string() const {
    return kind == Kind::Unix ? "unix:" + path : host + ":" + std::to_string(port);
}

// ---------------------------------------------------------------------------

Connection::~Connection() {
    if (m_fd >= 0) ::close(m_fd);
}

Connection::Connection(Connection&& other) noexcept
    : m_fd(std::exchange(other.m_fd, -1)), m_timeout(other.m_timeout) {}

Connection& Connection::operator=(Connection&& other) noexcept {
    if (this != &other) {
        if (m_fd >= 0) ::close(m_fd);
        m_fd = std::exchange(other.m_fd, -1);
        m_timeout = other.m_timeout;
    }
    return *this;
}

Connection Connection::connect(const Address& address, std::chrono::milliseconds timeout) {
    int fd = -1;
    if (address.kind == Address::Kind::Unix) {
        fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (fd < 0) connection_error("socket: " + errno_text());
        const auto addr = unix_address(address.path);
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
            const auto err = errno_text();
            ::close(fd);
            connection_error("cannot reach " + address.to_string() + ": " + err);
        }
    } else {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* found = nullptr;
        const auto port = std::to_string(address.port);
        if (const int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &found); rc != 0)
            connection_error("cannot resolve " + address.host + ": " + ::gai_strerror(rc));
        std::string last_error = "no addresses";
        for (auto* ai = found; ai != nullptr && fd < 0; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, ai->ai_protocol);
            if (fd < 0) continue;
            int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
            if (rc != 0 && errno == EINPROGRESS) {
                pollfd p{fd, POLLOUT, 0};
                rc = ::poll(&p, 1, static_cast<int>(timeout.count())) == 1 ? 0 : -1;
                int so_error = rc == 0 ? 0 : ETIMEDOUT;
                socklen_t len = sizeof(so_error);
                if (rc == 0) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &so_error, &len);
                if (so_error != 0) {
                    errno = so_error;
                    rc = -1;
                }
            }
            if (rc != 0) {
                last_error = errno_text();
                ::close(fd);
                fd = -1;
            }
        }
        ::freeaddrinfo(found);
        if (fd < 0) connection_error("cannot reach " + address.to_string() + ": " + last_error);
        ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    Connection c(fd);
    c.set_timeout(timeout);
    return c;
}

void Connection::send_raw(std::string_view bytes) {
    if (m_fd < 0) connection_error("not connected");
    while (!bytes.empty()) {
        wait_for(m_fd, POLLOUT, m_timeout, "send");
        const ssize_t n = ::send(m_fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            connection_error("send failed: " + errno_text());
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

void Connection::send(const protocol::Message& message) {
    send_raw(protocol::frame(protocol::serialize(message)));
}

void Connection::read_exact(char* out, std::size_t n) {
    if (m_fd < 0) connection_error("not connected");
    while (n > 0) {
        wait_for(m_fd, POLLIN, m_timeout, "receive");
        const ssize_t got = ::recv(m_fd, out, n, 0);
        if (got == 0) connection_error("peer closed the connection");
        if (got < 0) {
            if (errno == EINTR) continue;
            connection_error("receive failed: " + errno_text());
        }
        out += got;
        n -= static_cast<std::size_t>(got);
    }
}

std::string Connection::receive_payload() {
    unsigned char header[4];
    read_exact(reinterpret_cast<char*>(header), 4);
    const std::uint32_t length = protocol::read_length_prefix(header);
    if (length > protocol::kMaxFrameBytes) fail(ErrorCode::Protocol, "protocol: frame length exceeds limit");
    std::string payload(length, '\0');
    read_exact(payload.data(), length);
    return payload;
}

protocol::Message Connection::receive() {
    return protocol::parse(receive_payload());
}

void Connection::shutdown() noexcept {
    if (m_fd >= 0) ::shutdown(m_fd, SHUT_RDWR);
}

// ---------------------------------------------------------------------------

Listener::Listener(const Address& address) {
    if (address.kind == Address::Kind::Unix) {
        m_fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (m_fd < 0) connection_error("socket: " + errno_text());
        ::unlink(address.path.c_str());
        const auto addr = unix_address(address.path);
        if (::bind(m_fd.load(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
            const auto err = errno_text();
            close();
            connection_error("cannot bind " + address.to_string() + ": " + err);
        }
        m_unix_path = address.path;
    } else {
        m_fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (m_fd < 0) connection_error("socket: " + errno_text());
        int one = 1;
        ::setsockopt(m_fd.load(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(address.port));
        const std::string host = address.host == "localhost" ? "127.0.0.1" : address.host;
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            close();
            fail(ErrorCode::InvalidArgument, "listen address must be a numeric IPv4 host: " + address.host);
        }
        if (::bind(m_fd.load(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
            const auto err = errno_text();
            close();
            connection_error("cannot bind " + address.to_string() + ": " + err);
        }
        socklen_t len = sizeof(addr);
        ::getsockname(m_fd.load(), reinterpret_cast<sockaddr*>(&addr), &len);
        m_port = ntohs(addr.sin_port);
    }
    if (::listen(m_fd.load(), 64) != 0) {
        const auto err = errno_text();
        close();
        connection_error("listen failed: " + err);
    }
}

Listener::~Listener() {
    close();
}

Connection Listener::accept() {
    for (;;) {
        const int fd = m_fd.load();
        if (fd < 0) return Connection{};
        const int client = ::accept4(fd, nullptr, nullptr, SOCK_CLOEXEC);
        if (client >= 0) {
            int one = 1;
            ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return Connection(client);
        }
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return Connection{};
    }
}

void Listener::close() noexcept {
    if (const int fd = m_fd.exchange(-1); fd >= 0) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }
    if (!m_unix_path.empty()) {
        ::unlink(m_unix_path.c_str());
        m_unix_path.clear();
    }
}

}  // namespace irscale::transport
