#include "qaval/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace qaval::protocol {

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint ep;
    if (text.starts_with("tcp://")) {
        auto rest = text.substr(6);
        auto colon = rest.rfind(':');
        if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size()) {
            throw ProtocolError("endpoint '" + std::string(text) + "' must look like tcp://host:port");
        }
        unsigned port = 0;
        auto port_text = rest.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535) {
            throw ProtocolError("endpoint '" + std::string(text) + "' has an invalid port");
        }
        ep.kind = Kind::Tcp;
        ep.host = std::string(rest.substr(0, colon));
        ep.port = static_cast<std::uint16_t>(port);
        return ep;
    }
    if (text.starts_with("unix:")) {
        ep.kind = Kind::Unix;
        ep.path = std::string(text.substr(5));
        if (ep.path.empty()) throw ProtocolError("endpoint '" + std::string(text) + "' has an empty socket path");
        if (ep.path.size() >= sizeof(sockaddr_un::sun_path)) {
            throw ProtocolError("socket path too long: " + ep.path);
        }
        return ep;
    }
    throw ProtocolError("unsupported endpoint '" + std::string(text) + "' (expected tcp://host:port or unix:/path)");
}

std::string Endpoint::to_string() const {
    if (kind == Kind::Unix) return "unix:" + path;
    return "tcp://" + host + ":" + std::to_string(port);
}

std::string encode_frame(std::string_view payload) {
    std::string out = std::to_string(payload.size());
    out += '\n';
    out.append(payload);
    return out;
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

Socket::~Socket() {
    if (fd_ >= 0) ::close(fd_);
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::write_frame(std::string_view payload) const {
    if (payload.size() > kMaxFrameBytes) throw ProtocolError("frame exceeds the maximum size");
    const std::string frame = encode_frame(payload);
    std::size_t sent = 0;
    while (sent < frame.size()) {
        ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError("write failed: " + errno_text());
        }
        sent += static_cast<std::size_t>(n);
    }
}

Socket connect_to(const Endpoint& endpoint) {
    if (endpoint.kind == Endpoint::Kind::Unix) {
        Socket sock(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!sock.valid()) throw ProtocolError("socket() failed: " + errno_text());
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        std::memcpy(addr.sun_path, endpoint.path.c_str(), endpoint.path.size() + 1);
        if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            throw ProtocolError("cannot connect to " + endpoint.to_string() + ": " + errno_text());
        }
        return sock;
    }

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const auto port = std::to_string(endpoint.port);
    if (int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result); rc != 0) {
        throw ProtocolError("cannot resolve " + endpoint.to_string() + ": " + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    for (addrinfo* ai = result; ai; ai = ai->ai_next) {
        Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!sock.valid()) {
            last_error = errno_text();
            continue;
        }
        if (::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            int one = 1;
            ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            ::freeaddrinfo(result);
            return sock;
        }
        last_error = errno_text();
    }
    ::freeaddrinfo(result);
    throw ProtocolError("cannot connect to " + endpoint.to_string() + ": " + last_error);
}

Socket listen_on(Endpoint& endpoint, int backlog) {
    if (endpoint.kind == Endpoint::Kind::Unix) {
        Socket sock(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!sock.valid()) throw ProtocolError("socket() failed: " + errno_text());
        ::unlink(endpoint.path.c_str());
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        std::memcpy(addr.sun_path, endpoint.path.c_str(), endpoint.path.size() + 1);
        if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
            ::listen(sock.fd(), backlog) != 0) {
            throw ProtocolError("cannot listen on " + endpoint.to_string() + ": " + errno_text());
        }
        return sock;
    }

    Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!sock.valid()) throw ProtocolError("socket() failed: " + errno_text());
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(endpoint.port);
    if (::inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) != 1) {
        throw ProtocolError("listen address must be a numeric IPv4 address: " + endpoint.host);
    }
    if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(sock.fd(), backlog) != 0) {
        throw ProtocolError("cannot listen on " + endpoint.to_string() + ": " + errno_text());
    }
    socklen_t len = sizeof(addr);
    ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    endpoint.port = ntohs(addr.sin_port);
    return sock;
}

bool FrameReader::has_buffered_frame() const {
    auto nl = buffer_.find('\n');
    if (nl == std::string::npos) return false;
    std::size_t len = 0;
    auto [ptr, ec] = std::from_chars(buffer_.data(), buffer_.data() + nl, len);
    if (ec != std::errc{} || ptr != buffer_.data() + nl) return true;  // malformed; next() reports it
    return buffer_.size() - nl - 1 >= len;
}

std::optional<std::string> FrameReader::take_buffered() {
    auto nl = buffer_.find('\n');
    if (nl == std::string::npos) {
        if (buffer_.size() > 20) throw ProtocolError("frame header too long");
        return std::nullopt;
    }
    std::size_t len = 0;
    auto [ptr, ec] = std::from_chars(buffer_.data(), buffer_.data() + nl, len);
    if (nl == 0 || ec != std::errc{} || ptr != buffer_.data() + nl) {
        throw ProtocolError("malformed frame header");
    }
    if (len > kMaxFrameBytes) throw ProtocolError("frame exceeds the maximum size");
    if (buffer_.size() - nl - 1 < len) return std::nullopt;
    std::string payload = buffer_.substr(nl + 1, len);
    buffer_.erase(0, nl + 1 + len);
    return payload;
}

std::optional<std::string> FrameReader::next() {
    char chunk[16384];
    while (true) {
        if (auto frame = take_buffered()) return frame;
        ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError("read failed: " + errno_text());
        }
        if (n == 0) {
            if (buffer_.empty()) return std::nullopt;
            throw ProtocolError("connection closed in the middle of a frame");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace qaval::protocol
