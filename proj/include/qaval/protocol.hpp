#pragma once

// Scorer wire protocol, version "v1".
//
// Records are length-delimited UTF-8 JSON: the payload byte count in ASCII
// decimal, a single '\n', then the payload. The client opens with a hello
// record and the server must answer with the same version:
//
//   {"type":"hello","v":"v1"}
//   {"type":"score","id":"...","question":"...","context_tokens":["null",...]}
//   {"type":"score","id":"...","p_ans":0.9,"p_start":[...],"p_end":[...]}
//   {"type":"health","id":"..."}  ->  {"type":"health","id":"...","status":"ok"}
//
// A failed request is answered with {"type":"error","id":"...","message":"..."}.
// Responses may arrive in any order; ids match them to requests.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qaval/types.hpp"

namespace qaval::protocol {

inline constexpr std::string_view kVersion = "v1";
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

class ProtocolError : public Error {
public:
    using Error::Error;
};

struct Endpoint {
    enum class Kind { Tcp, Unix };
    Kind kind = Kind::Tcp;
    std::string host;  // Tcp only
    std::uint16_t port = 0;
    std::string path;  // Unix only

    // "tcp://host:port" or "unix:/path/to/socket".
    static Endpoint parse(std::string_view text);
    std::string to_string() const;
};

std::string encode_frame(std::string_view payload);

// Owns a socket file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    // Shuts down both directions, waking any thread blocked in a read.
    void shutdown() noexcept;

    // Writes a whole frame. Throws ProtocolError on failure.
    void write_frame(std::string_view payload) const;

private:
    int fd_ = -1;
};

// Throws ProtocolError naming the endpoint when it cannot be reached.
Socket connect_to(const Endpoint& endpoint);

// Binds and listens. For Tcp with port 0, the chosen port is written back
// into `endpoint`.
Socket listen_on(Endpoint& endpoint, int backlog = 16);

// Incremental frame decoder over a socket.
class FrameReader {
public:
    explicit FrameReader(int fd) : fd_(fd) {}

    // Next payload, or nullopt on a clean end of stream between frames.
    // Throws ProtocolError on malformed framing or a read error.
    std::optional<std::string> next();

    // True when a full frame is already buffered.
    bool has_buffered_frame() const;

private:
    std::optional<std::string> take_buffered();

    int fd_;
    std::string buffer_;
};

}  // namespace qaval::protocol
