#include "cbpir/wire.hpp"

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cbpir/errors.hpp"
#include "cbpir/serial.hpp"

namespace cbpir {

namespace {

constexpr std::uint64_t kDefaultMaxFrame = 1ull << 30;

bool valid_type(std::uint8_t t) { return t >= 0x01 && t <= 0x05; }

// false only on clean EOF before the first byte
bool read_exact(int fd, std::uint8_t* dst, std::size_t n, bool eof_ok) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, dst + got, n - got, 0);
        if (r == 0) {
            if (got == 0 && eof_ok)
                return false;
            throw WireError("connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR)
                continue;
            throw WireError(std::string("recv failed: ") + std::strerror(errno));
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

void write_all(int fd, const std::uint8_t* src, std::size_t n) {
    std::size_t sent = 0;
    while (sent < n) {
        const ssize_t r = ::send(fd, src + sent, n - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR)
                continue;
            throw WireError(std::string("send failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(r);
    }
}

// one frame off the socket; nullopt on clean EOF at a frame boundary
std::optional<Frame> read_frame(int fd, std::uint64_t cap) {
    std::uint8_t head[4];
    if (!read_exact(fd, head, 4, true))
        return std::nullopt;
    const std::uint32_t len = (std::uint32_t(head[0]) << 24) | (std::uint32_t(head[1]) << 16) |
                              (std::uint32_t(head[2]) << 8) | std::uint32_t(head[3]);
    if (len < 1)
        throw WireError("frame length must cover the type byte");
    if (len > cap)
        throw WireError("frame exceeds the configured size cap");
    std::uint8_t type = 0;
    read_exact(fd, &type, 1, false);
    if (!valid_type(type))
        throw WireError("unknown message type");
    Frame f;
    f.type = static_cast<MsgType>(type);
    f.payload.resize(len - 1);
    if (len > 1)
        read_exact(fd, f.payload.data(), f.payload.size(), false);
    return f;
}

void write_frame(int fd, const Frame& f) {
    const Bytes wire = encode_frame(f);
    write_all(fd, wire.data(), wire.size());
}

Frame error_frame(const char* code) {
    Frame f;
    f.type = MsgType::error;
    f.payload.assign(code, code + std::strlen(code));
    return f;
}

int open_socket(const Endpoint& ep, bool listening) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (listening)
        hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
        throw WireError("cannot resolve endpoint " + ep.host + ":" + port);
    int fd = -1;
    std::string last_err = "no usable address";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0)
            continue;
        if (listening) {
            const int one = 1;
            ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
            if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0)
                break;
        } else if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            break;
        }
        last_err = std::strerror(errno);
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0)
        throw WireError((listening ? "cannot listen on " : "cannot connect to ") + ep.host + ":" +
                        port + " (" + last_err + ")");
    return fd;
}

} // namespace

std::uint64_t max_frame_bytes() {
    const char* env = std::getenv("CBPIR_MAX_FRAME");
    if (env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != nullptr && *end == '\0' && v > 0)
            return v;
    }
    return kDefaultMaxFrame;
}

Bytes encode_frame(const Frame& frame) {
    if (frame.payload.size() > 0xFFFFFFFFull - 1)
        throw WireError("payload too large for a 32-bit frame length");
    Bytes wire;
    wire.reserve(5 + frame.payload.size());
    put_u32be(wire, static_cast<std::uint32_t>(frame.payload.size() + 1));
    wire.push_back(static_cast<std::uint8_t>(frame.type));
    wire.insert(wire.end(), frame.payload.begin(), frame.payload.end());
    return wire;
}

Frame decode_frame(std::span<const std::uint8_t> wire, std::uint64_t cap) {
    ByteReader in(wire);
    std::uint32_t len = 0;
    try {
        len = in.u32be();
    } catch (const SerialError&) {
        throw WireError("truncated frame header");
    }
    if (len < 1)
        throw WireError("frame length must cover the type byte");
    if (len > cap)
        throw WireError("frame exceeds the configured size cap");
    if (in.remaining() != len)
        throw WireError(in.remaining() < len ? "truncated frame" : "trailing bytes after frame");
    const std::uint8_t type = in.u8();
    if (!valid_type(type))
        throw WireError("unknown message type");
    Frame f;
    f.type = static_cast<MsgType>(type);
    const auto payload = in.take(len - 1);
    f.payload.assign(payload.begin(), payload.end());
    return f;
}

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw WireError("endpoint must be host:port");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    char* end = nullptr;
    const std::string port_s = text.substr(colon + 1);
    const unsigned long port = std::strtoul(port_s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || port > 65535)
        throw WireError("invalid port in endpoint");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

std::string endpoint_from_env() {
    const char* env = std::getenv("CBPIR_ADDR");
    return env != nullptr && *env != '\0' ? env : "127.0.0.1:0";
}

WireServer::WireServer(const Endpoint& endpoint,
                       std::optional<std::pair<SchemeParams, Database>> preloaded) {
    if (preloaded) {
        preloaded->first.validate();
        params_ = std::move(preloaded->first);
        db_ = std::move(preloaded->second);
    }
    listen_fd_ = open_socket(endpoint, true);
    sockaddr_in addr{};
    socklen_t alen = sizeof addr;
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &alen) != 0) {
        ::close(listen_fd_);
        throw WireError("getsockname failed");
    }
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

WireServer::~WireServer() { stop(); }

void WireServer::accept_loop() {
    for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR)
                continue;
            return; // listener closed by stop()
        }
        std::lock_guard<std::mutex> lk(mu_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        conn_fds_.insert(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void WireServer::serve_connection(int fd) {
    const std::uint64_t cap = max_frame_bytes();
    for (;;) {
        std::optional<Frame> request;
        try {
            request = read_frame(fd, cap);
        } catch (const WireError& e) {
            try {
                // the stream is desynchronized; report and hang up
                write_frame(fd, error_frame(std::strstr(e.what(), "cap") != nullptr
                                                ? "frame-too-large"
                                                : "bad-frame"));
            } catch (const WireError&) {
            }
            break;
        }
        if (!request)
            break;
        Frame reply;
        try {
            reply = handle(*request);
        } catch (const Error&) {
            reply = error_frame("internal-error");
        }
        try {
            write_frame(fd, reply);
        } catch (const WireError&) {
            break;
        }
    }
    ::close(fd);
    std::lock_guard<std::mutex> lk(mu_);
    conn_fds_.erase(fd);
}

Frame WireServer::handle(const Frame& request) {
    switch (request.type) {
    case MsgType::params: {
        std::lock_guard<std::mutex> lk(mu_);
        if (!params_)
            return error_frame("no-database");
        const auto h = params_->header();
        return {MsgType::params, Bytes(h.begin(), h.end())};
    }
    case MsgType::upload_db: {
        try {
            auto parsed = database_from_bytes(request.payload);
            std::lock_guard<std::mutex> lk(mu_);
            if (db_)
                return error_frame("db-already-loaded");
            params_ = std::move(parsed.first);
            db_ = std::move(parsed.second);
            const auto h = params_->header();
            return {MsgType::params, Bytes(h.begin(), h.end())};
        } catch (const SerialError&) {
            return error_frame("bad-payload");
        }
    }
    case MsgType::query: {
        try {
            auto parsed = query_from_bytes(request.payload);
            const Database* db = nullptr;
            SchemeParams params;
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (!db_)
                    return error_frame("no-database");
                if (!(parsed.first == *params_))
                    return error_frame("param-mismatch");
                db = &*db_; // set-once: stable after load
                params = *params_;
            }
            const ResponseMatrix response = server_respond(params, *db, parsed.second);
            return {MsgType::response, response_to_bytes(params, response)};
        } catch (const SerialError&) {
            return error_frame("bad-payload");
        }
    }
    default:
        return error_frame("unexpected-type");
    }
}

void WireServer::stop() {
    {
        std::lock_guard<std::mutex> lk(mu_);
        if (stopping_)
            return;
        stopping_ = true;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable())
        acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lk(mu_);
        for (int fd : conn_fds_)
            ::shutdown(fd, SHUT_RDWR);
        workers.swap(conn_threads_);
    }
    for (auto& t : workers)
        t.join();
}

WireClient::WireClient(const Endpoint& endpoint) { fd_ = open_socket(endpoint, false); }

WireClient::~WireClient() {
    if (fd_ >= 0)
        ::close(fd_);
}

Frame WireClient::roundtrip(const Frame& request) {
    write_frame(fd_, request);
    std::optional<Frame> reply = read_frame(fd_, max_frame_bytes());
    if (!reply)
        throw WireError("server closed the connection");
    if (reply->type == MsgType::error)
        throw WireError("server error: " +
                        std::string(reply->payload.begin(), reply->payload.end()));
    return std::move(*reply);
}

SchemeParams WireClient::fetch_params() {
    const Frame reply = roundtrip({MsgType::params, {}});
    if (reply.type != MsgType::params)
        throw WireError("unexpected reply type");
    ByteReader in(reply.payload);
    const SchemeParams p = SchemeParams::from_header(in);
    if (in.remaining() != 0)
        throw WireError("trailing bytes in params reply");
    return p;
}

void WireClient::upload_db(const SchemeParams& params, const Database& db) {
    const Frame reply = roundtrip({MsgType::upload_db, database_to_bytes(params, db)});
    if (reply.type != MsgType::params)
        throw WireError("unexpected reply type");
}

ResponseMatrix WireClient::query(const SchemeParams& params, const QueryMatrix& q) {
    const Frame reply = roundtrip({MsgType::query, query_to_bytes(params, q)});
    if (reply.type != MsgType::response)
        throw WireError("unexpected reply type");
    auto [p, response] = response_from_bytes(reply.payload);
    if (!(p == params))
        throw WireError("response params mismatch");
    return response;
}

} // namespace cbpir
