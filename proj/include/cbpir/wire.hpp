#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cbpir/scheme.hpp"

namespace cbpir {

// Length-prefixed binary frames over a stream socket. The length word is
// big-endian and counts the type byte plus the payload; matrix payloads keep
// their little-endian in-memory format.

enum class MsgType : std::uint8_t {
    upload_db = 0x01,
    query = 0x02,
    response = 0x03,
    error = 0x04,
    params = 0x05,
};

struct Frame {
    MsgType type = MsgType::error;
    Bytes payload;

    bool operator==(const Frame&) const = default;
};

// CBPIR_MAX_FRAME env override; default 1 GiB
std::uint64_t max_frame_bytes();

Bytes encode_frame(const Frame& frame);
// requires the buffer to hold exactly one complete frame
Frame decode_frame(std::span<const std::uint8_t> wire, std::uint64_t cap = max_frame_bytes());

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

Endpoint parse_endpoint(const std::string& text); // "host:port"
std::string endpoint_from_env();                  // CBPIR_ADDR or "127.0.0.1:0"

// Serves the read-only database over TCP; one request-response exchange at a
// time per connection, any number of concurrent connections. A server may
// start empty and accept exactly one UPLOAD_DB.
class WireServer {
  public:
    explicit WireServer(const Endpoint& endpoint,
                        std::optional<std::pair<SchemeParams, Database>> preloaded = {});
    ~WireServer();
    WireServer(const WireServer&) = delete;
    WireServer& operator=(const WireServer&) = delete;

    std::uint16_t port() const { return port_; }
    void stop();

  private:
    void accept_loop();
    void serve_connection(int fd);
    Frame handle(const Frame& request);

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    bool stopping_ = false;
    std::thread acceptor_;
    std::mutex mu_; // guards db_, params_, conn_fds_, conn_threads_
    std::optional<SchemeParams> params_;
    std::optional<Database> db_;
    std::set<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
};

class WireClient {
  public:
    explicit WireClient(const Endpoint& endpoint);
    ~WireClient();
    WireClient(const WireClient&) = delete;
    WireClient& operator=(const WireClient&) = delete;

    SchemeParams fetch_params();
    void upload_db(const SchemeParams& params, const Database& db);
    ResponseMatrix query(const SchemeParams& params, const QueryMatrix& q);

  private:
    Frame roundtrip(const Frame& request);

    int fd_ = -1;
};

} // namespace cbpir
