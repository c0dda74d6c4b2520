#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ecgmon/link.hpp"
#include "ecgmon/model.hpp"
#include "ecgmon/wire.hpp"

namespace ecgmon {

struct FogConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 0; // 0 = ephemeral
    std::string weights_path;
    int max_sessions = 8;
    std::string log_path; // empty = keep lines in memory only
};

// Shared message semantics for the TCP server and the in-process loopback:
// HELLO answers with the local model hash (mismatch closes the session),
// FEATURE_MAP runs the fog subgraph and answers with a classification,
// everything else is logged without a reply.
class FogHandler {
public:
    FogHandler(ModelGraph model);

    // Throws ProtocolError on model-version mismatch.
    std::optional<WireMessage> handle(const WireMessage& msg);

    const ModelGraph& model() const { return model_; }
    const std::array<uint8_t, 32>& hash() const { return hash_; }
    std::vector<std::string> drain_log();

private:
    ModelGraph model_;
    std::array<uint8_t, 32> hash_;
    std::mutex log_mutex_;
    std::vector<std::string> log_;
};

// Same protocol with no sockets; byte counters accumulate encoded frame
// sizes as if transmitted.
class LoopbackLink : public FogLink {
public:
    explicit LoopbackLink(FogHandler& handler) : handler_(handler) {}
    std::optional<WireMessage> send(const WireMessage& msg) override;

private:
    FogHandler& handler_;
};

// Blocking TCP service, one thread per session up to cfg.max_sessions.
// Startup validates the fog subgraph parameter count.
class FogServer {
public:
    explicit FogServer(ModelGraph model, FogConfig cfg = {});
    ~FogServer();

    void start();
    void stop();
    uint16_t port() const { return port_; }
    FogHandler& handler() { return *handler_; }

private:
    void accept_loop();
    void session_loop(int fd);

    FogConfig cfg_;
    std::unique_ptr<FogHandler> handler_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<int> active_sessions_{0};
    std::thread accept_thread_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
    std::vector<int> session_fds_; // guarded by workers_mutex_
};

// Client side of the TCP transport.
class SocketLink : public FogLink {
public:
    SocketLink(const std::string& host, uint16_t port);
    ~SocketLink();

    std::optional<WireMessage> send(const WireMessage& msg) override;

private:
    WireMessage read_reply();
    int fd_ = -1;
    FrameReader reader_;
};

} // namespace ecgmon
