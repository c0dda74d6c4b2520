#include "ecgmon/fog.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ecgmon/errors.hpp"
#include "ecgmon/sha256.hpp"

namespace ecgmon {

FogHandler::FogHandler(ModelGraph model)
    : model_(std::move(model)), hash_(weights_hash(model_)) {}

std::optional<WireMessage> FogHandler::handle(const WireMessage& msg) {
    switch (msg.type()) {
    case MsgType::hello: {
        const auto& hello = std::get<HelloPayload>(msg.payload);
        if (hello.weights_hash != hash_) {
            throw ProtocolError("model version mismatch in HELLO");
        }
        WireMessage reply;
        reply.session_id = msg.session_id;
        reply.beat_id = 0;
        HelloPayload p;
        p.weights_hash = hash_;
        p.fs = hello.fs;
        reply.payload = p;
        return reply;
    }
    case MsgType::feature_map: {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& fm = std::get<FeatureMapPayload>(msg.payload);
        Tensor cut = Tensor::make2(kCutLen, kCutCh);
        std::memcpy(cut.data.data(), fm.values.data(), fm.values.size() * sizeof(float));
        const Tensor probs = forward_fog(model_, cut);

        ClassificationPayload cls;
        int best = 0;
        for (int i = 1; i < 4; ++i) {
            if (probs.data[static_cast<size_t>(i)] > probs.data[static_cast<size_t>(best)]) best = i;
        }
        cls.beat_class = static_cast<uint8_t>(best);
        for (int i = 0; i < 4; ++i) cls.probs[static_cast<size_t>(i)] = probs.data[static_cast<size_t>(i)];

        const auto t1 = std::chrono::steady_clock::now();
        const long us = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
        char line[160];
        std::snprintf(line, sizeof(line),
                      "session=%u beat=%u class=%c probs=%.4f,%.4f,%.4f,%.4f latency_us=%ld",
                      msg.session_id, msg.beat_id, "NSVF"[best], cls.probs[0], cls.probs[1],
                      cls.probs[2], cls.probs[3], us);
        {
            std::lock_guard<std::mutex> lock(log_mutex_);
            log_.emplace_back(line);
        }

        WireMessage reply;
        reply.session_id = msg.session_id;
        reply.beat_id = msg.beat_id;
        reply.payload = cls;
        return reply;
    }
    case MsgType::heart_rate:
    case MsgType::rate_change:
    case MsgType::noise_report: {
        char line[128];
        std::snprintf(line, sizeof(line), "session=%u beat=%u type=%s", msg.session_id,
                      msg.beat_id, to_string(msg.type()));
        std::lock_guard<std::mutex> lock(log_mutex_);
        log_.emplace_back(line);
        return std::nullopt;
    }
    case MsgType::classification:
        throw ProtocolError("unexpected CLASSIFICATION from a client");
    }
    throw ProtocolError("unknown message type");
}

std::vector<std::string> FogHandler::drain_log() {
    std::lock_guard<std::mutex> lock(log_mutex_);
    std::vector<std::string> out = std::move(log_);
    log_.clear();
    return out;
}

std::optional<WireMessage> LoopbackLink::send(const WireMessage& msg) {
    bytes_sent_ += frame_size(msg.type());
    std::optional<WireMessage> reply = handler_.handle(msg);
    if (reply) bytes_received_ += frame_size(reply->type());
    return reply;
}

// ---------------------------------------------------------------------------
// TCP transport

namespace {

void write_all(int fd, const uint8_t* data, size_t n) {
    size_t off = 0;
    while (off < n) {
        const ssize_t w = ::send(fd, data + off, n - off, MSG_NOSIGNAL);
        if (w <= 0) throw ProtocolError("socket write failed");
        off += static_cast<size_t>(w);
    }
}

} // namespace

FogServer::FogServer(ModelGraph model, FogConfig cfg)
    : cfg_(std::move(cfg)), handler_(std::make_unique<FogHandler>(std::move(model))) {}

FogServer::~FogServer() { stop(); }

void FogServer::start() {
    if (cfg_.max_sessions < 1) throw ParameterError("fog: max_sessions must be >= 1");
    if (fog_params(handler_->model()) != kFogParamTotal) {
        throw ParameterError("fog: model fog-subgraph parameter count is wrong");
    }

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ProtocolError("fog: cannot create socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(cfg_.port);
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) {
        throw ParameterError("fog: bad listen address " + cfg_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw ProtocolError("fog: bind failed");
    }
    if (::listen(listen_fd_, 16) != 0) throw ProtocolError("fog: listen failed");

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void FogServer::stop() {
    if (!running_.exchange(false)) {
        if (accept_thread_.joinable()) accept_thread_.join();
        return;
    }
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        // unblock session threads stuck in read()
        std::lock_guard<std::mutex> lock(workers_mutex_);
        for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lock(workers_mutex_);
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        if (t.joinable()) t.join();
    }
}

void FogServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        if (active_sessions_.load() >= cfg_.max_sessions) {
            ::close(fd); // refused: the client observes a closed session
            continue;
        }
        ++active_sessions_;
        std::lock_guard<std::mutex> lock(workers_mutex_);
        session_fds_.push_back(fd);
        workers_.emplace_back([this, fd] {
            session_loop(fd);
            --active_sessions_;
            std::lock_guard<std::mutex> lock2(workers_mutex_);
            session_fds_.erase(std::remove(session_fds_.begin(), session_fds_.end(), fd),
                               session_fds_.end());
        });
    }
}

void FogServer::session_loop(int fd) {
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    FrameReader reader;
    uint8_t chunk[4096];
    try {
        while (running_) {
            const ssize_t r = ::read(fd, chunk, sizeof(chunk));
            if (r <= 0) break;
            reader.append(std::span<const uint8_t>(chunk, static_cast<size_t>(r)));
            while (auto frame = reader.next_frame()) {
                const WireMessage msg = decode(*frame);
                const std::optional<WireMessage> reply = handler_->handle(msg);
                if (reply) {
                    const std::vector<uint8_t> bytes = encode(*reply);
                    write_all(fd, bytes.data(), bytes.size());
                }
            }
        }
    } catch (const ProtocolError&) {
        // malformed frame or version mismatch: the session ends here
    }
    ::close(fd);

    if (!cfg_.log_path.empty()) {
        std::ofstream out(cfg_.log_path, std::ios::app);
        for (const auto& line : handler_->drain_log()) out << line << '\n';
    }
}

SocketLink::SocketLink(const std::string& host, uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw ProtocolError("link: cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw ParameterError("link: bad address " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("link: connect failed");
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

SocketLink::~SocketLink() {
    if (fd_ >= 0) ::close(fd_);
}

WireMessage SocketLink::read_reply() {
    uint8_t chunk[4096];
    while (true) {
        if (auto frame = reader_.next_frame()) {
            bytes_received_ += frame->size();
            return decode(*frame);
        }
        const ssize_t r = ::read(fd_, chunk, sizeof(chunk));
        if (r <= 0) throw ProtocolError("link: connection closed by the fog service");
        reader_.append(std::span<const uint8_t>(chunk, static_cast<size_t>(r)));
    }
}

std::optional<WireMessage> SocketLink::send(const WireMessage& msg) {
    if (fd_ < 0) throw ProtocolError("link: not connected");
    const std::vector<uint8_t> bytes = encode(msg);
    write_all(fd_, bytes.data(), bytes.size());
    bytes_sent_ += bytes.size();
    if (msg.type() == MsgType::hello || msg.type() == MsgType::feature_map) {
        return read_reply();
    }
    return std::nullopt;
}

} // namespace ecgmon
