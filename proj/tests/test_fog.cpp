#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <random>
#include <thread>

#include "ecgmon/errors.hpp"
#include "ecgmon/fog.hpp"

using namespace ecgmon;

namespace {

Tensor random_beat(std::mt19937& rng) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    Tensor t = Tensor::make2(105, 1);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

WireMessage feature_map_message(uint32_t session, uint32_t beat, const Tensor& cut) {
    FeatureMapPayload fm;
    std::memcpy(fm.values.data(), cut.data.data(), fm.values.size() * sizeof(float));
    return WireMessage{session, beat, fm};
}

WireMessage hello_message(uint32_t session, const std::array<uint8_t, 32>& hash) {
    HelloPayload p;
    p.weights_hash = hash;
    p.fs = 130;
    return WireMessage{session, 0, p};
}

} // namespace

TEST_SUITE("loopback link") {
    TEST_CASE("feature map answers with a matching classification") {
        const ModelGraph model = build_model(60);
        FogHandler handler(model);
        LoopbackLink link(handler);
        std::mt19937 rng(61);

        for (uint32_t beat = 1; beat <= 20; ++beat) {
            const Tensor x = random_beat(rng);
            const EdgeForward ef = forward_edge(model, x);
            const auto reply = link.send(feature_map_message(9, beat, ef.cut));
            REQUIRE(reply.has_value());
            CHECK(reply->type() == MsgType::classification);
            CHECK(reply->session_id == 9);
            CHECK(reply->beat_id == beat);
            const auto& cls = std::get<ClassificationPayload>(reply->payload);
            double sum = 0.0;
            for (float p : cls.probs) sum += p;
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }

    TEST_CASE("split classification over loopback equals the monolithic path bit-for-bit") {
        const ModelGraph model = build_model(62);
        FogHandler handler(model);
        LoopbackLink link(handler);
        std::mt19937 rng(63);

        for (int trial = 0; trial < 200; ++trial) {
            const Tensor x = random_beat(rng);
            const ForwardResult mono = forward(model, x);
            const EdgeForward ef = forward_edge(model, x);
            const auto reply = link.send(feature_map_message(1, static_cast<uint32_t>(trial), ef.cut));
            REQUIRE(reply.has_value());
            const auto& cls = std::get<ClassificationPayload>(reply->payload);
            for (int i = 0; i < 4; ++i) {
                CHECK(cls.probs[static_cast<size_t>(i)] == mono.head2.data[static_cast<size_t>(i)]);
            }
        }
    }

    TEST_CASE("byte counters accumulate frame sizes") {
        const ModelGraph model = build_model(64);
        FogHandler handler(model);
        LoopbackLink link(handler);
        for (uint32_t i = 1; i <= 10; ++i) {
            link.send(WireMessage{1, i, HeartRatePayload{70.0f}});
        }
        CHECK(link.bytes_sent() == 10 * frame_size(MsgType::heart_rate));
        CHECK(link.bytes_received() == 0); // one-way messages have no reply
    }

    TEST_CASE("out-of-order beat ids are preserved in replies") {
        const ModelGraph model = build_model(65);
        FogHandler handler(model);
        LoopbackLink link(handler);
        std::mt19937 rng(66);
        const std::vector<uint32_t> ids = {5, 2, 9, 1, 1000, 3};
        for (uint32_t id : ids) {
            const Tensor x = random_beat(rng);
            const auto reply = link.send(feature_map_message(4, id, forward_edge(model, x).cut));
            REQUIRE(reply.has_value());
            CHECK(reply->beat_id == id);
        }
    }

    TEST_CASE("hello hash mismatch is a protocol error") {
        const ModelGraph model = build_model(67);
        FogHandler handler(model);
        LoopbackLink link(handler);
        std::array<uint8_t, 32> wrong{};
        wrong[0] = 0xde;
        CHECK_THROWS_AS(link.send(hello_message(1, wrong)), ProtocolError);
        CHECK_NOTHROW(link.send(hello_message(1, handler.hash())));
    }
}

TEST_SUITE("fog server") {
    TEST_CASE("hello handshake and classification over a real socket") {
        FogServer server(build_model(70));
        server.start();
        REQUIRE(server.port() != 0);

        const ModelGraph local = build_model(70);
        SocketLink link("127.0.0.1", server.port());
        const auto hello_reply = link.send(hello_message(1, weights_hash(local)));
        REQUIRE(hello_reply.has_value());
        CHECK(hello_reply->type() == MsgType::hello);

        std::mt19937 rng(71);
        for (uint32_t beat = 1; beat <= 100; ++beat) {
            const Tensor x = random_beat(rng);
            const ForwardResult mono = forward(local, x);
            const auto reply = link.send(feature_map_message(1, beat, forward_edge(local, x).cut));
            REQUIRE(reply.has_value());
            CHECK(reply->beat_id == beat);
            const auto& cls = std::get<ClassificationPayload>(reply->payload);
            for (int i = 0; i < 4; ++i) {
                CHECK(cls.probs[static_cast<size_t>(i)] == mono.head2.data[static_cast<size_t>(i)]);
            }
        }
        server.stop();
    }

    TEST_CASE("version mismatch closes the session") {
        FogServer server(build_model(72));
        server.start();
        SocketLink link("127.0.0.1", server.port());
        std::array<uint8_t, 32> wrong{};
        CHECK_THROWS_AS(link.send(hello_message(1, wrong)), ProtocolError);
        server.stop();
    }

    TEST_CASE("two concurrent sessions interleave independently") {
        const ModelGraph model = build_model(73);
        FogServer server(build_model(73));
        server.start();

        std::atomic<int> failures{0};
        auto worker = [&](uint32_t session_id, uint32_t seed) {
            try {
                SocketLink link("127.0.0.1", server.port());
                std::mt19937 rng(seed);
                for (uint32_t beat = 1; beat <= 50; ++beat) {
                    const Tensor x = random_beat(rng);
                    const auto reply =
                        link.send(feature_map_message(session_id, beat, forward_edge(model, x).cut));
                    if (!reply || reply->session_id != session_id || reply->beat_id != beat) {
                        ++failures;
                    }
                }
            } catch (...) {
                ++failures;
            }
        };
        std::thread a(worker, 1, 80);
        std::thread b(worker, 2, 81);
        a.join();
        b.join();
        CHECK(failures.load() == 0);
        server.stop();
    }

    TEST_CASE("session cap refuses extra connections") {
        FogConfig cfg;
        cfg.max_sessions = 1;
        FogServer server(build_model(74), cfg);
        server.start();

        const ModelGraph model = build_model(74);
        SocketLink first("127.0.0.1", server.port());
        std::mt19937 rng(75);
        const auto ok = first.send(feature_map_message(1, 1, forward_edge(model, random_beat(rng)).cut));
        CHECK(ok.has_value());

        // the second session is closed before any reply
        bool refused = false;
        try {
            SocketLink second("127.0.0.1", server.port());
            (void)second.send(feature_map_message(2, 1, forward_edge(model, random_beat(rng)).cut));
        } catch (const ProtocolError&) {
            refused = true;
        }
        CHECK(refused);
        server.stop();
    }

    TEST_CASE("malformed bytes close the session") {
        FogServer server(build_model(76));
        server.start();
        SocketLink link("127.0.0.1", server.port());

        // valid traffic first proves the session is alive
        WireMessage m;
        m.session_id = 1;
        m.payload = HeartRatePayload{60.0f};
        CHECK_NOTHROW(link.send(m));

        // a second raw connection feeding garbage gets closed by the server
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd >= 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(server.port());
        ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
        const uint8_t junk[16] = {'J', 'U', 'N', 'K', 9, 9, 9, 9, 1, 2, 3, 4, 5, 6, 7, 8};
        (void)::send(fd, junk, sizeof(junk), MSG_NOSIGNAL);
        uint8_t buf[8];
        const ssize_t got = ::read(fd, buf, sizeof(buf)); // server closes: EOF
        CHECK(got <= 0);
        ::close(fd);
        server.stop();
    }

    TEST_CASE("startup validates the fog parameter count") {
        std::vector<LayerSpec> layers(3);
        layers[0] = {.kind = LayerKind::conv1d, .name = "c", .kernel = 3, .stride = 1,
                     .out_ch = 2, .relu = true};
        layers[1] = {.kind = LayerKind::dense, .name = "fc1", .out_ch = 2, .softmax = true};
        layers[2] = {.kind = LayerKind::dense, .name = "fc2", .out_ch = 4, .softmax = true};
        FogServer server(assemble_model(std::move(layers), 105, 1, 1, 1));
        CHECK_THROWS_AS(server.start(), ParameterError);
    }
}
