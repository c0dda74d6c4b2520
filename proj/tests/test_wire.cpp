#include <doctest.h>

#include <random>

#include "ecgmon/errors.hpp"
#include "ecgmon/wire.hpp"

using namespace ecgmon;

namespace {

WireMessage random_message(std::mt19937& rng) {
    std::uniform_int_distribution<int> type_d(1, 6);
    std::uniform_int_distribution<uint32_t> id_d(0, 0xffffffffu);
    std::normal_distribution<float> f_d(0.0f, 10.0f);
    std::uniform_int_distribution<int> byte_d(0, 255);

    WireMessage m;
    m.session_id = id_d(rng);
    m.beat_id = id_d(rng);
    switch (static_cast<MsgType>(type_d(rng))) {
    case MsgType::hello: {
        HelloPayload p;
        for (auto& b : p.weights_hash) b = static_cast<uint8_t>(byte_d(rng));
        p.fs = static_cast<uint16_t>(byte_d(rng) * 2);
        m.payload = p;
        break;
    }
    case MsgType::heart_rate: {
        m.payload = HeartRatePayload{f_d(rng)};
        break;
    }
    case MsgType::feature_map: {
        FeatureMapPayload p;
        for (auto& v : p.values) v = f_d(rng);
        m.payload = p;
        break;
    }
    case MsgType::classification: {
        ClassificationPayload p;
        p.beat_class = static_cast<uint8_t>(byte_d(rng) % 4);
        for (auto& v : p.probs) v = f_d(rng);
        m.payload = p;
        break;
    }
    case MsgType::rate_change: {
        m.payload = RateChangePayload{static_cast<uint16_t>(byte_d(rng)),
                                      static_cast<uint8_t>(byte_d(rng) % 4)};
        break;
    }
    case MsgType::noise_report: {
        m.payload = NoiseReportPayload{id_d(rng), static_cast<uint8_t>(byte_d(rng) % 4)};
        break;
    }
    }
    return m;
}

} // namespace

TEST_SUITE("frame layout") {
    TEST_CASE("frame sizes follow the layout arithmetic") {
        // header 8 + fixed 9 + payload
        CHECK(frame_size(MsgType::hello) == 8 + 9 + 34);
        CHECK(frame_size(MsgType::heart_rate) == 21);
        CHECK(frame_size(MsgType::feature_map) == 8 + 9 + 540);
        CHECK(frame_size(MsgType::classification) == 8 + 9 + 17);
        CHECK(frame_size(MsgType::rate_change) == 8 + 9 + 3);
        CHECK(frame_size(MsgType::noise_report) == 8 + 9 + 5);
        CHECK(payload_size(MsgType::feature_map) == 540);
    }

    TEST_CASE("heart-rate frame encodes to its exact size") {
        WireMessage m;
        m.session_id = 1;
        m.beat_id = 7;
        m.payload = HeartRatePayload{78.0f};
        const auto bytes = encode(m);
        CHECK(bytes.size() == 21);
        CHECK(bytes[0] == 'E');
        CHECK(bytes[1] == 'F');
        CHECK(bytes[2] == 'G');
        CHECK(bytes[3] == '1');
        // little-endian length covers type..payload
        const uint32_t len = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) | (bytes[7] << 24);
        CHECK(len == 13);
        CHECK(bytes[8] == 2); // HEART_RATE
        const WireMessage back = decode(bytes);
        CHECK(back == m);
    }
}

TEST_SUITE("round trips") {
    TEST_CASE("decode inverts encode over random valid messages") {
        std::mt19937 rng(12345);
        for (int trial = 0; trial < 10000; ++trial) {
            const WireMessage m = random_message(rng);
            const WireMessage back = decode(encode(m));
            CHECK(back == m);
        }
    }
}

TEST_SUITE("malformed frames") {
    TEST_CASE("bad magic") {
        WireMessage m;
        m.payload = HeartRatePayload{60.0f};
        auto bytes = encode(m);
        bytes[0] = 'X';
        CHECK_THROWS_AS(decode(bytes), ProtocolError);
    }

    TEST_CASE("declared length above the cap") {
        WireMessage m;
        m.payload = HeartRatePayload{60.0f};
        auto bytes = encode(m);
        bytes[4] = 0xff;
        bytes[5] = 0xff;
        bytes[6] = 0xff;
        bytes[7] = 0x3b; // ~1e9
        CHECK_THROWS_WITH_AS(decode(bytes), doctest::Contains("cap"), ProtocolError);
    }

    TEST_CASE("frame size disagreeing with the declared length") {
        WireMessage m;
        m.payload = HeartRatePayload{60.0f};
        auto bytes = encode(m);
        bytes.push_back(0);
        CHECK_THROWS_AS(decode(bytes), ProtocolError);
        bytes.resize(bytes.size() - 2);
        CHECK_THROWS_AS(decode(bytes), ProtocolError);
    }

    TEST_CASE("unknown type") {
        WireMessage m;
        m.payload = HeartRatePayload{60.0f};
        auto bytes = encode(m);
        bytes[8] = 9;
        CHECK_THROWS_WITH_AS(decode(bytes), doctest::Contains("type"), ProtocolError);
    }

    TEST_CASE("payload size mismatched to type") {
        // heart-rate declared length with a feature-map type byte
        WireMessage m;
        m.payload = HeartRatePayload{60.0f};
        auto bytes = encode(m);
        bytes[8] = 3;
        CHECK_THROWS_WITH_AS(decode(bytes), doctest::Contains("payload"), ProtocolError);
    }

    TEST_CASE("empty and tiny frames") {
        CHECK_THROWS_AS(decode(std::vector<uint8_t>{}), ProtocolError);
        CHECK_THROWS_AS(decode(std::vector<uint8_t>{'E', 'F', 'G'}), ProtocolError);
        CHECK_THROWS_AS(decode(std::vector<uint8_t>{'E', 'F', 'G', '1', 1, 0}), ProtocolError);
    }

    TEST_CASE("random byte fuzz never crashes the decoder") {
        std::mt19937 rng(777);
        std::uniform_int_distribution<int> len_d(0, 700);
        std::uniform_int_distribution<int> byte_d(0, 255);
        long decoded = 0, rejected = 0;
        for (int trial = 0; trial < 20000; ++trial) {
            std::vector<uint8_t> bytes(static_cast<size_t>(len_d(rng)));
            for (auto& b : bytes) b = static_cast<uint8_t>(byte_d(rng));
            if (trial % 3 == 0 && bytes.size() >= 8) {
                // plant a valid magic so deeper paths get exercised
                bytes[0] = 'E';
                bytes[1] = 'F';
                bytes[2] = 'G';
                bytes[3] = '1';
            }
            try {
                (void)decode(bytes);
                ++decoded;
            } catch (const ProtocolError&) {
                ++rejected;
            }
        }
        CHECK(decoded + rejected == 20000);
        CHECK(rejected > 19000); // nearly everything random must be rejected
    }
}

TEST_SUITE("frame reader") {
    TEST_CASE("reassembles frames from arbitrary chunking") {
        std::mt19937 rng(31);
        std::vector<WireMessage> sent;
        std::vector<uint8_t> stream;
        for (int i = 0; i < 50; ++i) {
            const WireMessage m = random_message(rng);
            const auto bytes = encode(m);
            stream.insert(stream.end(), bytes.begin(), bytes.end());
            sent.push_back(m);
        }

        FrameReader reader;
        std::vector<WireMessage> received;
        std::uniform_int_distribution<size_t> chunk_d(1, 97);
        size_t at = 0;
        while (at < stream.size()) {
            const size_t n = std::min(chunk_d(rng), stream.size() - at);
            reader.append(std::span<const uint8_t>(&stream[at], n));
            at += n;
            while (auto frame = reader.next_frame()) {
                received.push_back(decode(*frame));
            }
        }
        REQUIRE(received.size() == sent.size());
        for (size_t i = 0; i < sent.size(); ++i) CHECK(received[i] == sent[i]);
        CHECK(reader.buffered() == 0);
    }

    TEST_CASE("stream with bad magic fails fast") {
        FrameReader reader;
        const std::vector<uint8_t> junk = {'J', 'U', 'N', 'K', 1, 2, 3, 4, 5};
        reader.append(junk);
        CHECK_THROWS_AS(reader.next_frame(), ProtocolError);
    }
}
