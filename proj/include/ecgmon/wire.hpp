#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace ecgmon {

// Frame layout (little-endian throughout):
//   magic "EFG1" | length u32 (covers type..payload) | type u8 |
//   session_id u32 | beat_id u32 | payload
// Every type has a fixed payload size; frames above 1 MiB are rejected.

inline constexpr std::array<uint8_t, 4> kWireMagic = {'E', 'F', 'G', '1'};
inline constexpr uint32_t kMaxFrameLen = 1u << 20; // declared-length cap
inline constexpr size_t kFrameHeaderBytes = 8;     // magic + length
inline constexpr size_t kFrameFixedBytes = 9;      // type + session + beat
inline constexpr int kFeatureMapValues = 135;      // 27 positions x 5 channels

enum class MsgType : uint8_t {
    hello = 1,
    heart_rate = 2,
    feature_map = 3,
    classification = 4,
    rate_change = 5,
    noise_report = 6,
};

struct HelloPayload {
    std::array<uint8_t, 32> weights_hash{};
    uint16_t fs = 0;
    bool operator==(const HelloPayload&) const = default;
};

struct HeartRatePayload {
    float bpm = 0.0f;
    bool operator==(const HeartRatePayload&) const = default;
};

// Cut activation in (position-major, channel-minor) order.
struct FeatureMapPayload {
    std::array<float, kFeatureMapValues> values{};
    bool operator==(const FeatureMapPayload&) const = default;
};

struct ClassificationPayload {
    uint8_t beat_class = 0; // 0..3 -> N,S,V,F
    std::array<float, 4> probs{};
    bool operator==(const ClassificationPayload&) const = default;
};

struct RateChangePayload {
    uint16_t new_fs = 0;
    uint8_t reason = 0;
    bool operator==(const RateChangePayload&) const = default;
};

struct NoiseReportPayload {
    uint32_t window_start = 0;
    uint8_t reason = 0;
    bool operator==(const NoiseReportPayload&) const = default;
};

struct WireMessage {
    uint32_t session_id = 0;
    uint32_t beat_id = 0;
    std::variant<HelloPayload, HeartRatePayload, FeatureMapPayload, ClassificationPayload,
                 RateChangePayload, NoiseReportPayload>
        payload;

    MsgType type() const { return static_cast<MsgType>(payload.index() + 1); }
    bool operator==(const WireMessage&) const = default;
};

size_t payload_size(MsgType t);
size_t frame_size(MsgType t); // header + fixed + payload

std::vector<uint8_t> encode(const WireMessage& msg);

// Decodes exactly one frame. Throws ProtocolError naming the offending
// field; never reads past the declared length.
WireMessage decode(std::span<const uint8_t> frame);

// Incremental reassembly over a byte stream.
class FrameReader {
public:
    void append(std::span<const uint8_t> bytes);
    // Returns the next complete frame (magic..payload) or nullopt if more
    // bytes are needed. Throws ProtocolError on bad magic or oversize length.
    std::optional<std::vector<uint8_t>> next_frame();
    size_t buffered() const { return buf_.size() - pos_; }

private:
    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

const char* to_string(MsgType t);

} // namespace ecgmon
