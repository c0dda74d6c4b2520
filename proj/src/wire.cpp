#include "ecgmon/wire.hpp"

#include <cstring>

#include "ecgmon/errors.hpp"

namespace ecgmon {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Cursor {
public:
    Cursor(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    uint8_t u8(const char* field) {
        need(1, field);
        return bytes_[pos_++];
    }
    uint16_t u16(const char* field) {
        need(2, field);
        uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    uint32_t u32(const char* field) {
        need(4, field);
        uint32_t v = static_cast<uint32_t>(bytes_[pos_]) |
                     (static_cast<uint32_t>(bytes_[pos_ + 1]) << 8) |
                     (static_cast<uint32_t>(bytes_[pos_ + 2]) << 16) |
                     (static_cast<uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }
    float f32(const char* field) {
        const uint32_t bits = u32(field);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    void raw(uint8_t* dst, size_t n, const char* field) {
        need(n, field);
        std::memcpy(dst, &bytes_[pos_], n);
        pos_ += n;
    }
    size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(size_t n, const char* field) {
        if (pos_ + n > bytes_.size()) {
            throw ProtocolError(std::string("short read in field: ") + field);
        }
    }
    std::span<const uint8_t> bytes_;
    size_t pos_ = 0;
};

} // namespace

const char* to_string(MsgType t) {
    switch (t) {
    case MsgType::hello: return "HELLO";
    case MsgType::heart_rate: return "HEART_RATE";
    case MsgType::feature_map: return "FEATURE_MAP";
    case MsgType::classification: return "CLASSIFICATION";
    case MsgType::rate_change: return "RATE_CHANGE";
    case MsgType::noise_report: return "NOISE_REPORT";
    }
    return "?";
}

size_t payload_size(MsgType t) {
    switch (t) {
    case MsgType::hello: return 32 + 2;
    case MsgType::heart_rate: return 4;
    case MsgType::feature_map: return static_cast<size_t>(kFeatureMapValues) * 4;
    case MsgType::classification: return 1 + 4 * 4;
    case MsgType::rate_change: return 2 + 1;
    case MsgType::noise_report: return 4 + 1;
    }
    throw ProtocolError("unknown message type");
}

size_t frame_size(MsgType t) { return kFrameHeaderBytes + kFrameFixedBytes + payload_size(t); }

std::vector<uint8_t> encode(const WireMessage& msg) {
    const MsgType t = msg.type();
    std::vector<uint8_t> out;
    out.reserve(frame_size(t));
    out.insert(out.end(), kWireMagic.begin(), kWireMagic.end());
    put_u32(out, static_cast<uint32_t>(kFrameFixedBytes + payload_size(t)));
    out.push_back(static_cast<uint8_t>(t));
    put_u32(out, msg.session_id);
    put_u32(out, msg.beat_id);

    std::visit(
        [&out](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, HelloPayload>) {
                out.insert(out.end(), p.weights_hash.begin(), p.weights_hash.end());
                put_u16(out, p.fs);
            } else if constexpr (std::is_same_v<P, HeartRatePayload>) {
                put_f32(out, p.bpm);
            } else if constexpr (std::is_same_v<P, FeatureMapPayload>) {
                for (float v : p.values) put_f32(out, v);
            } else if constexpr (std::is_same_v<P, ClassificationPayload>) {
                out.push_back(p.beat_class);
                for (float v : p.probs) put_f32(out, v);
            } else if constexpr (std::is_same_v<P, RateChangePayload>) {
                put_u16(out, p.new_fs);
                out.push_back(p.reason);
            } else if constexpr (std::is_same_v<P, NoiseReportPayload>) {
                put_u32(out, p.window_start);
                out.push_back(p.reason);
            }
        },
        msg.payload);
    return out;
}

WireMessage decode(std::span<const uint8_t> frame) {
    Cursor cur(frame);
    uint8_t magic[4];
    cur.raw(magic, 4, "magic");
    if (std::memcmp(magic, kWireMagic.data(), 4) != 0) throw ProtocolError("bad magic");

    const uint32_t length = cur.u32("length");
    if (length > kMaxFrameLen) throw ProtocolError("declared length exceeds the 1 MiB cap");
    if (length < kFrameFixedBytes) throw ProtocolError("declared length below fixed fields");
    if (frame.size() != kFrameHeaderBytes + length) {
        throw ProtocolError("frame size disagrees with declared length");
    }

    const uint8_t type_byte = cur.u8("type");
    if (type_byte < 1 || type_byte > 6) throw ProtocolError("unknown message type");
    const MsgType type = static_cast<MsgType>(type_byte);
    if (length - kFrameFixedBytes != payload_size(type)) {
        throw ProtocolError(std::string("payload size mismatch for ") + to_string(type));
    }

    WireMessage msg;
    msg.session_id = cur.u32("session_id");
    msg.beat_id = cur.u32("beat_id");

    switch (type) {
    case MsgType::hello: {
        HelloPayload p;
        cur.raw(p.weights_hash.data(), p.weights_hash.size(), "weights_hash");
        p.fs = cur.u16("fs");
        msg.payload = p;
        break;
    }
    case MsgType::heart_rate: {
        HeartRatePayload p;
        p.bpm = cur.f32("bpm");
        msg.payload = p;
        break;
    }
    case MsgType::feature_map: {
        FeatureMapPayload p;
        for (auto& v : p.values) v = cur.f32("feature_map");
        msg.payload = p;
        break;
    }
    case MsgType::classification: {
        ClassificationPayload p;
        p.beat_class = cur.u8("class");
        for (auto& v : p.probs) v = cur.f32("probs");
        msg.payload = p;
        break;
    }
    case MsgType::rate_change: {
        RateChangePayload p;
        p.new_fs = cur.u16("new_fs");
        p.reason = cur.u8("reason");
        msg.payload = p;
        break;
    }
    case MsgType::noise_report: {
        NoiseReportPayload p;
        p.window_start = cur.u32("window_start");
        p.reason = cur.u8("reason");
        msg.payload = p;
        break;
    }
    }
    return msg;
}

void FrameReader::append(std::span<const uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<uint8_t>> FrameReader::next_frame() {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    const size_t avail = buf_.size() - pos_;
    if (avail < kFrameHeaderBytes) return std::nullopt;

    if (std::memcmp(&buf_[pos_], kWireMagic.data(), 4) != 0) throw ProtocolError("bad magic");
    const uint32_t length = static_cast<uint32_t>(buf_[pos_ + 4]) |
                            (static_cast<uint32_t>(buf_[pos_ + 5]) << 8) |
                            (static_cast<uint32_t>(buf_[pos_ + 6]) << 16) |
                            (static_cast<uint32_t>(buf_[pos_ + 7]) << 24);
    if (length > kMaxFrameLen) throw ProtocolError("declared length exceeds the 1 MiB cap");
    const size_t total = kFrameHeaderBytes + length;
    if (avail < total) return std::nullopt;

    std::vector<uint8_t> frame(buf_.begin() + static_cast<long>(pos_),
                               buf_.begin() + static_cast<long>(pos_ + total));
    pos_ += total;
    if (pos_ > (1u << 16)) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(pos_));
        pos_ = 0;
    }
    return frame;
}

} // namespace ecgmon
