#pragma once

#include <cstdint>
#include <optional>

#include "ecgmon/wire.hpp"

namespace ecgmon {

// Transport abstraction between the edge session and the fog service.
// send() returns the reply for request/reply types (HELLO, FEATURE_MAP)
// and nullopt for one-way types. Implementations throw ProtocolError on
// link or protocol failure and account transmitted bytes as if on the wire.
class FogLink {
public:
    virtual ~FogLink() = default;

    virtual std::optional<WireMessage> send(const WireMessage& msg) = 0;

    uint64_t bytes_sent() const { return bytes_sent_; }
    uint64_t bytes_received() const { return bytes_received_; }

protected:
    uint64_t bytes_sent_ = 0;
    uint64_t bytes_received_ = 0;
};

} // namespace ecgmon
