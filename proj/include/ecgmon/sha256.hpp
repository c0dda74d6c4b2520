#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace ecgmon {

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
std::string hex(std::span<const uint8_t> bytes);

} // namespace ecgmon
