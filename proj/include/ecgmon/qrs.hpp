#pragma once

#include <array>
#include <optional>
#include <vector>

#include "ecgmon/signal.hpp"

namespace ecgmon {

inline constexpr double kCanonicalFs = 130.0;
inline constexpr int kBeatWindowLen = 105;
inline constexpr int kPreRSamples = 40;  // samples strictly before R
inline constexpr int kPostRSamples = 64; // samples strictly after R
inline constexpr double kMaxBpm = 180.0;

// Strictly increasing R-peak sample positions. Consecutive spacing honours
// the 180 BPM ceiling (>= fs/3 samples).
struct RPeakList {
    std::vector<long> indices;
    double fs = 0.0;
};

// One fixed-length beat window plus its RR context.
struct BeatSegment {
    std::array<float, kBeatWindowLen> window{};
    long r_index = 0;
    std::optional<double> rr_prev_s; // interval ending at the previous peak
    std::optional<double> rr_curr_s; // interval ending at this peak
    std::optional<double> hr_bpm;
    std::optional<BeatClass> label;
};

// Pan-Tompkins detection over a bandpassed signal: five-point derivative,
// squaring, 150 ms moving-window integration, adaptive dual thresholds with
// search-back and a 200 ms refractory period. Returned indices are refined
// to the local maximum of the input signal within +/-50 ms, then deduplicated
// against the 180 BPM spacing floor.
// Requires at least 3 s of signal. An empty list is a valid outcome.
RPeakList detect_rpeaks(const EcgSignal& sig);

// Cuts 105-sample windows (40 before R, R, 64 after) at the canonical
// 130 Hz rate. Peaks without full margins are skipped. RR context and
// heart rate are filled from neighbour spacing where available.
std::vector<BeatSegment> segment_beats(const EcgSignal& sig, const RPeakList& peaks);

// 60 / ((r_curr - r_prev)/fs). Throws ParameterError unless r_curr > r_prev.
double heart_rate(long r_prev, long r_curr, double fs);

} // namespace ecgmon
