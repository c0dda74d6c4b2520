#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ecgmon/signal.hpp"

namespace ecgmon {

enum class SqaGrade { acceptable, unacceptable };
enum class SqaReason { clean, absence, abrupt_change, flat };
enum class SqaPolarity { as_stated, inverted };

struct SqaConfig {
    double window_s = 10.0;
    double lambda_absence = 0.05; // rectified-mean threshold, normalized units
    double std_threshold = 0.2;   // mean moving-sigma threshold
    int mov_window_len = 0;       // samples; 0 derives round(2*fs/5) per window
    double overlap_frac = 0.70;
    SqaPolarity polarity = SqaPolarity::as_stated;
};

struct SqaVerdict {
    SqaGrade grade = SqaGrade::unacceptable;
    SqaReason reason = SqaReason::flat;
    double mean_abs = 0.0;   // rectified mean of the normalized window
    double mean_sigma = 0.0; // mean of the moving-std waveform
};

// Moving standard deviation: windows of win_len samples advanced by
// hop = max(1, round(win_len*(1-overlap_frac))); each sigma uses the window
// mean and (N-1) normalization. Output length floor((len-win)/hop)+1.
std::vector<double> moving_std(std::span<const double> x, int win_len, double overlap_frac);
std::vector<double> moving_std(std::span<const float> x, int win_len, double overlap_frac);

// Grades one window: max-normalize (flat short-circuits), rectified-mean
// absence test against lambda, then the moving-std abrupt-change test.
SqaVerdict grade_window(const EcgSignal& window, const SqaConfig& cfg);

// Tiles the record into consecutive non-overlapping windows of cfg.window_s
// (trailing partial window dropped) and grades each. Pairs are
// (window start sample index, verdict).
std::vector<std::pair<long, SqaVerdict>> grade_record(const EcgSignal& sig, const SqaConfig& cfg);

const char* to_string(SqaGrade g);
const char* to_string(SqaReason r);

} // namespace ecgmon
