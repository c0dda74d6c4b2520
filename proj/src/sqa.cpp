#include "ecgmon/sqa.hpp"

#include <cmath>

#include "ecgmon/errors.hpp"

namespace ecgmon {

namespace {

template <typename T>
std::vector<double> moving_std_impl(std::span<const T> x, int win_len, double overlap_frac) {
    if (win_len < 2) throw ParameterError("moving_std: window must be at least 2 samples");
    if (static_cast<size_t>(win_len) > x.size()) {
        throw ParameterError("moving_std: window longer than signal");
    }
    if (overlap_frac <= 0.0 || overlap_frac >= 1.0) {
        throw ParameterError("moving_std: overlap must be inside (0, 1)");
    }
    const int hop = std::max(1, static_cast<int>(std::lround(win_len * (1.0 - overlap_frac))));
    const size_t count = (x.size() - static_cast<size_t>(win_len)) / static_cast<size_t>(hop) + 1;

    std::vector<double> out;
    out.reserve(count);
    for (size_t w = 0; w < count; ++w) {
        const size_t start = w * static_cast<size_t>(hop);
        double mean = 0.0;
        for (int k = 0; k < win_len; ++k) mean += static_cast<double>(x[start + static_cast<size_t>(k)]);
        mean /= win_len;
        double ss = 0.0;
        for (int k = 0; k < win_len; ++k) {
            const double d = static_cast<double>(x[start + static_cast<size_t>(k)]) - mean;
            ss += d * d;
        }
        out.push_back(std::sqrt(ss / (win_len - 1)));
    }
    return out;
}

} // namespace

std::vector<double> moving_std(std::span<const double> x, int win_len, double overlap_frac) {
    return moving_std_impl(x, win_len, overlap_frac);
}

std::vector<double> moving_std(std::span<const float> x, int win_len, double overlap_frac) {
    return moving_std_impl(x, win_len, overlap_frac);
}

SqaVerdict grade_window(const EcgSignal& window, const SqaConfig& cfg) {
    validate_signal(window);
    if (cfg.lambda_absence <= 0.0 || cfg.std_threshold <= 0.0) {
        throw ParameterError("grade_window: thresholds must be positive");
    }
    const double duration = window.duration_s();
    if (std::abs(duration - cfg.window_s) > 0.1 * cfg.window_s) {
        throw ParameterError("grade_window: window duration outside 10% of configured length");
    }

    SqaVerdict v;
    const NormalizedWindow norm = normalize_max(window.samples);
    if (norm.flat) {
        v.grade = SqaGrade::unacceptable;
        v.reason = SqaReason::flat;
        return v;
    }

    double mean_abs = 0.0;
    for (float s : norm.values) mean_abs += std::abs(static_cast<double>(s));
    mean_abs /= static_cast<double>(norm.values.size());
    v.mean_abs = mean_abs;
    if (mean_abs < cfg.lambda_absence) {
        v.grade = SqaGrade::unacceptable;
        v.reason = SqaReason::absence;
        return v;
    }

    const int win_len = cfg.mov_window_len > 0
                            ? cfg.mov_window_len
                            : static_cast<int>(std::lround(2.0 * window.fs / 5.0));
    const auto sigma = moving_std(std::span<const float>(norm.values), win_len, cfg.overlap_frac);
    double mean_sigma = 0.0;
    for (double s : sigma) mean_sigma += s;
    mean_sigma /= static_cast<double>(sigma.size());
    v.mean_sigma = mean_sigma;

    const bool above = mean_sigma > cfg.std_threshold;
    const bool acceptable = cfg.polarity == SqaPolarity::as_stated ? above : !above;
    v.grade = acceptable ? SqaGrade::acceptable : SqaGrade::unacceptable;
    v.reason = acceptable ? SqaReason::clean : SqaReason::abrupt_change;
    return v;
}

std::vector<std::pair<long, SqaVerdict>> grade_record(const EcgSignal& sig, const SqaConfig& cfg) {
    validate_signal(sig);
    std::vector<std::pair<long, SqaVerdict>> verdicts;
    const long win = std::lround(cfg.window_s * sig.fs);
    if (win <= 0) return verdicts;

    const long n = static_cast<long>(sig.samples.size());
    for (long start = 0; start + win <= n; start += win) {
        EcgSignal w;
        w.fs = sig.fs;
        w.start_index = sig.start_index + start;
        w.samples.assign(sig.samples.begin() + start, sig.samples.begin() + start + win);
        verdicts.emplace_back(start, grade_window(w, cfg));
    }
    return verdicts;
}

const char* to_string(SqaGrade g) {
    return g == SqaGrade::acceptable ? "acceptable" : "unacceptable";
}

const char* to_string(SqaReason r) {
    switch (r) {
    case SqaReason::clean: return "clean";
    case SqaReason::absence: return "absence";
    case SqaReason::abrupt_change: return "abrupt_change";
    case SqaReason::flat: return "flat";
    }
    return "?";
}

} // namespace ecgmon
