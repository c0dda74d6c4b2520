#include "ecgmon/qrs.hpp"

#include <algorithm>
#include <cmath>

#include "ecgmon/errors.hpp"

namespace ecgmon {

double heart_rate(long r_prev, long r_curr, double fs) {
    if (fs <= 0.0) throw ParameterError("heart_rate: fs must be positive");
    if (r_curr <= r_prev) throw ParameterError("heart_rate: peak indices must increase");
    const double rr_s = static_cast<double>(r_curr - r_prev) / fs;
    return 60.0 / rr_s;
}

namespace {

// Local maximum of |x| is not wanted here: R waves in this pipeline are
// upright, so the refinement looks for the maximum value.
long refine_to_local_max(const std::vector<float>& x, long idx, long radius) {
    const long lo = std::max(0L, idx - radius);
    const long hi = std::min<long>(static_cast<long>(x.size()) - 1, idx + radius);
    long best = idx;
    for (long i = lo; i <= hi; ++i) {
        if (x[static_cast<size_t>(i)] > x[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

struct Candidate {
    long index; // position in the integrated waveform
    double value;
};

} // namespace

RPeakList detect_rpeaks(const EcgSignal& sig) {
    validate_signal(sig);
    const double fs = sig.fs;
    const long n = static_cast<long>(sig.samples.size());
    if (static_cast<double>(n) / fs < 3.0) {
        throw ParameterError("detect_rpeaks: need at least 3 s of signal");
    }

    RPeakList out;
    out.fs = fs;

    // Five-point derivative, squaring, moving-window integration (150 ms).
    std::vector<double> deriv(static_cast<size_t>(n), 0.0);
    for (long i = 2; i < n - 2; ++i) {
        const auto& x = sig.samples;
        deriv[static_cast<size_t>(i)] =
            (2.0 * x[static_cast<size_t>(i + 2)] + x[static_cast<size_t>(i + 1)] -
             x[static_cast<size_t>(i - 1)] - 2.0 * x[static_cast<size_t>(i - 2)]) *
            (fs / 8.0);
    }
    std::vector<double> squared(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        squared[static_cast<size_t>(i)] = deriv[static_cast<size_t>(i)] * deriv[static_cast<size_t>(i)];
    }
    const int mwi_len = std::max(1, static_cast<int>(std::lround(0.150 * fs)));
    std::vector<double> mwi(static_cast<size_t>(n), 0.0);
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        acc += squared[static_cast<size_t>(i)];
        if (i >= mwi_len) acc -= squared[static_cast<size_t>(i - mwi_len)];
        mwi[static_cast<size_t>(i)] = acc / mwi_len;
    }

    // Candidate peaks of the integrated waveform.
    std::vector<Candidate> cands;
    for (long i = 1; i + 1 < n; ++i) {
        const double v = mwi[static_cast<size_t>(i)];
        if (v > mwi[static_cast<size_t>(i - 1)] && v >= mwi[static_cast<size_t>(i + 1)] && v > 0.0) {
            cands.push_back({i, v});
        }
    }
    if (cands.empty()) return out;

    // Adaptive dual thresholds, learned over the first two seconds.
    const long learn_end = std::min<long>(n, static_cast<long>(std::lround(2.0 * fs)));
    double learn_max = 0.0, learn_mean = 0.0;
    for (long i = 0; i < learn_end; ++i) {
        learn_max = std::max(learn_max, mwi[static_cast<size_t>(i)]);
        learn_mean += mwi[static_cast<size_t>(i)];
    }
    learn_mean /= std::max(1L, learn_end);
    double spki = 0.5 * learn_max;
    double npki = 0.5 * learn_mean;

    const long refractory = std::lround(0.200 * fs);
    const long twave_window = std::lround(0.360 * fs);
    const long delay = (mwi_len - 1) / 2 + 2; // integrator + derivative group delay
    const long refine_radius = std::lround(0.050 * fs);

    // Peak slope (max |derivative| over the integration span) separates QRS
    // complexes from T waves of comparable integrated energy.
    auto peak_slope = [&](long idx) {
        double s = 0.0;
        for (long j = std::max(0L, idx - mwi_len); j <= idx; ++j) {
            s = std::max(s, std::abs(deriv[static_cast<size_t>(j)]));
        }
        return s;
    };

    std::vector<long> peaks;      // refined signal-domain indices
    std::vector<long> mwi_peaks;  // accepted candidate positions
    std::vector<double> rr_hist;  // recent RR intervals (samples)
    double last_slope = 0.0;      // slope of the last accepted peak
    size_t searchback_from = 0;   // first candidate after the last accepted peak

    auto rr_average = [&]() {
        if (rr_hist.empty()) return 0.0;
        const size_t take = std::min<size_t>(8, rr_hist.size());
        double s = 0.0;
        for (size_t i = rr_hist.size() - take; i < rr_hist.size(); ++i) s += rr_hist[i];
        return s / static_cast<double>(take);
    };

    // Accepts the strongest candidate within one refractory span of the
    // given one (the integrated waveform carries several local maxima per
    // QRS) and returns its index.
    auto accept = [&](size_t cand_idx, bool searchback) {
        size_t pick = cand_idx;
        for (size_t k = cand_idx + 1;
             k < cands.size() && cands[k].index - cands[cand_idx].index < refractory; ++k) {
            if (cands[k].value > cands[pick].value) pick = k;
        }
        const Candidate& c = cands[pick];
        if (searchback) {
            spki = 0.25 * c.value + 0.75 * spki;
        } else {
            spki = 0.125 * c.value + 0.875 * spki;
        }
        if (!mwi_peaks.empty()) rr_hist.push_back(static_cast<double>(c.index - mwi_peaks.back()));
        mwi_peaks.push_back(c.index);
        last_slope = peak_slope(c.index);
        const long approx = std::clamp(c.index - delay, 0L, n - 1);
        peaks.push_back(refine_to_local_max(sig.samples, approx, refine_radius));
        searchback_from = pick + 1;
        return pick;
    };

    for (size_t ci = 0; ci < cands.size(); ++ci) {
        const Candidate& c = cands[ci];

        // Search-back runs whenever the expected beat is overdue, before the
        // current candidate is judged.
        const double rr_avg = rr_average();
        if (rr_avg > 0.0 && !mwi_peaks.empty() &&
            static_cast<double>(c.index - mwi_peaks.back()) > 1.66 * rr_avg) {
            const double threshold2 = 0.5 * (npki + 0.25 * (spki - npki));
            size_t best = cands.size();
            for (size_t k = searchback_from; k < ci; ++k) {
                if (cands[k].index - mwi_peaks.back() < refractory) continue;
                if (cands[k].value > threshold2 &&
                    (best == cands.size() || cands[k].value > cands[best].value)) {
                    best = k;
                }
            }
            if (best != cands.size()) accept(best, true);
        }

        if (!mwi_peaks.empty() && c.index - mwi_peaks.back() < refractory) {
            continue; // inside the refractory period: not even noise
        }

        const double threshold1 = npki + 0.25 * (spki - npki);
        if (c.value > threshold1) {
            // T-wave discrimination: a near peak with under half the slope
            // of the previous QRS is repolarization, not a beat.
            if (!mwi_peaks.empty() && c.index - mwi_peaks.back() < twave_window &&
                peak_slope(c.index) < 0.5 * last_slope) {
                npki = 0.125 * c.value + 0.875 * npki;
                continue;
            }
            ci = accept(ci, false);
            continue;
        }
        npki = 0.125 * c.value + 0.875 * npki;
    }

    // Enforce the 180 BPM spacing floor on the refined indices, keeping the
    // taller peak of any colliding pair.
    const long min_spacing = static_cast<long>(std::ceil(fs * 60.0 / kMaxBpm));
    std::sort(peaks.begin(), peaks.end());
    peaks.erase(std::unique(peaks.begin(), peaks.end()), peaks.end());
    std::vector<long> spaced;
    for (long p : peaks) {
        if (!spaced.empty() && p - spaced.back() < min_spacing) {
            if (sig.samples[static_cast<size_t>(p)] > sig.samples[static_cast<size_t>(spaced.back())]) {
                spaced.back() = p;
            }
            continue;
        }
        spaced.push_back(p);
    }
    out.indices = std::move(spaced);
    return out;
}

std::vector<BeatSegment> segment_beats(const EcgSignal& sig, const RPeakList& peaks) {
    validate_signal(sig);
    if (std::abs(sig.fs - kCanonicalFs) > 1e-9) {
        throw ParameterError("segment_beats: resample the signal to 130 Hz first");
    }
    const long n = static_cast<long>(sig.samples.size());
    std::vector<BeatSegment> segments;
    segments.reserve(peaks.indices.size());

    for (size_t i = 0; i < peaks.indices.size(); ++i) {
        const long r = peaks.indices[i];
        if (r - kPreRSamples < 0 || r + kPostRSamples >= n) continue; // insufficient margin

        BeatSegment seg;
        seg.r_index = r;
        for (int k = 0; k < kBeatWindowLen; ++k) {
            seg.window[static_cast<size_t>(k)] =
                sig.samples[static_cast<size_t>(r - kPreRSamples + k)];
        }
        if (i >= 1) {
            seg.rr_curr_s = static_cast<double>(r - peaks.indices[i - 1]) / sig.fs;
            seg.hr_bpm = heart_rate(peaks.indices[i - 1], r, sig.fs);
        }
        if (i >= 2) {
            seg.rr_prev_s = static_cast<double>(peaks.indices[i - 1] - peaks.indices[i - 2]) / sig.fs;
        }
        segments.push_back(seg);
    }
    return segments;
}

} // namespace ecgmon
