#include "ecgmon/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ecgmon/errors.hpp"

namespace ecgmon {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

} // namespace

void validate_signal(const EcgSignal& sig) {
    if (sig.fs <= 0.0) throw ParameterError("signal sampling rate must be positive");
    for (float v : sig.samples) {
        if (!std::isfinite(v)) throw ParameterError("signal contains non-finite samples");
    }
}

FirFilter design_bandpass(double fs, double f1, double f2, int order) {
    if (fs <= 0.0) throw ParameterError("design_bandpass: fs must be positive");
    if (!(0.0 < f1 && f1 < f2 && f2 < fs / 2.0)) {
        throw ParameterError("design_bandpass: need 0 < f1 < f2 < fs/2");
    }
    if (order == 0) order = static_cast<int>(std::lround(2.0 * fs / f1));
    if (order < 2) throw ParameterError("design_bandpass: order must be >= 2");
    if (order % 2 != 0) ++order; // odd tap count keeps the response real at band center

    const int taps = order + 1;
    const int mid = order / 2;
    FirFilter filt;
    filt.taps.resize(static_cast<size_t>(taps));
    filt.f1 = f1;
    filt.f2 = f2;
    filt.order = order;

    const double w1 = 2.0 * f1 / fs;
    const double w2 = 2.0 * f2 / fs;
    for (int n = 0; n < taps; ++n) {
        const double k = n - mid;
        const double ideal = w2 * sinc(w2 * k) - w1 * sinc(w1 * k);
        const double hamming = 0.54 - 0.46 * std::cos(2.0 * kPi * n / order);
        filt.taps[static_cast<size_t>(n)] = ideal * hamming;
    }
    return filt;
}

EcgSignal filter_signal(const EcgSignal& sig, const FirFilter& filt) {
    validate_signal(sig);
    const size_t n = sig.samples.size();
    const size_t t = filt.taps.size();
    if (t > n) throw ParameterError("filter_signal: signal shorter than filter");

    // Forward convolution against a zero-padded input, then shift by the
    // group delay so peaks stay in place.
    const int delay = static_cast<int>(t - 1) / 2;
    EcgSignal out;
    out.fs = sig.fs;
    out.start_index = sig.start_index;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const long center = static_cast<long>(i) + delay;
        double acc = 0.0;
        for (size_t k = 0; k < t; ++k) {
            const long j = center - static_cast<long>(k);
            if (j < 0 || j >= static_cast<long>(n)) continue;
            acc += filt.taps[k] * sig.samples[static_cast<size_t>(j)];
        }
        out.samples[i] = static_cast<float>(acc);
    }
    return out;
}

EcgSignal resample(const EcgSignal& sig, double target_fs) {
    validate_signal(sig);
    if (target_fs <= 0.0) throw ParameterError("resample: target rate must be positive");

    const size_t in_len = sig.samples.size();
    const long out_len = std::lround(static_cast<double>(in_len) * target_fs / sig.fs);
    EcgSignal out;
    out.fs = target_fs;
    out.start_index = std::lround(static_cast<double>(sig.start_index) * target_fs / sig.fs);
    out.samples.resize(static_cast<size_t>(std::max(0L, out_len)));
    if (in_len == 0 || out_len <= 0) return out;

    // Windowed-sinc interpolation (Hann, 16-tap half-width at the lower of
    // the two rates). Weights are renormalized so constants pass exactly.
    const double ratio = std::min(1.0, target_fs / sig.fs);
    const double half_width = 16.0 / ratio;
    for (long i = 0; i < out_len; ++i) {
        const double t = static_cast<double>(i) * sig.fs / target_fs;
        const long j_lo = static_cast<long>(std::ceil(t - half_width));
        const long j_hi = static_cast<long>(std::floor(t + half_width));
        double acc = 0.0;
        double wsum = 0.0;
        for (long j = std::max(0L, j_lo); j <= std::min<long>(static_cast<long>(in_len) - 1, j_hi); ++j) {
            const double d = t - static_cast<double>(j);
            const double u = d / half_width;
            const double win = 0.5 * (1.0 + std::cos(kPi * u));
            const double w = ratio * sinc(ratio * d) * win;
            acc += w * sig.samples[static_cast<size_t>(j)];
            wsum += w;
        }
        out.samples[static_cast<size_t>(i)] = wsum != 0.0 ? static_cast<float>(acc / wsum) : 0.0f;
    }
    return out;
}

double fir_response_mag(const std::vector<double>& taps, double f_hz, double fs) {
    double re = 0.0, im = 0.0;
    const double w = 2.0 * kPi * f_hz / fs;
    for (size_t n = 0; n < taps.size(); ++n) {
        re += taps[n] * std::cos(w * static_cast<double>(n));
        im -= taps[n] * std::sin(w * static_cast<double>(n));
    }
    return std::sqrt(re * re + im * im);
}

NormalizedWindow normalize_max(std::span<const float> window) {
    if (window.empty()) throw ParameterError("normalize_max: empty window");
    double peak = 0.0;
    for (float v : window) peak = std::max(peak, static_cast<double>(std::abs(v)));

    NormalizedWindow out;
    if (peak < kFlatEpsilonMv) {
        out.flat = true;
        return out;
    }
    out.values.resize(window.size());
    for (size_t i = 0; i < window.size(); ++i) {
        out.values[i] = static_cast<float>(window[i] / peak);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

BeatMorphology morphology_for(BeatClass c) {
    switch (c) {
    case BeatClass::S:
        // Premature atrial: absent P, narrow tall R, reduced T.
        return {{0.0, 0.030, -0.20},
                {-0.08, 0.008, -0.030},
                {1.05, 0.014, 0.0},
                {-0.20, 0.010, 0.030},
                {0.28, 0.050, 0.24}};
    case BeatClass::V:
        // Ventricular: wide low QRS, deep S, inverted T, no P.
        return {{0.0, 0.030, -0.20},
                {-0.25, 0.030, -0.090},
                {0.85, 0.045, 0.0},
                {-0.55, 0.035, 0.090},
                {-0.45, 0.070, 0.30}};
    case BeatClass::F:
        // Fusion: intermediate widths and amplitudes.
        return {{0.08, 0.030, -0.18},
                {-0.15, 0.020, -0.050},
                {0.65, 0.032, 0.0},
                {-0.35, 0.020, 0.050},
                {0.22, 0.060, 0.26}};
    case BeatClass::N:
    case BeatClass::Q:
    default:
        return {{0.22, 0.035, -0.20},
                {-0.14, 0.010, -0.035},
                {1.00, 0.022, 0.0},
                {-0.32, 0.013, 0.035},
                {0.60, 0.075, 0.27}};
    }
}

namespace {

void add_gaussian(std::vector<float>& samples, double fs, double center_s, const WaveShape& w,
                  double amp_scale) {
    if (w.amp_mv == 0.0) return;
    const double amp = w.amp_mv * amp_scale;
    const double sigma = w.width_s;
    const double c = center_s + w.offset_s;
    const long lo = std::max(0L, static_cast<long>(std::floor((c - 5.0 * sigma) * fs)));
    const long hi = std::min(static_cast<long>(samples.size()) - 1,
                             static_cast<long>(std::ceil((c + 5.0 * sigma) * fs)));
    for (long i = lo; i <= hi; ++i) {
        const double t = static_cast<double>(i) / fs - c;
        samples[static_cast<size_t>(i)] +=
            static_cast<float>(amp * std::exp(-(t * t) / (2.0 * sigma * sigma)));
    }
}

BeatClass pick_abnormal_class(std::mt19937& rng) {
    // S : V : F at 3 : 4 : 3.
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < 0.3) return BeatClass::S;
    if (u < 0.7) return BeatClass::V;
    return BeatClass::F;
}

} // namespace

SynthRecord generate_ecg(const SynthSpec& spec, uint32_t seed) {
    if (spec.fs <= 0.0) throw ParameterError("generate_ecg: fs must be positive");
    if (spec.duration_s <= 0.0) throw ParameterError("generate_ecg: duration must be positive");
    if (spec.bpm < 30.0 || spec.bpm > 180.0) {
        throw ParameterError("generate_ecg: bpm must be within [30, 180]");
    }
    if (spec.abnormal_beat_rate < 0.0 || spec.abnormal_beat_rate > 1.0) {
        throw ParameterError("generate_ecg: abnormal_beat_rate must be within [0, 1]");
    }

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SynthRecord rec;
    rec.signal.fs = spec.fs;
    rec.signal.samples.assign(static_cast<size_t>(std::lround(spec.duration_s * spec.fs)), 0.0f);

    const double rr_base = 60.0 / spec.bpm;
    const double t_end = spec.duration_s - 0.55; // room for the final T wave
    double t = 0.5;
    bool first = true;
    while (t < t_end) {
        BeatClass cls = BeatClass::N;
        if (!first && unit(rng) < spec.abnormal_beat_rate) cls = pick_abnormal_class(rng);
        if (!first) {
            double rr = rr_base * (1.0 + spec.rr_jitter_frac * gauss(rng));
            if (cls != BeatClass::N) rr *= spec.abnormal_rr_factor;
            rr = std::max(rr, 60.0 / 180.0); // stated heart-rate ceiling
            t += rr;
            if (t >= t_end) break;
        }
        first = false;

        const BeatMorphology morph =
            cls == BeatClass::N ? spec.morphology : morphology_for(cls);
        const double amp_scale = 1.0 + 0.03 * gauss(rng);
        add_gaussian(rec.signal.samples, spec.fs, t, morph.p, amp_scale);
        add_gaussian(rec.signal.samples, spec.fs, t, morph.q, amp_scale);
        add_gaussian(rec.signal.samples, spec.fs, t, morph.r, amp_scale);
        add_gaussian(rec.signal.samples, spec.fs, t, morph.s, amp_scale);
        add_gaussian(rec.signal.samples, spec.fs, t, morph.t, amp_scale);
        rec.beats.push_back({std::lround(t * spec.fs), cls});
    }

    const NoiseSpec& nz = spec.noise;
    if (nz.baseline_wander_amp != 0.0) {
        const double phase = unit(rng) * 2.0 * kPi;
        for (size_t i = 0; i < rec.signal.samples.size(); ++i) {
            const double ts = static_cast<double>(i) / spec.fs;
            rec.signal.samples[i] += static_cast<float>(
                nz.baseline_wander_amp * std::sin(2.0 * kPi * nz.baseline_wander_freq * ts + phase));
        }
    }
    if (nz.hf_noise_std > 0.0) {
        for (auto& v : rec.signal.samples) {
            v += static_cast<float>(nz.hf_noise_std * gauss(rng));
        }
    }
    if (nz.step_time_s >= 0.0 && nz.step_amplitude != 0.0) {
        const size_t from = static_cast<size_t>(std::max(0L, std::lround(nz.step_time_s * spec.fs)));
        for (size_t i = from; i < rec.signal.samples.size(); ++i) {
            rec.signal.samples[i] += static_cast<float>(nz.step_amplitude);
        }
    }
    if (nz.dropout_start_s >= 0.0 && nz.dropout_duration_s > 0.0) {
        double start = nz.dropout_start_s;
        while (start < spec.duration_s) {
            const long lo = std::lround(start * spec.fs);
            const long hi = std::min<long>(static_cast<long>(rec.signal.samples.size()),
                                           std::lround((start + nz.dropout_duration_s) * spec.fs));
            for (long i = std::max(0L, lo); i < hi; ++i) {
                rec.signal.samples[static_cast<size_t>(i)] = 0.0f;
            }
            if (nz.dropout_interval_s <= 0.0) break;
            start += nz.dropout_interval_s;
        }
    }
    return rec;
}

std::vector<float> synth_beat_window(BeatClass cls, uint32_t seed, double noise_std_mv) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double fs = 130.0;
    const int r_pos = 40;
    BeatMorphology morph = morphology_for(cls);

    // Small shape jitter so the corpus is not a lookup table.
    auto jitter = [&](WaveShape& w) {
        w.amp_mv *= 1.0 + 0.06 * gauss(rng);
        w.width_s *= 1.0 + 0.05 * gauss(rng);
        w.offset_s += 0.003 * gauss(rng);
    };
    jitter(morph.p);
    jitter(morph.q);
    jitter(morph.r);
    jitter(morph.s);
    jitter(morph.t);

    std::vector<float> window(105, 0.0f);
    const double center_s = static_cast<double>(r_pos) / fs;
    add_gaussian(window, fs, center_s, morph.p, 1.0);
    add_gaussian(window, fs, center_s, morph.q, 1.0);
    add_gaussian(window, fs, center_s, morph.r, 1.0);
    add_gaussian(window, fs, center_s, morph.s, 1.0);
    add_gaussian(window, fs, center_s, morph.t, 1.0);
    if (noise_std_mv > 0.0) {
        for (auto& v : window) v += static_cast<float>(noise_std_mv * gauss(rng));
    }
    return window;
}

} // namespace ecgmon
