#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgmon/aami.hpp"

namespace ecgmon {

// Uniformly sampled single-lead ECG voltage trace, millivolts.
struct EcgSignal {
    std::vector<float> samples;
    double fs = 0.0;       // Hz, > 0
    long start_index = 0;  // sample offset into the originating record

    double duration_s() const { return fs > 0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

// Throws ParameterError if fs <= 0 or any sample is non-finite.
void validate_signal(const EcgSignal& sig);

// Linear-phase FIR bandpass. Taps are symmetric about the midpoint.
struct FirFilter {
    std::vector<double> taps;
    double f1 = 0.0; // passband low edge, Hz
    double f2 = 0.0; // passband high edge, Hz
    int order = 0;   // design order = taps - 1
};

// Window-method (Hamming) FIR bandpass design.
// order 0 selects the default round(2*fs/f1).
FirFilter design_bandpass(double fs, double f1, double f2, int order = 0);

// Zero-phase application: forward convolution with group-delay compensation.
// Output has the same length and rate as the input.
EcgSignal filter_signal(const EcgSignal& sig, const FirFilter& filt);

// Band-limited rate conversion (windowed-sinc, Hann, 16-tap half-width).
// Output length is round(len * target_fs / fs).
EcgSignal resample(const EcgSignal& sig, double target_fs);

// Complex frequency-response magnitude of a tap set at frequency f_hz.
// Direct evaluation of |sum taps[n] e^{-j 2 pi f n / fs}|.
double fir_response_mag(const std::vector<double>& taps, double f_hz, double fs);

inline constexpr double kFlatEpsilonMv = 1e-6;

// Window scaled so max |value| = 1. flat is set (and values left empty)
// when max |value| < kFlatEpsilonMv.
struct NormalizedWindow {
    std::vector<float> values;
    bool flat = false;
};

NormalizedWindow normalize_max(std::span<const float> window);

// ---------------------------------------------------------------------------
// Synthetic ECG generation (test/ground-truth substrate)

// One wave of the 5-Gaussian beat model.
struct WaveShape {
    double amp_mv = 0.0;
    double width_s = 0.01;  // Gaussian sigma
    double offset_s = 0.0;  // center relative to the R instant
};

struct BeatMorphology {
    WaveShape p, q, r, s, t;
};

// Default morphologies per beat class. N is the generator default; the
// others are deliberately distinct so windows are separable.
BeatMorphology morphology_for(BeatClass c);

struct NoiseSpec {
    double baseline_wander_amp = 0.0; // mV
    double baseline_wander_freq = 0.25; // Hz
    double hf_noise_std = 0.0; // mV, white
    // Dropout: samples zeroed for dropout_duration_s starting at
    // dropout_start_s, repeating every dropout_interval_s (0 = single burst).
    double dropout_start_s = -1.0;
    double dropout_duration_s = 0.0;
    double dropout_interval_s = 0.0;
    // Level shift of step_amplitude from step_time_s to the end.
    double step_amplitude = 0.0;
    double step_time_s = -1.0;

    bool any() const {
        return baseline_wander_amp != 0.0 || hf_noise_std != 0.0 || dropout_start_s >= 0.0 ||
               step_time_s >= 0.0;
    }
};

struct SynthSpec {
    double fs = 130.0;
    double duration_s = 60.0;
    double bpm = 75.0;                       // 30..180
    BeatMorphology morphology = morphology_for(BeatClass::N);
    double abnormal_beat_rate = 0.0;         // fraction in [0,1]
    double rr_jitter_frac = 0.015;           // sd of RR jitter, relative
    double abnormal_rr_factor = 0.65;        // premature-beat RR shortening
    NoiseSpec noise;
};

struct GroundTruthBeat {
    long r_index = 0;
    BeatClass label = BeatClass::N;
};

struct SynthRecord {
    EcgSignal signal;
    std::vector<GroundTruthBeat> beats;
};

// Deterministic for a fixed (spec, seed). Abnormal beats draw a class from
// {S, V, F}, arrive early (shortened preceding RR) and carry the altered
// morphology of their class.
SynthRecord generate_ecg(const SynthSpec& spec, uint32_t seed);

// A single 105-sample beat window at 130 Hz with the R instant at sample 40,
// drawn from the class morphology with small shape jitter plus white noise.
std::vector<float> synth_beat_window(BeatClass cls, uint32_t seed, double noise_std_mv = 0.02);

} // namespace ecgmon
