#include "ecgmon/corpus.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "ecgmon/errors.hpp"
#include "ecgmon/signal.hpp"

namespace ecgmon {

namespace {

// One labeled window cut from a filtered three-beat mini record, so corpus
// beats live in the same domain as windows segmented from real records:
// bandpassed, with neighbouring-beat context, and with the premature-RR
// signature of ectopic classes.
std::vector<float> corpus_window(BeatClass cls, uint32_t seed, double noise_std_mv,
                                 const FirFilter& bandpass) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double fs = kCanonicalFs;
    const double rr_base = 0.75 * (1.0 + 0.05 * gauss(rng));
    const double rr_prev = cls == BeatClass::N ? rr_base * (1.0 + 0.02 * gauss(rng))
                                               : rr_base * 0.65;
    const double rr_next = rr_base * (1.0 + 0.02 * gauss(rng));

    const double t_target = 1.2;
    const double t_prev = t_target - rr_prev;
    const double t_next = t_target + rr_next;
    const double duration = t_next + 0.8;

    EcgSignal sig;
    sig.fs = fs;
    sig.samples.assign(static_cast<size_t>(std::lround(duration * fs)), 0.0f);

    auto add_wave = [&](double center_s, const WaveShape& w) {
        if (w.amp_mv == 0.0) return;
        const double c = center_s + w.offset_s;
        const long lo = std::max(0L, static_cast<long>(std::floor((c - 5.0 * w.width_s) * fs)));
        const long hi = std::min(static_cast<long>(sig.samples.size()) - 1,
                                 static_cast<long>(std::ceil((c + 5.0 * w.width_s) * fs)));
        for (long i = lo; i <= hi; ++i) {
            const double t = static_cast<double>(i) / fs - c;
            sig.samples[static_cast<size_t>(i)] += static_cast<float>(
                w.amp_mv * std::exp(-(t * t) / (2.0 * w.width_s * w.width_s)));
        }
    };
    auto add_beat = [&](double center_s, BeatMorphology m, double amp_scale) {
        m.p.amp_mv *= amp_scale;
        m.q.amp_mv *= amp_scale;
        m.r.amp_mv *= amp_scale;
        m.s.amp_mv *= amp_scale;
        m.t.amp_mv *= amp_scale;
        add_wave(center_s, m.p);
        add_wave(center_s, m.q);
        add_wave(center_s, m.r);
        add_wave(center_s, m.s);
        add_wave(center_s, m.t);
    };

    add_beat(t_prev, morphology_for(BeatClass::N), 1.0 + 0.03 * gauss(rng));
    BeatMorphology target = morphology_for(cls);
    auto jitter = [&](WaveShape& w) {
        w.amp_mv *= 1.0 + 0.06 * gauss(rng);
        w.width_s *= 1.0 + 0.05 * gauss(rng);
        w.offset_s += 0.003 * gauss(rng);
    };
    jitter(target.p);
    jitter(target.q);
    jitter(target.r);
    jitter(target.s);
    jitter(target.t);
    BeatMorphology target_jittered = target;
    add_beat(t_target, target_jittered, 1.0);
    add_beat(t_next, morphology_for(BeatClass::N), 1.0 + 0.03 * gauss(rng));

    if (noise_std_mv > 0.0) {
        for (auto& v : sig.samples) v += static_cast<float>(noise_std_mv * gauss(rng));
    }

    const EcgSignal filtered = filter_signal(sig, bandpass);
    const long r = std::lround(t_target * fs);
    std::vector<float> window(static_cast<size_t>(kBeatWindowLen));
    for (int k = 0; k < kBeatWindowLen; ++k) {
        window[static_cast<size_t>(k)] =
            filtered.samples[static_cast<size_t>(r - kPreRSamples + k)];
    }
    return window;
}

} // namespace

std::vector<TrainBeat> make_beat_corpus(const CorpusSpec& spec, uint32_t seed) {
    if (spec.count <= 0) throw ParameterError("make_beat_corpus: count must be positive");
    double mix_total = 0.0;
    for (double m : spec.class_mix) mix_total += m;
    if (mix_total <= 0.0) throw ParameterError("make_beat_corpus: class mix must be positive");

    const FirFilter bandpass = design_bandpass(kCanonicalFs, 1.0, 50.0);

    // Deterministic class sequence: cumulative quotas keep the realized mix
    // within one beat of the requested fractions.
    std::vector<TrainBeat> corpus;
    corpus.reserve(static_cast<size_t>(spec.count));
    std::array<double, 4> acc{};
    for (int i = 0; i < spec.count; ++i) {
        int cls = 0;
        double best = -1.0;
        for (int c = 0; c < 4; ++c) {
            const double want =
                spec.class_mix[static_cast<size_t>(c)] / mix_total * (i + 1) - acc[static_cast<size_t>(c)];
            if (want > best) {
                best = want;
                cls = c;
            }
        }
        acc[static_cast<size_t>(cls)] += 1.0;

        const std::vector<float> window =
            corpus_window(static_cast<BeatClass>(cls), seed + static_cast<uint32_t>(i) * 2654435761u,
                          spec.noise_std_mv, bandpass);
        TrainBeat beat;
        beat.x = Tensor::make2(kBeatWindowLen, 1);
        std::memcpy(beat.x.data.data(), window.data(), window.size() * sizeof(float));
        beat.label = cls;
        corpus.push_back(std::move(beat));
    }
    return corpus;
}

std::vector<TrainBeat> to_binary_labels(const std::vector<TrainBeat>& four_class) {
    std::vector<TrainBeat> out = four_class;
    for (auto& b : out) b.label = b.label == 0 ? 0 : 1;
    return out;
}

} // namespace ecgmon
