#include "ecgmon/sim.hpp"

#include <cmath>

#include "ecgmon/errors.hpp"
#include "ecgmon/fog.hpp"
#include "ecgmon/qrs.hpp"

namespace ecgmon {

namespace {

void append_segment(SynthRecord& dst, const SynthRecord& seg) {
    const long offset = static_cast<long>(dst.signal.samples.size());
    dst.signal.samples.insert(dst.signal.samples.end(), seg.signal.samples.begin(),
                              seg.signal.samples.end());
    for (const GroundTruthBeat& b : seg.beats) {
        dst.beats.push_back({b.r_index + offset, b.label});
    }
}

} // namespace

SynthRecord build_case_record(const CaseSpec& spec, uint32_t seed, const SimOptions& opts) {
    validate_case(spec);

    SynthRecord rec;
    rec.signal.fs = kCanonicalFs;

    if (spec.clean_minutes > 0.0) {
        SynthSpec s;
        s.fs = kCanonicalFs;
        s.duration_s = spec.clean_minutes * 60.0;
        s.bpm = opts.bpm;
        append_segment(rec, generate_ecg(s, seed));
    }
    if (spec.noisy_minutes > 0.0) {
        // Dropout bursts covering most of every 10 s window: the quality
        // gate rejects the whole segment.
        SynthSpec s;
        s.fs = kCanonicalFs;
        s.duration_s = spec.noisy_minutes * 60.0;
        s.bpm = opts.bpm;
        s.noise.dropout_start_s = 0.5;
        s.noise.dropout_duration_s = 7.0;
        s.noise.dropout_interval_s = 10.0;
        append_segment(rec, generate_ecg(s, seed + 1));
    }
    if (spec.arrhythmic_minutes > 0.0) {
        SynthSpec s;
        s.fs = kCanonicalFs;
        s.duration_s = spec.arrhythmic_minutes * 60.0;
        s.bpm = opts.bpm;
        s.abnormal_beat_rate = opts.abnormal_rate;
        append_segment(rec, generate_ecg(s, seed + 2));
    }
    return rec;
}

SessionResult simulate_case(const CaseSpec& spec, const ModelGraph& model, uint32_t seed,
                            const EdgeConfig& cfg, const SimOptions& opts) {
    const SynthRecord rec = build_case_record(spec, seed, opts);

    FogHandler handler(model);
    LoopbackLink link(handler);

    EdgeSessionOptions session;
    session.session_id = opts.session_id;
    session.collect_log_lines = false;
    if (opts.use_oracle) {
        const std::vector<GroundTruthBeat>* beats = &rec.beats;
        const double tol = 0.15 * kCanonicalFs;
        session.oracle = [beats, tol](long r_index) -> std::optional<BeatClass> {
            // Beats are sorted: binary search for the nearest ground truth.
            long lo = 0, hi = static_cast<long>(beats->size());
            while (lo < hi) {
                const long mid = (lo + hi) / 2;
                if ((*beats)[static_cast<size_t>(mid)].r_index < r_index) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            std::optional<BeatClass> best;
            long best_d = static_cast<long>(tol) + 1;
            for (long k = lo - 1; k <= lo; ++k) {
                if (k < 0 || k >= static_cast<long>(beats->size())) continue;
                const long d = std::abs((*beats)[static_cast<size_t>(k)].r_index - r_index);
                if (d < best_d) {
                    best_d = d;
                    best = (*beats)[static_cast<size_t>(k)].label;
                }
            }
            return best;
        };
    }
    return run_edge_session(rec.signal, model, link, cfg, session);
}

} // namespace ecgmon
