#include "ecgmon/edge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include "ecgmon/errors.hpp"

namespace ecgmon {

double hrv_indicator(double rr_prev_s, double rr_curr_s, double fs) {
    if (rr_prev_s <= 0.0 || rr_curr_s <= 0.0) {
        throw ParameterError("hrv_indicator: intervals must be positive");
    }
    if (fs <= 0.0) throw ParameterError("hrv_indicator: fs must be positive");
    return std::abs(fs * (1.0 / rr_prev_s - 1.0 / rr_curr_s));
}

namespace {

struct SampleStats {
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation
};

template <typename T>
SampleStats sample_stats(std::span<const T> x) {
    SampleStats s;
    for (T v : x) s.mean += v;
    s.mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (T v : x) {
        const double d = v - s.mean;
        ss += d * d;
    }
    s.sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    return s;
}

constexpr double kSigmaFloor = 1e-9;

template <typename A, typename B>
double pearson_impl(std::span<const A> a, std::span<const B> b, double sd_a_hint = -1.0,
                    double mu_a_hint = 0.0) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ParameterError("correlation: length mismatch");
    }
    const SampleStats as = sd_a_hint >= 0.0 ? SampleStats{mu_a_hint, sd_a_hint}
                                            : sample_stats(a);
    if (as.sd <= kSigmaFloor) throw ParameterError("correlation: flat template");
    const SampleStats bs = sample_stats(b);
    if (bs.sd <= kSigmaFloor) throw ParameterError("correlation: zero-variance beat");

    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        acc += ((a[i] - as.mean) / as.sd) * ((b[i] - bs.mean) / bs.sd);
    }
    const double rho = acc / static_cast<double>(a.size() - 1);
    return std::clamp(rho, -1.0, 1.0);
}

} // namespace

double template_correlation(const BeatTemplate& tmpl, std::span<const float> beat) {
    return pearson_impl<float, float>(tmpl.window, beat, tmpl.sigma, tmpl.mu);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    return pearson_impl<double, double>(a, b);
}

BeatTemplate build_template(std::span<const BeatSegment> beats) {
    if (beats.empty()) throw ParameterError("build_template: need at least one beat");
    BeatTemplate t;
    t.count = static_cast<int>(beats.size());
    for (const BeatSegment& b : beats) {
        for (size_t i = 0; i < t.window.size(); ++i) t.window[i] += b.window[i];
    }
    for (auto& v : t.window) v /= static_cast<float>(t.count);
    const SampleStats s = sample_stats(std::span<const float>(t.window));
    t.mu = s.mean;
    t.sigma = s.sd;
    if (t.sigma <= kSigmaFloor) throw ParameterError("build_template: flat template");
    return t;
}

EdgeDecision decide(const BeatSegment& beat, const Tensor& head1_probs, const BeatTemplate* tmpl,
                    const EdgeConfig& cfg) {
    if (head1_probs.data.size() != 2) throw ParameterError("decide: head1 must be a 2-vector");

    EdgeDecision d;
    d.head1_probs = {head1_probs.data[0], head1_probs.data[1]};

    // Indicators are recorded regardless of the final route.
    bool corr_failed = false;
    if (beat.rr_prev_s && beat.rr_curr_s) {
        d.hrv_value = hrv_indicator(*beat.rr_prev_s, *beat.rr_curr_s, kCanonicalFs);
    }
    if (tmpl != nullptr) {
        try {
            d.corr_value = template_correlation(*tmpl, beat.window);
        } catch (const ParameterError&) {
            corr_failed = true; // zero-variance beat: treated as abnormal below
            d.corr_value = 0.0;
        }
    } else {
        d.corr_value = 1.0; // template warm-up: the gate passes
    }

    if (d.head1_probs[1] > d.head1_probs[0]) {
        d.verdict = BeatVerdict::abnormal;
        d.reason = OverrideReason::head1;
        return d;
    }
    if (d.hrv_value > cfg.hrv_threshold) {
        d.verdict = BeatVerdict::abnormal;
        d.reason = OverrideReason::hrv;
        return d;
    }
    if (corr_failed || d.corr_value < cfg.corr_threshold) {
        d.verdict = BeatVerdict::abnormal;
        d.reason = OverrideReason::correlation;
        return d;
    }
    d.verdict = BeatVerdict::normal;
    d.reason = OverrideReason::none;
    return d;
}

RateState rate_step(const RateState& state, const SqaVerdict& last_sqa,
                    std::span<const BeatVerdict> recent, const EdgeConfig& cfg) {
    RateState next = state;
    const bool any_abnormal =
        std::any_of(recent.begin(), recent.end(),
                    [](BeatVerdict v) { return v == BeatVerdict::abnormal; });
    if (any_abnormal) {
        next.current_fs = cfg.full_fs;
        next.reason = RateReason::abnormal_active;
        return next;
    }
    if (last_sqa.grade == SqaGrade::unacceptable) {
        next.current_fs = cfg.low_fs;
        next.reason = RateReason::noisy;
        return next;
    }
    if (recent.size() >= static_cast<size_t>(cfg.rate_window)) {
        next.current_fs = cfg.low_fs;
        next.reason = RateReason::all_normal;
        return next;
    }
    return next;
}

const char* to_string(BeatVerdict v) { return v == BeatVerdict::normal ? "normal" : "abnormal"; }

const char* to_string(OverrideReason r) {
    switch (r) {
    case OverrideReason::none: return "none";
    case OverrideReason::hrv: return "hrv";
    case OverrideReason::correlation: return "correlation";
    case OverrideReason::head1: return "head1";
    }
    return "?";
}

const char* to_string(RateReason r) {
    switch (r) {
    case RateReason::startup: return "startup";
    case RateReason::noisy: return "noisy";
    case RateReason::all_normal: return "all_normal";
    case RateReason::abnormal_active: return "abnormal_active";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Session runtime

namespace {

uint8_t noise_reason_code(SqaReason r) {
    switch (r) {
    case SqaReason::absence: return 1;
    case SqaReason::abrupt_change: return 2;
    case SqaReason::flat: return 3;
    case SqaReason::clean: return 0;
    }
    return 0;
}

uint8_t rate_reason_code(RateReason r) { return static_cast<uint8_t>(r); }

// Bounded outbox with retry; sheds oldest heart-rate frames first and never
// drops feature maps.
class Outbox {
public:
    Outbox(FogLink& link, size_t cap, SessionCounters& counters)
        : link_(link), cap_(cap), counters_(counters) {}

    void push(WireMessage msg) {
        pending_.push_back(std::move(msg));
        shed();
        flush();
    }

    void flush() {
        while (!pending_.empty()) {
            const WireMessage& msg = pending_.front();
            try {
                (void)link_.send(msg);
            } catch (const ProtocolError&) {
                return; // keep everything queued for the next attempt
            }
            account(msg);
            pending_.pop_front();
        }
    }

private:
    void shed() {
        if (pending_.size() <= cap_) return;
        // first choice: oldest heart-rate frame
        for (auto it = pending_.begin(); it != pending_.end(); ++it) {
            if (it->type() == MsgType::heart_rate) {
                pending_.erase(it);
                ++counters_.dropped_msgs;
                return;
            }
        }
        // otherwise the oldest frame that is not a feature map
        for (auto it = pending_.begin(); it != pending_.end(); ++it) {
            if (it->type() != MsgType::feature_map) {
                pending_.erase(it);
                ++counters_.dropped_msgs;
                return;
            }
        }
        // only feature maps left: the queue is allowed to exceed its bound
    }

    void account(const WireMessage& msg) {
        counters_.bytes_sent += frame_size(msg.type());
        switch (msg.type()) {
        case MsgType::heart_rate: ++counters_.heart_rate_msgs; break;
        case MsgType::feature_map: ++counters_.feature_map_msgs; break;
        case MsgType::noise_report: ++counters_.noise_reports; break;
        case MsgType::rate_change: ++counters_.rate_changes; break;
        default: break;
        }
    }

    FogLink& link_;
    size_t cap_;
    SessionCounters& counters_;
    std::deque<WireMessage> pending_;
};

} // namespace

SessionResult run_edge_session(const EcgSignal& raw, const ModelGraph& model, FogLink& link,
                               const EdgeConfig& cfg, const EdgeSessionOptions& opts) {
    validate_signal(raw);
    SessionResult result;
    result.final_rate = RateState{cfg.full_fs, RateReason::startup};

    Outbox outbox(link, cfg.max_pending, result.counters);
    const long per_beat_edge_macs = edge_macs(model);
    const long per_beat_fog_macs = fog_macs(model);

    if (opts.send_hello) {
        HelloPayload hello;
        hello.weights_hash = weights_hash(model);
        hello.fs = static_cast<uint16_t>(std::lround(result.final_rate.current_fs));
        outbox.push(WireMessage{opts.session_id, 0, hello});
    }

    const FirFilter bandpass = design_bandpass(kCanonicalFs, 1.0, 50.0);
    const double raw_fs = raw.fs;
    const long window_raw = std::lround(cfg.sqa.window_s * raw_fs);
    const long carry_raw = std::lround(2.5 * raw_fs);
    const long tail_raw = std::lround(0.6 * raw_fs);
    const long n = static_cast<long>(raw.samples.size());

    RateState rate = result.final_rate;
    std::deque<BeatVerdict> recent;
    std::vector<BeatSegment> template_pool;
    std::optional<BeatTemplate> tmpl;
    uint32_t beat_id = 0;
    double last_peak_raw = -1.0; // raw-domain position of the last accepted peak
    double prev_rr_s = -1.0;

    auto apply_rate = [&](const SqaVerdict& sqa) {
        std::vector<BeatVerdict> rec(recent.begin(), recent.end());
        const RateState next = rate_step(rate, sqa, rec, cfg);
        if (next.current_fs != rate.current_fs) {
            RateChangePayload rc;
            rc.new_fs = static_cast<uint16_t>(std::lround(next.current_fs));
            rc.reason = rate_reason_code(next.reason);
            outbox.push(WireMessage{opts.session_id, 0, rc});
        }
        rate = next;
    };

    for (long start = 0; start + window_raw <= n; start += window_raw) {
        // Acquisition at the controller rate, quality gate first.
        EcgSignal raw_window;
        raw_window.fs = raw_fs;
        raw_window.start_index = raw.start_index + start;
        raw_window.samples.assign(raw.samples.begin() + start,
                                  raw.samples.begin() + start + window_raw);
        EcgSignal acq = std::abs(rate.current_fs - raw_fs) > 1e-9
                            ? resample(raw_window, rate.current_fs)
                            : raw_window;
        const SqaVerdict sqa = grade_window(acq, cfg.sqa);

        if (sqa.grade == SqaGrade::unacceptable) {
            NoiseReportPayload report;
            report.window_start = static_cast<uint32_t>(start);
            report.reason = noise_reason_code(sqa.reason);
            outbox.push(WireMessage{opts.session_id, 0, report});
            if (opts.collect_log_lines) {
                char line[128];
                std::snprintf(line, sizeof(line), "window start=%ld grade=unacceptable reason=%s",
                              start, to_string(sqa.reason));
                result.log_lines.push_back(line);
            }
            apply_rate(sqa);
            continue;
        }

        // Extended slice so window-edge beats keep their margins and RR context.
        const long slice_lo = std::max(0L, start - carry_raw);
        const long slice_hi = std::min(n, start + window_raw + tail_raw);
        EcgSignal slice;
        slice.fs = raw_fs;
        slice.start_index = raw.start_index + slice_lo;
        slice.samples.assign(raw.samples.begin() + slice_lo, raw.samples.begin() + slice_hi);

        EcgSignal acq_slice = std::abs(rate.current_fs - raw_fs) > 1e-9
                                  ? resample(slice, rate.current_fs)
                                  : slice;
        EcgSignal canonical = std::abs(rate.current_fs - kCanonicalFs) > 1e-9
                                  ? resample(acq_slice, kCanonicalFs)
                                  : acq_slice;
        const EcgSignal filtered = filter_signal(canonical, bandpass);
        if (filtered.duration_s() < 3.0) continue;

        const RPeakList peaks = detect_rpeaks(filtered);
        const std::vector<BeatSegment> segments = segment_beats(filtered, peaks);

        for (const BeatSegment& seg : segments) {
            const double global_raw =
                static_cast<double>(slice_lo) + static_cast<double>(seg.r_index) * raw_fs / kCanonicalFs;
            if (global_raw < static_cast<double>(start) ||
                global_raw >= static_cast<double>(start + window_raw)) {
                continue; // belongs to a neighbouring window
            }
            if (last_peak_raw >= 0.0 &&
                global_raw - last_peak_raw < 0.6 * raw_fs * 60.0 / kMaxBpm) {
                continue; // already emitted by the previous slice
            }

            ++beat_id;
            ++result.counters.beats_seen;
            result.counters.edge_mac_count += static_cast<uint64_t>(per_beat_edge_macs);

            Tensor x = Tensor::make2(kBeatWindowLen, 1);
            for (int i = 0; i < kBeatWindowLen; ++i) x.data[static_cast<size_t>(i)] = seg.window[static_cast<size_t>(i)];
            EdgeForward ef = forward_edge(model, x);

            // RR context from the session rather than the slice when the
            // slice-local context is missing.
            BeatSegment beat = seg;
            if (!beat.rr_curr_s && last_peak_raw >= 0.0) {
                beat.rr_curr_s = (global_raw - last_peak_raw) / raw_fs;
                beat.hr_bpm = 60.0 / *beat.rr_curr_s;
            }
            if (!beat.rr_prev_s && prev_rr_s > 0.0) beat.rr_prev_s = prev_rr_s;

            Tensor gate_probs = ef.head1;
            if (opts.oracle) {
                const auto truth = opts.oracle(std::lround(global_raw));
                gate_probs = Tensor::make1(2);
                const bool abnormal = truth.has_value() && is_abnormal(*truth);
                gate_probs.data[0] = abnormal ? 0.0f : 1.0f;
                gate_probs.data[1] = abnormal ? 1.0f : 0.0f;
            }

            const EdgeDecision dec = decide(beat, gate_probs, tmpl ? &*tmpl : nullptr, cfg);

            if (!tmpl && dec.verdict == BeatVerdict::normal) {
                template_pool.push_back(beat);
                if (static_cast<int>(template_pool.size()) >= cfg.template_beats) {
                    try {
                        tmpl = build_template(template_pool);
                    } catch (const ParameterError&) {
                        template_pool.clear(); // degenerate pool: start over
                    }
                }
            }

            BeatLogEntry entry;
            entry.beat_id = beat_id;
            entry.r_index = std::lround(global_raw);
            entry.verdict = dec.verdict;
            entry.reason = dec.reason;
            entry.hrv = dec.hrv_value;
            entry.corr = dec.corr_value;
            entry.hr_bpm = beat.hr_bpm.value_or(0.0);
            if (opts.oracle) entry.truth = opts.oracle(std::lround(global_raw));

            if (dec.verdict == BeatVerdict::normal) {
                ++result.counters.beats_normal;
                if (beat.hr_bpm) {
                    HeartRatePayload hr;
                    hr.bpm = static_cast<float>(*beat.hr_bpm);
                    outbox.push(WireMessage{opts.session_id, beat_id, hr});
                    entry.bytes = frame_size(MsgType::heart_rate);
                }
            } else {
                ++result.counters.beats_abnormal;
                result.counters.fog_mac_count += static_cast<uint64_t>(per_beat_fog_macs);
                FeatureMapPayload fm;
                for (int i = 0; i < kFeatureMapValues; ++i) {
                    fm.values[static_cast<size_t>(i)] = ef.cut.data[static_cast<size_t>(i)];
                }
                outbox.push(WireMessage{opts.session_id, beat_id, fm});
                entry.bytes = frame_size(MsgType::feature_map);
            }
            result.beats.push_back(entry);

            if (opts.collect_log_lines) {
                char line[192];
                std::snprintf(line, sizeof(line),
                              "beat=%u r=%ld verdict=%s reason=%s hrv=%.3f corr=%.3f hr=%.1f bytes=%llu",
                              beat_id, entry.r_index, to_string(dec.verdict), to_string(dec.reason),
                              dec.hrv_value, dec.corr_value, entry.hr_bpm,
                              static_cast<unsigned long long>(entry.bytes));
                result.log_lines.push_back(line);
            }

            recent.push_back(dec.verdict);
            while (recent.size() > static_cast<size_t>(cfg.rate_window)) recent.pop_front();
            apply_rate(sqa);

            if (beat.rr_curr_s) prev_rr_s = *beat.rr_curr_s;
            last_peak_raw = global_raw;
        }
        apply_rate(sqa);
    }

    outbox.flush();
    result.final_rate = rate;
    return result;
}

} // namespace ecgmon
