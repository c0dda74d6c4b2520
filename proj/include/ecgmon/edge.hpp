#pragma once

#include <array>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecgmon/link.hpp"
#include "ecgmon/model.hpp"
#include "ecgmon/qrs.hpp"
#include "ecgmon/sqa.hpp"

namespace ecgmon {

// Average of R-aligned regular beats with cached sample statistics.
struct BeatTemplate {
    std::array<float, kBeatWindowLen> window{};
    int count = 0;
    double mu = 0.0;
    double sigma = 0.0; // sample standard deviation, > 0
};

enum class BeatVerdict { normal, abnormal };
enum class OverrideReason { none, hrv, correlation, head1 };

struct EdgeDecision {
    BeatVerdict verdict = BeatVerdict::normal;
    std::array<float, 2> head1_probs{};
    double hrv_value = 0.0;
    double corr_value = 0.0;
    OverrideReason reason = OverrideReason::none;
};

// |fs * (1/rr_prev - 1/rr_curr)|, intervals in seconds.
double hrv_indicator(double rr_prev_s, double rr_curr_s, double fs);

// Pearson coefficient with sample (N-1) normalization, clamped to [-1, 1].
// Throws ParameterError when the beat has zero variance (callers treat that
// beat as abnormal).
double template_correlation(const BeatTemplate& tmpl, std::span<const float> beat);

// The same statistic over double sequences (the shared arithmetic core).
double pearson_correlation(std::span<const double> a, std::span<const double> b);

// Element-wise average of R-aligned windows. Throws ParameterError on an
// empty input or a flat average.
BeatTemplate build_template(std::span<const BeatSegment> beats);

struct EdgeConfig {
    double hrv_threshold = 10.0;
    double corr_threshold = 0.2;
    int template_beats = 20; // regular beats averaged into the template
    int rate_window = 8;     // consecutive normals before the rate drops
    double low_fs = 100.0;
    double full_fs = 130.0;
    SqaConfig sqa;
    size_t max_pending = 256; // outbound retry queue bound
};

// head1 abnormal forwards unconditionally; otherwise the HRV and template
// correlation gates can each override a normal call. A missing template
// (warm-up) passes the correlation gate.
EdgeDecision decide(const BeatSegment& beat, const Tensor& head1_probs,
                    const BeatTemplate* tmpl, const EdgeConfig& cfg);

enum class RateReason { startup, noisy, all_normal, abnormal_active };

struct RateState {
    double current_fs = 130.0;
    RateReason reason = RateReason::startup;
};

// Deterministic controller: any abnormal beat in the recent window forces
// the full rate; an unacceptable window or a full run of normals drops to
// the low rate.
RateState rate_step(const RateState& state, const SqaVerdict& last_sqa,
                    std::span<const BeatVerdict> recent, const EdgeConfig& cfg);

const char* to_string(BeatVerdict v);
const char* to_string(OverrideReason r);
const char* to_string(RateReason r);

// ---------------------------------------------------------------------------
// Session runtime

struct SessionCounters {
    uint64_t bytes_sent = 0;
    uint64_t heart_rate_msgs = 0;
    uint64_t feature_map_msgs = 0;
    uint64_t noise_reports = 0;
    uint64_t rate_changes = 0;
    uint64_t beats_seen = 0;
    uint64_t beats_normal = 0;
    uint64_t beats_abnormal = 0;
    uint64_t dropped_msgs = 0;
    uint64_t edge_mac_count = 0;
    uint64_t fog_mac_count = 0;
};

struct BeatLogEntry {
    uint32_t beat_id = 0;
    long r_index = 0;
    BeatVerdict verdict = BeatVerdict::normal;
    OverrideReason reason = OverrideReason::none;
    double hrv = 0.0;
    double corr = 0.0;
    double hr_bpm = 0.0;
    uint64_t bytes = 0;
    std::optional<BeatClass> truth;
};

struct SessionResult {
    SessionCounters counters;
    std::vector<BeatLogEntry> beats;
    std::vector<std::string> log_lines;
    RateState final_rate;
};

// Optional ground-truth decision source: returns the known class of the beat
// near a sample index, bypassing head1 (used by the energy simulation).
using OracleLookup = std::function<std::optional<BeatClass>(long r_index)>;

struct EdgeSessionOptions {
    uint32_t session_id = 1;
    bool send_hello = true;
    OracleLookup oracle;          // when set, replaces head1 for gating
    bool collect_log_lines = true;
};

// Runs one monitoring session over a raw record: per 10 s window SQA gates
// beat processing entirely; surviving windows are filtered, beats detected,
// segmented and decided; normal beats emit heart-rate frames, abnormal beats
// emit feature maps; the sampling-rate controller reacts after every window
// and beat. Messages that fail to send are retried from a bounded queue that
// sheds oldest heart-rate frames first.
SessionResult run_edge_session(const EcgSignal& raw, const ModelGraph& model, FogLink& link,
                               const EdgeConfig& cfg, const EdgeSessionOptions& opts = {});

} // namespace ecgmon
