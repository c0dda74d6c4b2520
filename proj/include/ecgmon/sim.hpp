#pragma once

#include <cstdint>

#include "ecgmon/edge.hpp"
#include "ecgmon/energy.hpp"
#include "ecgmon/signal.hpp"

namespace ecgmon {

struct SimOptions {
    double bpm = 80.0;
    double abnormal_rate = 0.3; // within arrhythmic segments
    bool use_oracle = true;     // gate beats from generator ground truth
    uint32_t session_id = 1;
};

// Builds the raw session record for a case composition: clean segments,
// then noisy (dropout-dominated, rejected by the quality gate), then
// arrhythmic segments, at the canonical edge rate.
SynthRecord build_case_record(const CaseSpec& spec, uint32_t seed, const SimOptions& opts = {});

// End-to-end loopback simulation of one session; returns the edge-side
// result (counters drive the energy report).
SessionResult simulate_case(const CaseSpec& spec, const ModelGraph& model, uint32_t seed,
                            const EdgeConfig& cfg = {}, const SimOptions& opts = {});

} // namespace ecgmon
