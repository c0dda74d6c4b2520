#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "ecgmon/dataset.hpp"
#include "ecgmon/edge.hpp"
#include "ecgmon/metrics.hpp"
#include "ecgmon/model.hpp"

namespace ecgmon {

struct LabeledRecord {
    std::string id;
    EcgSignal signal;
    std::vector<BeatAnnotation> annotations;
};

struct PipelineReport {
    // Layer 2: normal/abnormal, abnormal positive.
    ConfusionCounts binary;
    // Rows = truth, cols = prediction over N,S,V,F. Beats the edge kept
    // local are predicted N (they never reach the fog classifier).
    std::array<std::array<long, 4>, 4> four_class{};
    ConfusionCounts veb;  // V vs rest
    ConfusionCounts sveb; // S vs rest
    long beats_total = 0;
    long beats_evaluated = 0;
    long beats_excluded_q = 0;
    long beats_unmatched = 0; // no annotation within tolerance
    long misroutes = 0;       // abnormal truth decided normal at the edge
    std::vector<std::string> notes;
};

struct EvalConfig {
    EdgeConfig edge;
    double match_tolerance_s = 0.15; // annotation-to-peak pairing window
};

// Runs resample -> filter -> detect -> segment -> edge decision -> fog
// classification over labeled records and aggregates every metric the
// report carries. Every annotated beat is counted exactly once.
PipelineReport evaluate_pipeline(const std::vector<LabeledRecord>& records,
                                 const ModelGraph& model, const EvalConfig& cfg);

std::string format_pipeline_report(const PipelineReport& report);

} // namespace ecgmon
