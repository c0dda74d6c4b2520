#pragma once

#include <cstdint>
#include <vector>

#include "ecgmon/qrs.hpp"
#include "ecgmon/train.hpp"

namespace ecgmon {

struct CorpusSpec {
    int count = 2000;
    std::array<double, 4> class_mix = {0.55, 0.15, 0.20, 0.10}; // N,S,V,F
    double noise_std_mv = 0.02;
};

// Deterministic labeled beat corpus for desk-scale training: windows drawn
// from the per-class morphologies with shape jitter, labels 0..3.
std::vector<TrainBeat> make_beat_corpus(const CorpusSpec& spec, uint32_t seed);

// Same beats relabeled 0 = normal, 1 = abnormal.
std::vector<TrainBeat> to_binary_labels(const std::vector<TrainBeat>& four_class);

} // namespace ecgmon
