#pragma once

#include <optional>

namespace ecgmon {

struct ConfusionCounts {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;

    long total() const { return tp + tn + fp + fn; }
};

// Rates with zero denominators are reported as nullopt, never as 0/0.
struct Rates {
    std::optional<double> se;  // TP/(TP+FN)
    std::optional<double> sp;  // TN/(TN+FP)
    std::optional<double> ppv; // TP/(TP+FP)
    std::optional<double> acc; // (TP+TN)/total
};

Rates metrics(const ConfusionCounts& c);

} // namespace ecgmon
