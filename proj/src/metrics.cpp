#include "ecgmon/metrics.hpp"

#include "ecgmon/errors.hpp"

namespace ecgmon {

Rates metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) {
        throw ParameterError("metrics: counts must be non-negative");
    }
    if (c.total() <= 0) throw ParameterError("metrics: empty confusion counts");

    Rates r;
    if (c.tp + c.fn > 0) r.se = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) r.sp = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    if (c.tp + c.fp > 0) r.ppv = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    r.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return r;
}

} // namespace ecgmon
