#include "ecgmon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ecgmon/errors.hpp"

namespace ecgmon {

namespace {

// Nearest annotation within tolerance, or -1.
long match_annotation(const std::vector<BeatAnnotation>& ann, long r_index, long tol) {
    long lo = 0, hi = static_cast<long>(ann.size());
    while (lo < hi) {
        const long mid = (lo + hi) / 2;
        if (ann[static_cast<size_t>(mid)].sample_index < r_index) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    long best = -1;
    long best_d = tol + 1;
    for (long k = lo - 1; k <= lo; ++k) {
        if (k < 0 || k >= static_cast<long>(ann.size())) continue;
        const long d = std::abs(ann[static_cast<size_t>(k)].sample_index - r_index);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

void add_one_vs_rest(ConfusionCounts& c, bool truth_pos, bool predicted_pos) {
    if (truth_pos && predicted_pos) ++c.tp;
    else if (truth_pos && !predicted_pos) ++c.fn;
    else if (!truth_pos && predicted_pos) ++c.fp;
    else ++c.tn;
}

} // namespace

PipelineReport evaluate_pipeline(const std::vector<LabeledRecord>& records,
                                 const ModelGraph& model, const EvalConfig& cfg) {
    if (records.empty()) throw ParameterError("evaluate_pipeline: no records");
    PipelineReport report;
    const FirFilter bandpass = design_bandpass(kCanonicalFs, 1.0, 50.0);

    for (const LabeledRecord& rec : records) {
        report.beats_total += static_cast<long>(rec.annotations.size());

        EcgSignal canonical = std::abs(rec.signal.fs - kCanonicalFs) > 1e-9
                                  ? resample(rec.signal, kCanonicalFs)
                                  : rec.signal;
        const double scale = kCanonicalFs / rec.signal.fs;
        std::vector<BeatAnnotation> ann = rec.annotations;
        for (auto& a : ann) a.sample_index = std::lround(a.sample_index * scale);
        std::sort(ann.begin(), ann.end(),
                  [](const auto& x, const auto& y) { return x.sample_index < y.sample_index; });

        const EcgSignal filtered = filter_signal(canonical, bandpass);
        const RPeakList peaks = detect_rpeaks(filtered);
        const std::vector<BeatSegment> segments = segment_beats(filtered, peaks);
        const long tol = std::lround(cfg.match_tolerance_s * kCanonicalFs);

        std::vector<bool> annotation_used(ann.size(), false);
        std::vector<BeatSegment> template_pool;
        std::optional<BeatTemplate> tmpl;

        for (const BeatSegment& seg : segments) {
            const long ai = match_annotation(ann, seg.r_index, tol);
            if (ai < 0 || annotation_used[static_cast<size_t>(ai)]) continue;
            annotation_used[static_cast<size_t>(ai)] = true;
            const BeatClass truth = ann[static_cast<size_t>(ai)].label;
            if (truth == BeatClass::Q) {
                ++report.beats_excluded_q;
                continue;
            }

            Tensor x = Tensor::make2(kBeatWindowLen, 1);
            std::memcpy(x.data.data(), seg.window.data(), seg.window.size() * sizeof(float));
            const EdgeForward ef = forward_edge(model, x);
            const EdgeDecision dec = decide(seg, ef.head1, tmpl ? &*tmpl : nullptr, cfg.edge);

            if (!tmpl && dec.verdict == BeatVerdict::normal) {
                template_pool.push_back(seg);
                if (static_cast<int>(template_pool.size()) >= cfg.edge.template_beats) {
                    try {
                        tmpl = build_template(template_pool);
                    } catch (const ParameterError&) {
                        template_pool.clear();
                    }
                }
            }

            ++report.beats_evaluated;
            const bool truth_abnormal = is_abnormal(truth);
            const bool decided_abnormal = dec.verdict == BeatVerdict::abnormal;
            add_one_vs_rest(report.binary, truth_abnormal, decided_abnormal);
            if (truth_abnormal && !decided_abnormal) ++report.misroutes;

            // The fog classifier only sees forwarded beats; local beats are
            // reported as N.
            BeatClass predicted = BeatClass::N;
            if (decided_abnormal) {
                const Tensor probs = forward_fog(model, ef.cut);
                int best = 0;
                for (int i = 1; i < 4; ++i) {
                    if (probs.data[static_cast<size_t>(i)] > probs.data[static_cast<size_t>(best)]) {
                        best = i;
                    }
                }
                predicted = static_cast<BeatClass>(best);
            }
            report.four_class[static_cast<size_t>(truth)][static_cast<size_t>(predicted)] += 1;
            add_one_vs_rest(report.veb, truth == BeatClass::V, predicted == BeatClass::V);
            add_one_vs_rest(report.sveb, truth == BeatClass::S, predicted == BeatClass::S);
        }

        for (size_t i = 0; i < ann.size(); ++i) {
            if (!annotation_used[i]) {
                if (ann[i].label == BeatClass::Q) {
                    ++report.beats_excluded_q;
                } else {
                    ++report.beats_unmatched;
                }
            }
        }
        report.notes.push_back(rec.id + ": " + std::to_string(segments.size()) +
                               " beats detected, " + std::to_string(ann.size()) + " annotated");
    }
    return report;
}

std::string format_pipeline_report(const PipelineReport& r) {
    std::ostringstream out;
    auto rate_str = [](const std::optional<double>& v) {
        return v ? std::to_string(*v * 100.0) : std::string("undefined");
    };
    auto print_rates = [&](const char* label, const ConfusionCounts& c) {
        out << label << ": ";
        if (c.total() == 0) {
            out << "no beats\n";
            return;
        }
        const Rates rates = metrics(c);
        out << "se%=" << rate_str(rates.se) << " sp%=" << rate_str(rates.sp)
            << " ppv%=" << rate_str(rates.ppv) << " acc%=" << rate_str(rates.acc) << '\n';
    };

    out << "beats: total=" << r.beats_total << " evaluated=" << r.beats_evaluated
        << " excluded_q=" << r.beats_excluded_q << " unmatched=" << r.beats_unmatched
        << " misroutes=" << r.misroutes << '\n';

    print_rates("layer2 normal/abnormal (abnormal positive)", r.binary);

    out << "four-class confusion (rows truth N,S,V,F; cols predicted):\n";
    for (size_t i = 0; i < 4; ++i) {
        out << "  " << "NSVF"[i] << ':';
        for (size_t j = 0; j < 4; ++j) out << ' ' << r.four_class[i][j];
        out << '\n';
    }

    print_rates("VEB one-vs-rest", r.veb);
    print_rates("SVEB one-vs-rest", r.sveb);
    return out.str();
}

} // namespace ecgmon
