// Acceptance suite: runs every gate of the deliverable at its stated
// tolerance and prints one PASS/FAIL line per criterion. The process exit
// code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "corpora.hpp"
#include "ecgmon/corpus.hpp"
#include "ecgmon/edge.hpp"
#include "ecgmon/energy.hpp"
#include "ecgmon/errors.hpp"
#include "ecgmon/eval.hpp"
#include "ecgmon/fog.hpp"
#include "ecgmon/qrs.hpp"
#include "ecgmon/sim.hpp"
#include "ecgmon/sqa.hpp"
#include "ecgmon/train.hpp"
#include "ecgmon/wire.hpp"
#include "grad_check.hpp"
#include "oracles.hpp"

using namespace ecgmon;

namespace {

int g_failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int criterion, bool ok, const std::string& what) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// --------------------------------------------------------------- criterion 1
void criterion_architecture() {
    Timer t;
    const ModelGraph m = build_model(1);
    const std::vector<long> want_params = {325, 0, 10, 272, 2415, 0, 30, 825, 380, 0, 10, 0, 144};
    const std::vector<std::pair<int, int>> want_shapes = {
        {53, 5}, {27, 5}, {27, 5}, {2, 1}, {27, 15}, {14, 15}, {14, 15},
        {14, 75}, {14, 5}, {7, 5}, {7, 5}, {7, 5}, {4, 1}};

    bool ok = m.layers.size() == want_params.size();
    for (size_t i = 0; ok && i < want_params.size(); ++i) {
        ok = count_params(m.layers[i]) == want_params[i];
        const int out_ch = m.layers[i].kind == LayerKind::dense ? 1 : m.layers[i].out_ch;
        ok = ok && m.layers[i].out_len == want_shapes[i].first &&
             out_ch == want_shapes[i].second;
    }
    ok = ok && edge_params(m) == 607 && fog_params(m) == 3804;
    ok = ok && t.seconds() < 1.0;
    report(1, ok,
           fmt("architecture fidelity: per-layer params and shapes, edge 607 / fog 3804 "
               "(%.3f s)",
               t.seconds()));
}

// --------------------------------------------------------------- criterion 2
void criterion_numerical_core() {
    Timer t;
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> len_d(4, 24);
    std::uniform_int_distribution<int> ker_d(1, 9);
    std::uniform_int_distribution<int> stride_d(1, 3);
    std::uniform_int_distribution<int> ch_d(1, 6);

    long forward_failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int len = len_d(rng);
        const int variant = trial % 4;
        LayerSpec spec;
        spec.name = "t";
        if (variant == 0) {
            spec.kind = LayerKind::conv1d;
            spec.kernel = ker_d(rng);
            spec.stride = stride_d(rng);
            spec.in_ch = ch_d(rng);
            spec.out_ch = ch_d(rng);
            spec.relu = trial % 2 == 0;
        } else if (variant == 1) {
            spec.kind = LayerKind::grouped_conv;
            spec.kernel = ker_d(rng);
            spec.stride = 1;
            const int g = ch_d(rng);
            spec.groups = g;
            spec.in_ch = g;
            spec.out_ch = g * (1 + trial % 3);
        } else if (variant == 2) {
            spec.kind = LayerKind::pointwise_conv;
            spec.kernel = 1;
            spec.stride = 1;
            spec.in_ch = ch_d(rng);
            spec.out_ch = ch_d(rng);
            spec.relu = trial % 2 == 1;
        } else {
            spec.kind = LayerKind::maxpool;
            spec.kernel = 2 + trial % 3;
            spec.stride = 2 + trial % 2;
            spec.in_ch = ch_d(rng);
        }

        std::vector<LayerSpec> layers = {
            spec, {.kind = LayerKind::dense, .name = "fc", .out_ch = 2, .softmax = true}};
        const int in_ch = spec.in_ch;
        ModelGraph m = assemble_model(std::move(layers), len, in_ch, 1,
                                      static_cast<uint32_t>(trial));
        Tensor x = Tensor::make2(len, in_ch);
        std::normal_distribution<float> dist(0.0f, 1.0f);
        for (auto& v : x.data) v = dist(rng);
        const Tensor got = forward_edge(m, x).cut;

        std::vector<double> want;
        if (spec.kind == LayerKind::maxpool) {
            want = oracle::maxpool(x.data, len, in_ch, spec.kernel, spec.stride);
        } else {
            want = oracle::conv1d(x.data, len, spec.in_ch, m.weights.at("t.w").data, spec.kernel,
                                  spec.out_ch, spec.groups, m.weights.at("t.b").data, spec.stride,
                                  spec.relu);
        }
        if (static_cast<size_t>(got.size()) != want.size()) {
            ++forward_failures;
            continue;
        }
        for (size_t i = 0; i < want.size(); ++i) {
            const double denom = std::max(1e-3, std::abs(want[i]));
            if (std::abs(got.data[i] - want[i]) / denom >= 1e-5) {
                ++forward_failures;
                break;
            }
        }
    }

    // batch-norm train-mode oracle cases ride along with the 200 above
    for (int trial = 0; trial < 50; ++trial) {
        const int len = len_d(rng);
        const int ch = ch_d(rng);
        std::vector<LayerSpec> layers = {
            {.kind = LayerKind::batchnorm, .name = "bn"},
            {.kind = LayerKind::dense, .name = "fc1", .out_ch = 2, .softmax = true},
            {.kind = LayerKind::dense, .name = "fc2", .out_ch = 3, .softmax = true}};
        ModelGraph m = assemble_model(std::move(layers), len, ch, 1, static_cast<uint32_t>(trial));
        Tensor x = Tensor::make2(len, ch);
        std::normal_distribution<float> dist(0.0f, 2.0f);
        for (auto& v : x.data) v = dist(rng);
        const ForwardResult got = forward(m, x, RunMode::train, 7);
        const auto want = oracle::batchnorm_train(x.data, 1, len, ch, m.weights.at("bn.gamma").data,
                                                  m.weights.at("bn.beta").data);
        for (size_t i = 0; i < want.size(); ++i) {
            const double denom = std::max(1e-3, std::abs(want[i]));
            if (std::abs(got.cut.data[i] - want[i]) / denom >= 1e-5) {
                ++forward_failures;
                break;
            }
        }
    }

    long grad_mismatches = 0;
    long grad_checked = 0;
    for (uint32_t trial = 0; trial < 20; ++trial) {
        const auto batch = gradcheck::micro_batch(7200 + trial, 4, 3, 12);
        const auto stats = gradcheck::run_gradient_check(gradcheck::micro_model(7100 + trial),
                                                         batch, LossHead::head2, 7555 + trial);
        grad_mismatches += stats.mismatched;
        grad_checked += stats.checked;
    }

    const bool ok = forward_failures == 0 && grad_mismatches == 0 && t.seconds() < 120.0;
    report(2, ok,
           fmt("numerical core: 250 forward oracle cases (%ld bad), %ld/%ld gradient components "
               "within 1e-3 (%.1f s)",
               forward_failures, grad_checked - grad_mismatches, grad_checked, t.seconds()));
}

// --------------------------------------------------------------- criterion 3
void criterion_split_equality() {
    Timer t;
    const ModelGraph m = build_model(77);
    std::mt19937 rng(3);
    std::normal_distribution<float> dist(0.0f, 1.0f);

    long loopback_bad = 0;
    FogHandler handler(m);
    LoopbackLink loop(handler);
    std::vector<Tensor> inputs;
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor x = Tensor::make2(105, 1);
        for (auto& v : x.data) v = dist(rng);
        inputs.push_back(x);

        const ForwardResult mono = forward(m, x);
        const EdgeForward ef = forward_edge(m, x);
        const Tensor fog = forward_fog(m, ef.cut);
        if (std::memcmp(fog.data.data(), mono.head2.data.data(), 4 * sizeof(float)) != 0) {
            ++loopback_bad;
            continue;
        }
        FeatureMapPayload fm;
        std::memcpy(fm.values.data(), ef.cut.data.data(), fm.values.size() * sizeof(float));
        const auto reply = loop.send(WireMessage{1, static_cast<uint32_t>(trial), fm});
        const auto& cls = std::get<ClassificationPayload>(reply->payload);
        if (std::memcmp(cls.probs.data(), mono.head2.data.data(), 4 * sizeof(float)) != 0) {
            ++loopback_bad;
        }
    }

    long socket_bad = 0;
    {
        FogServer server(build_model(77));
        server.start();
        SocketLink link("127.0.0.1", server.port());
        for (size_t trial = 0; trial < inputs.size(); ++trial) {
            const ForwardResult mono = forward(m, inputs[trial]);
            const EdgeForward ef = forward_edge(m, inputs[trial]);
            FeatureMapPayload fm;
            std::memcpy(fm.values.data(), ef.cut.data.data(), fm.values.size() * sizeof(float));
            const auto reply = link.send(WireMessage{1, static_cast<uint32_t>(trial), fm});
            const auto& cls = std::get<ClassificationPayload>(reply->payload);
            if (std::memcmp(cls.probs.data(), mono.head2.data.data(), 4 * sizeof(float)) != 0) {
                ++socket_bad;
            }
        }
        server.stop();
    }

    const bool ok = loopback_bad == 0 && socket_bad == 0 && t.seconds() < 60.0;
    report(3, ok,
           fmt("split equality: 1000 inputs bit-identical over loopback (%ld bad) and socket "
               "(%ld bad) (%.1f s)",
               loopback_bad, socket_bad, t.seconds()));
}

// --------------------------------------------------------------- criterion 4
void criterion_training() {
    Timer t;
    CorpusSpec spec;
    spec.count = 2500;
    const auto beats = make_beat_corpus(spec, 20260401);
    const std::vector<TrainBeat> train_set(beats.begin(), beats.begin() + 2000);
    const std::vector<TrainBeat> val_set(beats.begin() + 2000, beats.end());

    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.seed = 4;
    const TrainResult stage1 = train(build_model(4), train_set, val_set, cfg);

    const auto train_bin = to_binary_labels(train_set);
    const auto val_bin = to_binary_labels(val_set);
    TrainConfig head_cfg;
    head_cfg.max_epochs = 100;
    head_cfg.seed = 5;
    const TrainResult stage2 = train_edge_head(stage1.model, train_bin, val_bin, head_cfg);

    bool trunk_untouched = true;
    for (const auto& [name, tensor] : stage1.model.weights) {
        if (name.rfind("fc1.", 0) == 0) continue;
        if (!(stage2.model.weights.at(name).data == tensor.data)) trunk_untouched = false;
    }

    const double elapsed = t.seconds();
    const bool ok = stage1.best_val_acc >= 0.90 && stage2.best_val_acc >= 0.90 &&
                    trunk_untouched && elapsed < 600.0;
    report(4, ok,
           fmt("desk-scale training: head2 val %.1f%% (epoch %d), binary head val %.1f%%, trunk "
               "bit-unchanged=%s (%.0f s)",
               stage1.best_val_acc * 100.0, stage1.best_epoch, stage2.best_val_acc * 100.0,
               trunk_untouched ? "yes" : "no", elapsed));

    // Informational: the full evaluation pipeline runs end-to-end on labeled
    // synthetic records with the trained model (real-data metrics are not
    // desk-scale gates).
    try {
        std::vector<LabeledRecord> records;
        for (uint32_t r = 0; r < 2; ++r) {
            SynthSpec rec_spec;
            rec_spec.duration_s = 120.0;
            rec_spec.bpm = 80.0;
            rec_spec.abnormal_beat_rate = 0.12;
            const SynthRecord rec = generate_ecg(rec_spec, 600 + r);
            LabeledRecord lr;
            lr.id = "synth_" + std::to_string(r);
            lr.signal = rec.signal;
            for (const auto& b : rec.beats) lr.annotations.push_back({b.r_index, b.label});
            records.push_back(std::move(lr));
        }
        const PipelineReport rep = evaluate_pipeline(records, stage2.model, EvalConfig{});
        const Rates binary = metrics(rep.binary);
        std::printf("  info: end-to-end eval on synthetic records: binary acc %.1f%%, "
                    "%ld/%ld beats evaluated, %ld misroutes\n",
                    binary.acc.value_or(0.0) * 100.0, rep.beats_evaluated, rep.beats_total,
                    rep.misroutes);
    } catch (const std::exception& e) {
        std::printf("  info: evaluation pipeline raised: %s\n", e.what());
    }
}

// --------------------------------------------------------------- criterion 5
void criterion_sqa() {
    Timer t;
    const corpora::SqaCorpus corpus = corpora::make_sqa_corpus(200, 200, 20260101);
    const SqaConfig cfg;
    long correct = 0;
    for (const auto& w : corpus.clean) {
        if (grade_window(w, cfg).grade == SqaGrade::acceptable) ++correct;
    }
    for (const auto& w : corpus.corrupted) {
        if (grade_window(w, cfg).grade == SqaGrade::unacceptable) ++correct;
    }
    const double acc = static_cast<double>(correct) / 400.0;

    std::mt19937 rng(55);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::uniform_int_distribution<int> len_d(60, 500);
    std::uniform_int_distribution<int> win_d(2, 52);
    long oracle_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<float> x(static_cast<size_t>(len_d(rng)));
        for (auto& v : x) v = dist(rng);
        const int win = std::min<int>(win_d(rng), static_cast<int>(x.size()));
        const auto got = moving_std(std::span<const float>(x), std::max(2, win), 0.7);
        const auto want = oracle::moving_std(x, std::max(2, win), 0.7);
        if (got.size() != want.size()) {
            ++oracle_bad;
            continue;
        }
        for (size_t i = 0; i < got.size(); ++i) {
            if (std::abs(got[i] - want[i]) > 1e-9) {
                ++oracle_bad;
                break;
            }
        }
    }

    const bool ok = acc >= 0.95 && oracle_bad == 0 && t.seconds() < 60.0;
    report(5, ok,
           fmt("signal quality: %.1f%% over 200+200 windows, moving-std oracle clean on 100 "
               "signals (%.1f s)",
               acc * 100.0, t.seconds()));
}

// --------------------------------------------------------------- criterion 6
void criterion_qrs() {
    Timer t;
    bool rates_ok = true;
    std::string detail;
    for (double bpm : {50.0, 75.0, 100.0, 150.0}) {
        SynthSpec spec;
        spec.bpm = bpm;
        spec.duration_s = 60.0;
        const SynthRecord rec = generate_ecg(spec, static_cast<uint32_t>(bpm));
        const FirFilter filt = design_bandpass(130.0, 1.0, 50.0);
        const EcgSignal f = filter_signal(rec.signal, filt);
        const RPeakList peaks = detect_rpeaks(f);

        const long tol = std::lround(0.030 * 130.0);
        long matched = 0;
        size_t j = 0;
        for (const auto& b : rec.beats) {
            while (j < peaks.indices.size() && peaks.indices[j] < b.r_index - tol) ++j;
            if (j < peaks.indices.size() && std::abs(peaks.indices[j] - b.r_index) <= tol) {
                ++matched;
                ++j;
            }
        }
        const double se = static_cast<double>(matched) / static_cast<double>(rec.beats.size());
        const double ppv = static_cast<double>(matched) / static_cast<double>(peaks.indices.size());
        detail += fmt("%g:%.3f/%.3f ", bpm, se, ppv);
        if (se < 0.99 || ppv < 0.99) rates_ok = false;
    }

    const bool hr_ok = std::abs(heart_rate(0, 130, 130.0) - 60.0) < 1e-9 &&
                       std::abs(heart_rate(0, 65, 130.0) - 120.0) < 1e-9 &&
                       std::abs(heart_rate(100, 200, 130.0) - 78.0) < 1e-9;

    const bool ok = rates_ok && hr_ok && t.seconds() < 30.0;
    report(6, ok,
           fmt("qrs detection: se/ppv %s>= 0.99 at +-30 ms, heart-rate unit examples exact "
               "(%.1f s)",
               detail.c_str(), t.seconds()));
}

// --------------------------------------------------------------- criterion 7
void criterion_decision_layer() {
    Timer t;
    const auto w = synth_beat_window(BeatClass::N, 70, 0.01);
    BeatSegment beat;
    std::copy(w.begin(), w.end(), beat.window.begin());
    BeatSegment seg = beat;
    const BeatTemplate tmpl = build_template(std::span<const BeatSegment>(&seg, 1));

    Tensor abnormal_probs = Tensor::make1(2);
    abnormal_probs.data = {0.2f, 0.8f};
    Tensor normal_probs = Tensor::make1(2);
    normal_probs.data = {0.9f, 0.1f};

    // head1 abnormal forwards regardless of the indicators
    BeatSegment b1 = beat;
    b1.rr_prev_s = 0.8;
    b1.rr_curr_s = 0.8;
    const EdgeDecision d1 = decide(b1, abnormal_probs, &tmpl, EdgeConfig{});
    const bool ex1 = d1.verdict == BeatVerdict::abnormal && d1.reason == OverrideReason::head1;

    // hrv override
    BeatSegment b2 = beat;
    b2.rr_prev_s = 0.8;
    b2.rr_curr_s = 0.5;
    const EdgeDecision d2 = decide(b2, normal_probs, &tmpl, EdgeConfig{});
    const bool ex2 = d2.verdict == BeatVerdict::abnormal && d2.reason == OverrideReason::hrv &&
                     std::abs(d2.hrv_value - 97.5) < 1e-9;

    // all gates pass
    BeatSegment b3 = beat;
    b3.rr_prev_s = 0.8;
    b3.rr_curr_s = 0.8;
    const EdgeDecision d3 = decide(b3, normal_probs, &tmpl, EdgeConfig{});
    const bool ex3 = d3.verdict == BeatVerdict::normal && d3.corr_value > 0.99;

    const bool hrv_exact = std::abs(hrv_indicator(0.8, 0.5, 130.0) - 97.5) < 1e-9;

    // rho(x, x) = 1 and affine invariance over 100 random vectors
    std::mt19937 rng(71);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.1, 4.0);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    long rho_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(105), y(105);
        for (auto& v : x) v = dist(rng);
        for (auto& v : y) v = dist(rng);
        if (std::abs(pearson_correlation(x, x) - 1.0) > 1e-9) ++rho_bad;
        std::vector<double> affine = y;
        const double a = scale(rng), b = shift(rng);
        for (auto& v : affine) v = a * v + b;
        if (std::abs(pearson_correlation(y, x) - pearson_correlation(affine, x)) > 1e-9) {
            ++rho_bad;
        }
    }

    const bool ok = ex1 && ex2 && ex3 && hrv_exact && rho_bad == 0;
    report(7, ok,
           fmt("decision layer: three routing examples, hrv 97.5 exact, correlation identity and "
               "affine invariance (%ld bad) (%.2f s)",
               rho_bad, t.seconds()));
}

// --------------------------------------------------------------- criterion 8
void criterion_protocol() {
    Timer t;
    std::mt19937 rng(80);
    std::uniform_int_distribution<int> type_d(1, 6);
    std::uniform_int_distribution<uint32_t> id_d(0, 0xffffffffu);
    std::normal_distribution<float> f_d(0.0f, 10.0f);
    std::uniform_int_distribution<int> byte_d(0, 255);

    long roundtrip_bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        WireMessage m;
        m.session_id = id_d(rng);
        m.beat_id = id_d(rng);
        switch (static_cast<MsgType>(type_d(rng))) {
        case MsgType::hello: {
            HelloPayload p;
            for (auto& b : p.weights_hash) b = static_cast<uint8_t>(byte_d(rng));
            p.fs = static_cast<uint16_t>(byte_d(rng));
            m.payload = p;
            break;
        }
        case MsgType::heart_rate:
            m.payload = HeartRatePayload{f_d(rng)};
            break;
        case MsgType::feature_map: {
            FeatureMapPayload p;
            for (auto& v : p.values) v = f_d(rng);
            m.payload = p;
            break;
        }
        case MsgType::classification: {
            ClassificationPayload p;
            p.beat_class = static_cast<uint8_t>(byte_d(rng) % 4);
            for (auto& v : p.probs) v = f_d(rng);
            m.payload = p;
            break;
        }
        case MsgType::rate_change:
            m.payload = RateChangePayload{static_cast<uint16_t>(byte_d(rng)),
                                          static_cast<uint8_t>(byte_d(rng))};
            break;
        case MsgType::noise_report:
            m.payload = NoiseReportPayload{id_d(rng), static_cast<uint8_t>(byte_d(rng))};
            break;
        }
        if (!(decode(encode(m)) == m)) ++roundtrip_bad;
    }

    long fuzz_crashes = 0;
    std::uniform_int_distribution<int> len_d(0, 600);
    for (int trial = 0; trial < 100000; ++trial) {
        std::vector<uint8_t> bytes(static_cast<size_t>(len_d(rng)));
        for (auto& b : bytes) b = static_cast<uint8_t>(byte_d(rng));
        if (trial % 2 == 0 && bytes.size() >= 8) {
            bytes[0] = 'E';
            bytes[1] = 'F';
            bytes[2] = 'G';
            bytes[3] = '1';
        }
        try {
            (void)decode(bytes);
        } catch (const ProtocolError&) {
            // expected outcome for malformed input
        } catch (...) {
            ++fuzz_crashes;
        }
    }

    const bool payload_ok = payload_size(MsgType::feature_map) == 540;
    const bool ok = roundtrip_bad == 0 && fuzz_crashes == 0 && payload_ok && t.seconds() < 60.0;
    report(8, ok,
           fmt("protocol: 10^4 round trips (%ld bad), 10^5 fuzzed frames (%ld crashes), "
               "feature-map payload 540 B (%.1f s)",
               roundtrip_bad, fuzz_crashes, t.seconds()));
}

// --------------------------------------------------------------- criterion 9
void criterion_energy() {
    Timer t;
    const EnergyModel em;
    const ModelGraph model = build_model(1);
    const SessionResult ii = simulate_case(CaseSpec::case_II(), model, 901);
    const SessionResult iii = simulate_case(CaseSpec::case_III(), model, 902);
    const EnergyReport rep = make_energy_report(em, ii.counters, iii.counters);

    bool ordering = true;
    double min_ratio = 1e300;
    for (const auto& [tech, e1] : rep.case_i.joules) {
        const double e2 = rep.case_ii.joules.at(tech);
        const double e3 = rep.case_iii.joules.at(tech);
        if (!(e1 > e3 && e3 > e2)) ordering = false;
        min_ratio = std::min(min_ratio, rep.ratio_i_over_ii.at(tech));
    }

    const double closed_form = raw_stream_energy_j(1.0, 360.0, 16, 3600.0);
    const bool closed_ok = std::abs(closed_form - 20.736) < 1e-9;

    const bool ok = ordering && min_ratio >= 50.0 && closed_ok && t.seconds() < 120.0;
    report(9, ok,
           fmt("energy model: E(I)>E(III)>E(II) for every technology, I/II ratio %.1f >= 50, "
               "closed-form 20.736 J exact (%.1f s)",
               min_ratio, t.seconds()));
}

// -------------------------------------------------------------- criterion 10
void criterion_macs() {
    Timer t;
    const ModelGraph m = build_model(1);
    const bool per_layer = count_macs(m.layers[0]) == 16960 && count_macs(m.layers[7]) == 10500 &&
                           count_macs(m.layers[8]) == 5250;
    const long total = count_macs(m);
    const double share = static_cast<double>(edge_params(m)) / static_cast<double>(count_params(m));
    const bool ok = per_layer && total < 1000000 && std::abs(share - 0.138) <= 0.01;
    report(10, ok,
           fmt("mac accounting: conv 16960 / grouped 10500 / pointwise 5250, total %ld < 10^6, "
               "edge share %.1f%% (%.2f s)",
               total, share * 100.0, t.seconds()));
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_architecture();
    criterion_numerical_core();
    criterion_split_equality();
    criterion_training();
    criterion_sqa();
    criterion_qrs();
    criterion_decision_layer();
    criterion_protocol();
    criterion_energy();
    criterion_macs();
    std::printf("%d of 10 criteria failed\n", g_failures);
    return g_failures;
}
