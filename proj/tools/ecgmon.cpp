// ecgmon: command-line surface of the ECG monitoring pipeline.
//
// Exit codes: 0 success, 1 validation/usage error, 2 I/O or protocol error.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "ecgmon/config.hpp"
#include "ecgmon/corpus.hpp"
#include "ecgmon/dataset.hpp"
#include "ecgmon/edge.hpp"
#include "ecgmon/energy.hpp"
#include "ecgmon/errors.hpp"
#include "ecgmon/eval.hpp"
#include "ecgmon/fog.hpp"
#include "ecgmon/model.hpp"
#include "ecgmon/sha256.hpp"
#include "ecgmon/sim.hpp"
#include "ecgmon/sqa.hpp"
#include "ecgmon/train.hpp"

using namespace ecgmon;

namespace {

KeyValueConfig g_config;

SqaConfig sqa_from_config() {
    SqaConfig c;
    c.window_s = g_config.get_double("sqa.window_s", c.window_s);
    c.lambda_absence = g_config.get_double("sqa.lambda_absence", c.lambda_absence);
    c.std_threshold = g_config.get_double("sqa.std_threshold", c.std_threshold);
    c.mov_window_len = static_cast<int>(g_config.get_long("sqa.mov_window_len", c.mov_window_len));
    c.overlap_frac = g_config.get_double("sqa.overlap_frac", c.overlap_frac);
    const std::string pol = g_config.get_string("sqa.polarity", "as_stated");
    if (pol == "inverted") {
        c.polarity = SqaPolarity::inverted;
    } else if (pol != "as_stated") {
        throw ParameterError("sqa.polarity must be as_stated or inverted");
    }
    return c;
}

EdgeConfig edge_from_config() {
    EdgeConfig c;
    c.sqa = sqa_from_config();
    c.hrv_threshold = g_config.get_double("edge.hrv_threshold", c.hrv_threshold);
    c.corr_threshold = g_config.get_double("edge.corr_threshold", c.corr_threshold);
    c.template_beats = static_cast<int>(g_config.get_long("edge.template_beats", c.template_beats));
    c.rate_window = static_cast<int>(g_config.get_long("edge.rate_window", c.rate_window));
    c.low_fs = g_config.get_double("edge.low_fs", c.low_fs);
    c.full_fs = g_config.get_double("edge.full_fs", c.full_fs);
    c.max_pending = static_cast<size_t>(g_config.get_long("edge.max_pending",
                                                          static_cast<long>(c.max_pending)));
    return c;
}

TrainConfig train_from_config() {
    TrainConfig c;
    c.lr = g_config.get_double("train.lr", c.lr);
    c.beta1 = g_config.get_double("train.beta1", c.beta1);
    c.beta2 = g_config.get_double("train.beta2", c.beta2);
    c.lr_drop_factor = g_config.get_double("train.lr_drop_factor", c.lr_drop_factor);
    c.plateau_epochs = static_cast<int>(g_config.get_long("train.plateau_epochs", c.plateau_epochs));
    c.early_stop_epochs =
        static_cast<int>(g_config.get_long("train.early_stop_epochs", c.early_stop_epochs));
    c.max_epochs = static_cast<int>(g_config.get_long("train.max_epochs", c.max_epochs));
    c.dropout_p = g_config.get_double("train.dropout_p", c.dropout_p);
    c.batch_size = static_cast<int>(g_config.get_long("train.batch_size", c.batch_size));
    c.seed = static_cast<uint32_t>(g_config.get_long("train.seed", c.seed));
    c.class_weighting = g_config.get_bool("train.class_weighting", c.class_weighting);
    c.verbose = g_config.get_bool("train.verbose", c.verbose);
    return c;
}

EnergyModel energy_from_config() {
    EnergyModel m;
    for (auto& [tech, rate] : m.uj_per_bit) {
        rate = g_config.get_double("energy." + tech + "_uj_per_bit", rate);
    }
    m.compute_nj_per_mac = g_config.get_double("energy.compute_nj_per_mac", m.compute_nj_per_mac);
    m.sample_bits = static_cast<int>(g_config.get_long("energy.sample_bits", m.sample_bits));
    m.raw_stream_fs = g_config.get_double("energy.raw_stream_fs", m.raw_stream_fs);
    return m;
}

SimOptions sim_from_config() {
    SimOptions o;
    o.bpm = g_config.get_double("sim.bpm", o.bpm);
    o.abnormal_rate = g_config.get_double("sim.abnormal_rate", o.abnormal_rate);
    o.use_oracle = g_config.get_bool("sim.use_oracle", o.use_oracle);
    return o;
}

// Beats for training: either the synthetic corpus or annotated records
// segmented at their labeled R positions.
std::vector<TrainBeat> beats_from_records(const std::vector<std::string>& record_paths) {
    std::vector<TrainBeat> beats;
    const FirFilter bandpass = design_bandpass(kCanonicalFs, 1.0, 50.0);
    for (const std::string& path : record_paths) {
        std::vector<std::string> warnings;
        const auto [raw, annotations] = load_record(path, path + ".ann.csv", &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << '\n';
        EcgSignal canonical =
            std::abs(raw.fs - kCanonicalFs) > 1e-9 ? resample(raw, kCanonicalFs) : raw;
        const EcgSignal filtered = filter_signal(canonical, bandpass);
        const double scale = kCanonicalFs / raw.fs;
        const long n = static_cast<long>(filtered.samples.size());
        for (const BeatAnnotation& a : annotations) {
            if (a.label == BeatClass::Q) continue; // excluded from training
            const long r = std::lround(a.sample_index * scale);
            if (r - kPreRSamples < 0 || r + kPostRSamples >= n) continue;
            TrainBeat beat;
            beat.x = Tensor::make2(kBeatWindowLen, 1);
            for (int k = 0; k < kBeatWindowLen; ++k) {
                beat.x.data[static_cast<size_t>(k)] =
                    filtered.samples[static_cast<size_t>(r - kPreRSamples + k)];
            }
            beat.label = static_cast<int>(a.label);
            beats.push_back(std::move(beat));
        }
    }
    return beats;
}

void split_train_val(const std::vector<TrainBeat>& all, double val_frac, uint32_t seed,
                     std::vector<TrainBeat>& train_set, std::vector<TrainBeat>& val_set) {
    std::vector<size_t> order(all.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t val_n = static_cast<size_t>(val_frac * static_cast<double>(all.size()));
    for (size_t i = 0; i < order.size(); ++i) {
        (i < val_n ? val_set : train_set).push_back(all[order[i]]);
    }
}

std::string format_counters(const SessionCounters& c) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "bytes_sent=%llu\nheart_rate_msgs=%llu\nfeature_map_msgs=%llu\n"
                  "noise_reports=%llu\nrate_changes=%llu\nbeats_seen=%llu\nbeats_normal=%llu\n"
                  "beats_abnormal=%llu\ndropped_msgs=%llu\nedge_macs=%llu\nfog_macs=%llu\n",
                  static_cast<unsigned long long>(c.bytes_sent),
                  static_cast<unsigned long long>(c.heart_rate_msgs),
                  static_cast<unsigned long long>(c.feature_map_msgs),
                  static_cast<unsigned long long>(c.noise_reports),
                  static_cast<unsigned long long>(c.rate_changes),
                  static_cast<unsigned long long>(c.beats_seen),
                  static_cast<unsigned long long>(c.beats_normal),
                  static_cast<unsigned long long>(c.beats_abnormal),
                  static_cast<unsigned long long>(c.dropped_msgs),
                  static_cast<unsigned long long>(c.edge_mac_count),
                  static_cast<unsigned long long>(c.fog_mac_count));
    return buf;
}

volatile std::sig_atomic_t g_stop_requested = 0;
void handle_sigint(int) { g_stop_requested = 1; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG edge/fog monitoring pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value configuration file");

    // ----- synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic record corpus");
    std::string synth_out = "synth_out";
    int synth_records = 4;
    double synth_duration = 60.0, synth_bpm = 75.0, synth_abnormal = 0.0;
    uint32_t synth_seed = 1;
    bool synth_binary = false;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--records", synth_records, "number of records")->check(CLI::PositiveNumber);
    synth->add_option("--duration", synth_duration, "seconds per record");
    synth->add_option("--bpm", synth_bpm, "target heart rate");
    synth->add_option("--abnormal-rate", synth_abnormal, "fraction of abnormal beats");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_flag("--binary", synth_binary, "write the binary format instead of CSV");

    // ----- sqa
    auto* sqa_cmd = app.add_subcommand("sqa", "grade a record in 10 s windows");
    std::string sqa_input;
    double sqa_fs_override = 0.0;
    sqa_cmd->add_option("--input", sqa_input, "record file (CSV or binary)")->required();
    sqa_cmd->add_option("--fs", sqa_fs_override, "sampling rate when the sidecar is absent");

    // ----- train
    auto* train_cmd = app.add_subcommand("train", "train the beat classifier");
    std::vector<std::string> train_records;
    int train_synth_count = 0;
    uint32_t train_synth_seed = 42;
    std::string train_weights_out = "model.nnw";
    train_cmd->add_option("--record", train_records, "record file(s) with .ann.csv sidecars");
    train_cmd->add_option("--synth-count", train_synth_count,
                          "train on a synthetic corpus of this many beats");
    train_cmd->add_option("--synth-seed", train_synth_seed, "corpus seed");
    train_cmd->add_option("--weights-out", train_weights_out, "output weights container");

    // ----- train-edge-head
    auto* head_cmd = app.add_subcommand("train-edge-head",
                                        "train the binary head on a frozen trunk");
    std::string head_weights_in, head_weights_out = "model_edge.nnw";
    std::vector<std::string> head_records;
    int head_synth_count = 0;
    uint32_t head_synth_seed = 43;
    head_cmd->add_option("--weights", head_weights_in, "trained weights container")->required();
    head_cmd->add_option("--weights-out", head_weights_out, "output weights container");
    head_cmd->add_option("--record", head_records, "record file(s) with .ann.csv sidecars");
    head_cmd->add_option("--synth-count", head_synth_count, "synthetic corpus size");
    head_cmd->add_option("--synth-seed", head_synth_seed, "corpus seed");

    // ----- infer
    auto* infer_cmd = app.add_subcommand("infer", "monolithic inference over a record");
    std::string infer_weights, infer_input;
    infer_cmd->add_option("--weights", infer_weights, "weights container")->required();
    infer_cmd->add_option("--input", infer_input, "record file")->required();

    // ----- serve-fog
    auto* serve_cmd = app.add_subcommand("serve-fog", "run the fog classification service");
    std::string serve_weights, serve_log;
    uint16_t serve_port = 7070;
    int serve_sessions = 8;
    serve_cmd->add_option("--weights", serve_weights, "weights container")->required();
    serve_cmd->add_option("--port", serve_port, "listen port (0 = ephemeral)");
    serve_cmd->add_option("--max-sessions", serve_sessions, "concurrent session cap");
    serve_cmd->add_option("--log", serve_log, "session log path");

    // ----- run-edge
    auto* edge_cmd = app.add_subcommand("run-edge", "run an edge session over a record");
    std::string edge_input, edge_connect, edge_weights;
    uint32_t edge_session_id = 1;
    edge_cmd->add_option("--input", edge_input, "record file")->required();
    edge_cmd->add_option("--connect", edge_connect, "fog address host:port");
    edge_cmd->add_option("--weights", edge_weights, "weights container")->required();
    edge_cmd->add_option("--session-id", edge_session_id, "session identifier");

    // ----- simulate
    auto* sim_cmd = app.add_subcommand("simulate", "edge+fog loopback over a case mix");
    std::string sim_case = "II";
    uint32_t sim_seed = 1;
    std::string sim_weights;
    sim_cmd->add_option("--case", sim_case, "case name: I, II or III");
    sim_cmd->add_option("--seed", sim_seed, "generator seed");
    sim_cmd->add_option("--weights", sim_weights,
                        "gate beats with this model instead of ground truth");

    // ----- eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate the pipeline over labeled records");
    std::string eval_weights;
    std::vector<std::string> eval_records;
    std::string eval_split;
    eval_cmd->add_option("--weights", eval_weights, "weights container")->required();
    eval_cmd->add_option("--record", eval_records, "record file(s) with .ann.csv sidecars")
        ->required();
    eval_cmd->add_option("--split", eval_split, "record split manifest (ids are filtered)");

    // ----- energy-report
    auto* energy_cmd = app.add_subcommand("energy-report",
                                          "case I/II/III communication energy comparison");
    uint32_t energy_seed = 1;
    energy_cmd->add_option("--seed", energy_seed, "simulation seed");

    // ----- mac-report
    auto* mac_cmd = app.add_subcommand("mac-report", "per-layer MAC and parameter accounting");
    std::vector<std::string> mac_baselines;
    mac_cmd->add_option("--baseline", mac_baselines, "external baseline name:macs:params");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!config_path.empty()) g_config = KeyValueConfig::load(config_path);

        if (*synth) {
            std::filesystem::create_directories(synth_out);
            for (int i = 0; i < synth_records; ++i) {
                SynthSpec spec;
                spec.duration_s = synth_duration;
                spec.bpm = synth_bpm;
                spec.abnormal_beat_rate = synth_abnormal;
                const SynthRecord rec = generate_ecg(spec, synth_seed + static_cast<uint32_t>(i));
                const std::string base =
                    (std::filesystem::path(synth_out) / ("rec_" + std::to_string(i))).string();
                if (synth_binary) {
                    save_ecg_binary(rec.signal, base + ".ecg");
                } else {
                    save_ecg_csv(rec.signal, base + ".csv");
                }
                std::vector<BeatAnnotation> ann;
                for (const auto& b : rec.beats) ann.push_back({b.r_index, b.label});
                save_annotations(ann, base + (synth_binary ? ".ecg" : ".csv") + ".ann.csv");
                std::cout << base << (synth_binary ? ".ecg" : ".csv") << ": "
                          << rec.signal.samples.size() << " samples, " << rec.beats.size()
                          << " beats\n";
            }
            return 0;
        }

        if (*sqa_cmd) {
            const EcgSignal sig = load_ecg_auto(sqa_input, sqa_fs_override);
            const SqaConfig cfg = sqa_from_config();
            std::cout << "window_start,grade,reason,mean_abs,mean_sigma\n";
            for (const auto& [start, verdict] : grade_record(sig, cfg)) {
                std::cout << start << ',' << to_string(verdict.grade) << ','
                          << to_string(verdict.reason) << ',' << verdict.mean_abs << ','
                          << verdict.mean_sigma << '\n';
            }
            return 0;
        }

        if (*train_cmd) {
            std::vector<TrainBeat> all;
            if (train_synth_count > 0) {
                CorpusSpec spec;
                spec.count = train_synth_count;
                all = make_beat_corpus(spec, train_synth_seed);
            } else if (!train_records.empty()) {
                all = beats_from_records(train_records);
            } else {
                std::cerr << "train: provide --record files or --synth-count\n";
                return 1;
            }
            if (all.size() < 10) throw ParameterError("train: too few beats");
            std::vector<TrainBeat> train_set, val_set;
            split_train_val(all, 0.2, 7, train_set, val_set);

            const TrainConfig cfg = train_from_config();
            const TrainResult result = train(build_model(cfg.seed), train_set, val_set, cfg);
            save_weights(result.model, train_weights_out);
            std::cout << "best_val_acc=" << result.best_val_acc
                      << " best_epoch=" << result.best_epoch << " epochs=" << result.log.size()
                      << '\n';
            std::cout << "weights=" << train_weights_out << '\n';
            return 0;
        }

        if (*head_cmd) {
            const ModelGraph trained = load_weights(head_weights_in);
            std::vector<TrainBeat> all;
            if (head_synth_count > 0) {
                CorpusSpec spec;
                spec.count = head_synth_count;
                all = to_binary_labels(make_beat_corpus(spec, head_synth_seed));
            } else if (!head_records.empty()) {
                all = beats_from_records(head_records);
                for (auto& b : all) b.label = b.label == 0 ? 0 : 1;
            } else {
                std::cerr << "train-edge-head: provide --record files or --synth-count\n";
                return 1;
            }
            std::vector<TrainBeat> train_set, val_set;
            split_train_val(all, 0.2, 8, train_set, val_set);

            const TrainConfig cfg = train_from_config();
            const TrainResult result = train_edge_head(trained, train_set, val_set, cfg);
            save_weights(result.model, head_weights_out);
            std::cout << "best_val_acc=" << result.best_val_acc
                      << " best_epoch=" << result.best_epoch << '\n';
            std::cout << "weights=" << head_weights_out << '\n';
            return 0;
        }

        if (*infer_cmd) {
            const ModelGraph model = load_weights(infer_weights);
            const EcgSignal raw = load_ecg_auto(infer_input);
            EcgSignal canonical =
                std::abs(raw.fs - kCanonicalFs) > 1e-9 ? resample(raw, kCanonicalFs) : raw;
            const FirFilter bandpass = design_bandpass(kCanonicalFs, 1.0, 50.0);
            const EcgSignal filtered = filter_signal(canonical, bandpass);
            const auto segments = segment_beats(filtered, detect_rpeaks(filtered));
            std::cout << "r_index,head1_normal,head1_abnormal,class,probs\n";
            for (const auto& seg : segments) {
                Tensor x = Tensor::make2(kBeatWindowLen, 1);
                for (int k = 0; k < kBeatWindowLen; ++k) {
                    x.data[static_cast<size_t>(k)] = seg.window[static_cast<size_t>(k)];
                }
                const ForwardResult r = forward(model, x);
                int best = 0;
                for (int i = 1; i < 4; ++i) {
                    if (r.head2.data[static_cast<size_t>(i)] > r.head2.data[static_cast<size_t>(best)]) best = i;
                }
                std::cout << seg.r_index << ',' << r.head1.data[0] << ',' << r.head1.data[1]
                          << ',' << "NSVF"[best] << ',' << r.head2.data[0] << ';'
                          << r.head2.data[1] << ';' << r.head2.data[2] << ';' << r.head2.data[3]
                          << '\n';
            }
            return 0;
        }

        if (*serve_cmd) {
            FogConfig cfg;
            cfg.port = serve_port;
            cfg.max_sessions = serve_sessions;
            cfg.log_path = serve_log;
            cfg.weights_path = serve_weights;
            FogServer server(load_weights(serve_weights), cfg);
            server.start();
            std::cout << "fog service listening on port " << server.port() << '\n';
            std::signal(SIGINT, handle_sigint);
            std::signal(SIGTERM, handle_sigint);
            while (!g_stop_requested) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            server.stop();
            return 0;
        }

        if (*edge_cmd) {
            const ModelGraph model = load_weights(edge_weights);
            const EcgSignal raw = load_ecg_auto(edge_input);
            const EdgeConfig cfg = edge_from_config();
            EdgeSessionOptions opts;
            opts.session_id = edge_session_id;

            std::unique_ptr<FogHandler> local_handler;
            std::unique_ptr<FogLink> link;
            if (edge_connect.empty()) {
                local_handler = std::make_unique<FogHandler>(model);
                link = std::make_unique<LoopbackLink>(*local_handler);
            } else {
                const size_t colon = edge_connect.rfind(':');
                if (colon == std::string::npos) {
                    throw ParameterError("run-edge: --connect expects host:port");
                }
                link = std::make_unique<SocketLink>(
                    edge_connect.substr(0, colon),
                    static_cast<uint16_t>(std::stoi(edge_connect.substr(colon + 1))));
            }
            const SessionResult result = run_edge_session(raw, model, *link, cfg, opts);
            for (const auto& line : result.log_lines) std::cout << line << '\n';
            std::cout << format_counters(result.counters);
            return 0;
        }

        if (*sim_cmd) {
            const CaseSpec spec = CaseSpec::parse(sim_case);
            const SimOptions opts = [&] {
                SimOptions o = sim_from_config();
                if (!sim_weights.empty()) o.use_oracle = false;
                return o;
            }();
            const ModelGraph model =
                sim_weights.empty() ? build_model(1) : load_weights(sim_weights);
            if (spec.clean_minutes == 60.0 && spec.noisy_minutes == 0.0 &&
                spec.arrhythmic_minutes == 0.0) {
                // Case I is raw streaming: closed form, no session
                const EnergyModel em = energy_from_config();
                std::cout << "case=I\n";
                std::cout << "raw_bits=" << 3600.0 * em.raw_stream_fs * em.sample_bits << '\n';
                for (const auto& [tech, rate] : em.uj_per_bit) {
                    std::cout << "energy_j." << tech << '='
                              << raw_stream_energy_j(rate, em.raw_stream_fs, em.sample_bits,
                                                     3600.0)
                              << '\n';
                }
                return 0;
            }
            const SessionResult result = simulate_case(spec, model, sim_seed, edge_from_config(),
                                                       opts);
            std::cout << "case=" << sim_case << " seed=" << sim_seed << '\n';
            std::cout << format_counters(result.counters);
            return 0;
        }

        if (*eval_cmd) {
            const ModelGraph model = load_weights(eval_weights);
            std::vector<LabeledRecord> records;
            SplitManifest manifest;
            if (!eval_split.empty()) manifest = load_split_manifest(eval_split);
            for (const std::string& path : eval_records) {
                const std::string id = std::filesystem::path(path).stem().string();
                if (!eval_split.empty() && manifest.is_excluded(id)) {
                    std::cout << "excluded record: " << id << '\n';
                    continue;
                }
                std::vector<std::string> warnings;
                LabeledRecord rec;
                rec.id = id;
                std::tie(rec.signal, rec.annotations) =
                    load_record(path, path + ".ann.csv", &warnings);
                for (const auto& w : warnings) std::cerr << "warning: " << id << ": " << w << '\n';
                records.push_back(std::move(rec));
            }
            EvalConfig cfg;
            cfg.edge = edge_from_config();
            const PipelineReport report = evaluate_pipeline(records, model, cfg);
            std::cout << format_pipeline_report(report);
            return 0;
        }

        if (*energy_cmd) {
            const EnergyModel em = energy_from_config();
            const ModelGraph model = build_model(1);
            const SimOptions opts = sim_from_config();
            const EdgeConfig cfg = edge_from_config();
            const SessionResult ii = simulate_case(CaseSpec::case_II(), model, energy_seed, cfg,
                                                   opts);
            const SessionResult iii = simulate_case(CaseSpec::case_III(), model,
                                                    energy_seed + 1000, cfg, opts);
            const EnergyReport report = make_energy_report(em, ii.counters, iii.counters);
            std::cout << format_energy_report(report);
            return 0;
        }

        if (*mac_cmd) {
            std::vector<MacBaseline> baselines;
            for (const std::string& spec : mac_baselines) {
                const size_t c1 = spec.find(':');
                const size_t c2 = spec.find(':', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos) {
                    throw ParameterError("mac-report: --baseline expects name:macs:params");
                }
                baselines.push_back({spec.substr(0, c1), std::stod(spec.substr(c1 + 1, c2 - c1 - 1)),
                                     std::stod(spec.substr(c2 + 1))});
            }
            std::cout << format_mac_report(build_model(1), baselines);
            return 0;
        }
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
