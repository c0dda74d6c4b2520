#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ecgmon/aami.hpp"
#include "ecgmon/signal.hpp"

namespace ecgmon {

struct BeatAnnotation {
    long sample_index = 0;
    BeatClass label = BeatClass::Q;
};

// CSV record format: header "sample_index,mv" plus a sidecar "<path>.meta"
// holding "fs=<Hz>". Binary format: magic "ECG1", u64 LE sample count,
// f64 LE fs, then f32 LE samples.
EcgSignal load_ecg_csv(const std::string& path, double fs_override = 0.0);
void save_ecg_csv(const EcgSignal& sig, const std::string& path);
EcgSignal load_ecg_binary(const std::string& path);
void save_ecg_binary(const EcgSignal& sig, const std::string& path);

// Sniffs the binary magic and falls back to CSV.
EcgSignal load_ecg_auto(const std::string& path, double fs_override = 0.0);

// Annotation CSV: header "sample_index,symbol". Unknown symbols map to Q
// with a warning; out-of-order rows are sorted with a warning.
std::vector<BeatAnnotation> load_annotations(const std::string& path,
                                             std::vector<std::string>* warnings = nullptr);
void save_annotations(const std::vector<BeatAnnotation>& ann, const std::string& path);

std::pair<EcgSignal, std::vector<BeatAnnotation>> load_record(
    const std::string& ecg_path, const std::string& ann_path,
    std::vector<std::string>* warnings = nullptr);

// Record split manifest: "train:", "test:" and "exclude:" lines listing
// record ids. Excluded ids are dropped from both sides.
struct SplitManifest {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> exclude;

    bool is_excluded(const std::string& id) const;
};

SplitManifest load_split_manifest(const std::string& path);

} // namespace ecgmon
