#include "ecgmon/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ecgmon/errors.hpp"

namespace ecgmon {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double read_sidecar_fs(const std::string& ecg_path) {
    std::ifstream in(ecg_path + ".meta");
    if (!in) throw FormatError("missing sidecar metadata: " + ecg_path + ".meta");
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.rfind("fs=", 0) == 0) {
            try {
                return std::stod(line.substr(3));
            } catch (...) {
                throw FormatError("bad fs value in " + ecg_path + ".meta");
            }
        }
    }
    throw FormatError("no fs= entry in " + ecg_path + ".meta");
}

uint64_t read_u64_le(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void write_u64_le(std::ofstream& out, uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

} // namespace

EcgSignal load_ecg_csv(const std::string& path, double fs_override) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty file: " + path);
    if (trim(line) != "sample_index,mv") {
        throw FormatError("expected header 'sample_index,mv' in " + path);
    }

    EcgSignal sig;
    sig.fs = fs_override > 0.0 ? fs_override : read_sidecar_fs(path);
    long expected = 0;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("malformed row in " + path);
        long idx;
        double mv;
        try {
            idx = std::stol(line.substr(0, comma));
            mv = std::stod(line.substr(comma + 1));
        } catch (...) {
            throw FormatError("malformed row in " + path);
        }
        if (first) {
            sig.start_index = idx;
            expected = idx;
            first = false;
        }
        if (idx != expected) throw FormatError("non-contiguous sample_index in " + path);
        ++expected;
        if (!std::isfinite(mv)) throw FormatError("non-finite sample in " + path);
        sig.samples.push_back(static_cast<float>(mv));
    }
    validate_signal(sig);
    return sig;
}

void save_ecg_csv(const EcgSignal& sig, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path);
    out << "sample_index,mv\n";
    for (size_t i = 0; i < sig.samples.size(); ++i) {
        out << (sig.start_index + static_cast<long>(i)) << ',' << sig.samples[i] << '\n';
    }
    std::ofstream meta(path + ".meta");
    if (!meta) throw FormatError("cannot open " + path + ".meta");
    meta << "fs=" << sig.fs << '\n';
}

EcgSignal load_ecg_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 20 || std::memcmp(bytes.data(), "ECG1", 4) != 0) {
        throw FormatError("bad magic in " + path);
    }
    const uint64_t count = read_u64_le(&bytes[4]);
    uint64_t fs_bits = read_u64_le(&bytes[12]);
    double fs;
    std::memcpy(&fs, &fs_bits, 8);
    if (bytes.size() != 20 + count * 4) {
        throw FormatError("sample payload length mismatch in " + path);
    }
    EcgSignal sig;
    sig.fs = fs;
    sig.samples.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t bits = static_cast<uint32_t>(bytes[20 + i * 4]) |
                        (static_cast<uint32_t>(bytes[20 + i * 4 + 1]) << 8) |
                        (static_cast<uint32_t>(bytes[20 + i * 4 + 2]) << 16) |
                        (static_cast<uint32_t>(bytes[20 + i * 4 + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        sig.samples[i] = v;
    }
    validate_signal(sig);
    return sig;
}

void save_ecg_binary(const EcgSignal& sig, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path);
    out.write("ECG1", 4);
    write_u64_le(out, sig.samples.size());
    uint64_t fs_bits;
    std::memcpy(&fs_bits, &sig.fs, 8);
    write_u64_le(out, fs_bits);
    for (float v : sig.samples) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

EcgSignal load_ecg_auto(const std::string& path, double fs_override) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw FormatError("cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, "ECG1", 4) == 0) return load_ecg_binary(path);
    return load_ecg_csv(path, fs_override);
}

std::vector<BeatAnnotation> load_annotations(const std::string& path,
                                             std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty file: " + path);
    if (trim(line) != "sample_index,symbol") {
        throw FormatError("expected header 'sample_index,symbol' in " + path);
    }

    std::vector<BeatAnnotation> ann;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos || comma + 1 >= line.size()) {
            throw FormatError("malformed row in " + path);
        }
        BeatAnnotation a;
        try {
            a.sample_index = std::stol(line.substr(0, comma));
        } catch (...) {
            throw FormatError("malformed row in " + path);
        }
        const char symbol = line[comma + 1];
        const auto cls = aami_from_symbol(symbol);
        if (!cls) {
            if (warnings) {
                warnings->push_back(std::string("unknown symbol '") + symbol + "' mapped to Q");
            }
            a.label = BeatClass::Q;
        } else {
            a.label = *cls;
        }
        ann.push_back(a);
    }
    if (!std::is_sorted(ann.begin(), ann.end(), [](const auto& x, const auto& y) {
            return x.sample_index < y.sample_index;
        })) {
        if (warnings) warnings->push_back("annotations were out of order; sorted");
        std::sort(ann.begin(), ann.end(),
                  [](const auto& x, const auto& y) { return x.sample_index < y.sample_index; });
    }
    return ann;
}

void save_annotations(const std::vector<BeatAnnotation>& ann, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path);
    out << "sample_index,symbol\n";
    for (const auto& a : ann) out << a.sample_index << ',' << to_char(a.label) << '\n';
}

std::pair<EcgSignal, std::vector<BeatAnnotation>> load_record(
    const std::string& ecg_path, const std::string& ann_path,
    std::vector<std::string>* warnings) {
    return {load_ecg_auto(ecg_path), load_annotations(ann_path, warnings)};
}

bool SplitManifest::is_excluded(const std::string& id) const {
    return std::find(exclude.begin(), exclude.end(), id) != exclude.end();
}

SplitManifest load_split_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    SplitManifest m;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string>* target = nullptr;
        size_t skip = 0;
        if (line.rfind("train:", 0) == 0) {
            target = &m.train;
            skip = 6;
        } else if (line.rfind("test:", 0) == 0) {
            target = &m.test;
            skip = 5;
        } else if (line.rfind("exclude:", 0) == 0) {
            target = &m.exclude;
            skip = 8;
        } else {
            throw FormatError("unknown manifest line: " + line);
        }
        std::istringstream rest(line.substr(skip));
        std::string id;
        while (rest >> id) target->push_back(id);
    }
    // Excluded ids never appear on either side.
    auto drop = [&m](std::vector<std::string>& v) {
        v.erase(std::remove_if(v.begin(), v.end(),
                               [&m](const std::string& id) { return m.is_excluded(id); }),
                v.end());
    };
    drop(m.train);
    drop(m.test);
    return m;
}

} // namespace ecgmon
