#include "ecgmon/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "ecgmon/errors.hpp"
#include "ecgmon/sha256.hpp"
#include "nn_kernels.hpp"

namespace ecgmon {

const char* to_string(LayerKind k) {
    switch (k) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::grouped_conv: return "grouped_conv";
    case LayerKind::pointwise_conv: return "pointwise_conv";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    }
    return "?";
}

namespace {

void glorot_fill(Tensor& t, int fan_in, int fan_out, std::mt19937& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data) v = static_cast<float>(dist(rng));
}

// Tensor names per layer, in container order.
std::vector<std::string> tensor_names(const LayerSpec& l) {
    switch (l.kind) {
    case LayerKind::conv1d:
    case LayerKind::grouped_conv:
    case LayerKind::pointwise_conv:
    case LayerKind::dense:
        return {l.name + ".w", l.name + ".b"};
    case LayerKind::batchnorm:
        return {l.name + ".gamma", l.name + ".beta", l.name + ".rmean", l.name + ".rvar"};
    default:
        return {};
    }
}

} // namespace

ModelGraph assemble_model(std::vector<LayerSpec> layers, int input_len, int input_ch,
                          int cut_index, uint32_t seed) {
    if (layers.empty()) throw ParameterError("assemble_model: empty layer list");
    if (cut_index < 0 || cut_index >= static_cast<int>(layers.size()) ||
        layers[static_cast<size_t>(cut_index)].kind != LayerKind::dense) {
        throw ParameterError("assemble_model: cut_index must select a dense head");
    }

    int cur_len = input_len;
    int cur_ch = input_ch;
    for (size_t i = 0; i < layers.size(); ++i) {
        LayerSpec& l = layers[i];
        if (l.kind == LayerKind::dense) {
            l.in_ch = cur_len * cur_ch;
            l.in_len = l.in_ch;
            l.out_len = l.out_ch;
            if (static_cast<int>(i) == cut_index) continue; // head taps the trunk
            cur_len = l.out_ch;
            cur_ch = 1;
            continue;
        }
        l.in_len = cur_len;
        l.in_ch = cur_ch;
        switch (l.kind) {
        case LayerKind::conv1d:
        case LayerKind::grouped_conv:
        case LayerKind::pointwise_conv:
            if (l.in_ch % l.groups != 0 || l.out_ch % l.groups != 0) {
                throw ParameterError("assemble_model: channels not divisible by groups for " + l.name);
            }
            l.out_len = nn::conv_out_len(cur_len, l.stride);
            cur_len = l.out_len;
            cur_ch = l.out_ch;
            break;
        case LayerKind::maxpool:
            l.out_ch = cur_ch;
            l.out_len = nn::pool_out_len(cur_len, l.kernel, l.stride);
            cur_len = l.out_len;
            break;
        case LayerKind::batchnorm:
        case LayerKind::dropout:
            l.out_ch = cur_ch;
            l.out_len = cur_len;
            break;
        default:
            break;
        }
    }

    ModelGraph m;
    m.layers = std::move(layers);
    m.cut_index = cut_index;
    m.input_len = input_len;
    m.input_ch = input_ch;

    std::mt19937 rng(seed);
    for (const LayerSpec& l : m.layers) {
        switch (l.kind) {
        case LayerKind::conv1d:
        case LayerKind::grouped_conv:
        case LayerKind::pointwise_conv: {
            const int in_pg = l.in_ch / l.groups;
            Tensor w = Tensor::make3(l.kernel, in_pg, l.out_ch);
            glorot_fill(w, l.kernel * in_pg, l.kernel * l.out_ch / l.groups, rng);
            m.weights[l.name + ".w"] = std::move(w);
            m.weights[l.name + ".b"] = Tensor::make1(l.out_ch);
            break;
        }
        case LayerKind::dense: {
            Tensor w = Tensor::make2(l.in_ch, l.out_ch);
            glorot_fill(w, l.in_ch, l.out_ch, rng);
            m.weights[l.name + ".w"] = std::move(w);
            m.weights[l.name + ".b"] = Tensor::make1(l.out_ch);
            break;
        }
        case LayerKind::batchnorm: {
            Tensor gamma = Tensor::make1(l.out_ch);
            for (auto& v : gamma.data) v = 1.0f;
            Tensor rvar = Tensor::make1(l.out_ch);
            for (auto& v : rvar.data) v = 1.0f;
            m.weights[l.name + ".gamma"] = std::move(gamma);
            m.weights[l.name + ".beta"] = Tensor::make1(l.out_ch);
            m.weights[l.name + ".rmean"] = Tensor::make1(l.out_ch);
            m.weights[l.name + ".rvar"] = std::move(rvar);
            break;
        }
        default:
            break;
        }
    }
    return m;
}

ModelGraph build_model(uint32_t seed) {
    std::vector<LayerSpec> layers(13);
    layers[0] = {.kind = LayerKind::conv1d, .name = "conv1", .kernel = 64, .stride = 2,
                 .out_ch = 5, .relu = true};
    layers[1] = {.kind = LayerKind::maxpool, .name = "pool1", .kernel = 2, .stride = 2};
    layers[2] = {.kind = LayerKind::batchnorm, .name = "bn1"};
    layers[3] = {.kind = LayerKind::dense, .name = "fc1", .out_ch = 2, .softmax = true};
    layers[4] = {.kind = LayerKind::conv1d, .name = "conv2", .kernel = 32, .stride = 1,
                 .out_ch = 15, .relu = true};
    layers[5] = {.kind = LayerKind::maxpool, .name = "pool2", .kernel = 2, .stride = 2};
    layers[6] = {.kind = LayerKind::batchnorm, .name = "bn2"};
    layers[7] = {.kind = LayerKind::grouped_conv, .name = "gconv", .kernel = 10, .stride = 1,
                 .out_ch = 75, .groups = 15};
    layers[8] = {.kind = LayerKind::pointwise_conv, .name = "pconv", .kernel = 1, .stride = 1,
                 .out_ch = 5, .relu = true};
    layers[9] = {.kind = LayerKind::maxpool, .name = "pool3", .kernel = 2, .stride = 2};
    layers[10] = {.kind = LayerKind::batchnorm, .name = "bn3"};
    layers[11] = {.kind = LayerKind::dropout, .name = "drop", .dropout_p = 0.2f};
    layers[12] = {.kind = LayerKind::dense, .name = "fc2", .out_ch = 4, .softmax = true};
    return assemble_model(std::move(layers), 105, 1, 3, seed);
}

namespace {

nn::Batch to_batch(const Tensor& x) {
    nn::Batch b = nn::Batch::make(1, x.len(), x.rank >= 2 ? x.ch() : 1);
    std::memcpy(b.data.data(), x.data.data(), x.data.size() * sizeof(float));
    return b;
}

Tensor from_batch(const nn::Batch& b) {
    Tensor t = b.ch > 1 ? Tensor::make2(b.len, b.ch) : Tensor::make1(b.len);
    std::memcpy(t.data.data(), b.data.data(), t.data.size() * sizeof(float));
    return t;
}

void check_input(const ModelGraph& m, const Tensor& x) {
    const int ch = x.rank >= 2 ? x.ch() : 1;
    if (x.len() != m.input_len || ch != m.input_ch) {
        throw ParameterError("forward: input shape mismatch");
    }
    for (float v : x.data) {
        if (!std::isfinite(v)) throw ParameterError("forward: non-finite input");
    }
}

nn::Batch run_span(const ModelGraph& m, nn::Batch b, size_t first, size_t last_exclusive,
                   RunMode mode, uint64_t dropout_seed) {
    nn::Batch next;
    for (size_t i = first; i < last_exclusive; ++i) {
        if (static_cast<int>(i) == m.cut_index) continue;
        nn::forward_layer(m.layers[i], m.weights, mode, b, next, nullptr, nullptr, dropout_seed);
        b = std::move(next);
    }
    return b;
}

} // namespace

static EdgeForward forward_edge_impl(const ModelGraph& m, const Tensor& x, RunMode mode,
                                     uint64_t dropout_seed) {
    check_input(m, x);
    nn::Batch cut = run_span(m, to_batch(x), 0, static_cast<size_t>(m.cut_index), mode, dropout_seed);
    nn::Batch probs;
    nn::forward_layer(m.layers[static_cast<size_t>(m.cut_index)], m.weights, mode, cut, probs,
                      nullptr, nullptr, dropout_seed);
    EdgeForward out;
    out.head1 = from_batch(probs);
    out.cut = from_batch(cut);
    return out;
}

EdgeForward forward_edge(const ModelGraph& m, const Tensor& x) {
    return forward_edge_impl(m, x, RunMode::infer, 0);
}

static Tensor forward_fog_impl(const ModelGraph& m, const Tensor& cut, RunMode mode,
                               uint64_t dropout_seed) {
    if (static_cast<size_t>(m.cut_index) + 1 >= m.layers.size()) {
        throw ParameterError("forward_fog: the graph has no layers past the cut");
    }
    const LayerSpec& first_fog = m.layers[static_cast<size_t>(m.cut_index) + 1];
    if (first_fog.kind == LayerKind::dense) {
        if (cut.size() != first_fog.in_ch) {
            throw ParameterError("forward_fog: cut activation shape mismatch");
        }
    } else if (cut.len() != first_fog.in_len || cut.ch() != first_fog.in_ch) {
        throw ParameterError("forward_fog: cut activation shape mismatch");
    }
    nn::Batch b = run_span(m, to_batch(cut), static_cast<size_t>(m.cut_index) + 1,
                           m.layers.size(), mode, dropout_seed);
    return from_batch(b);
}

Tensor forward_fog(const ModelGraph& m, const Tensor& cut) {
    return forward_fog_impl(m, cut, RunMode::infer, 0);
}

ForwardResult forward(const ModelGraph& m, const Tensor& x, RunMode mode, uint64_t dropout_seed) {
    EdgeForward edge = forward_edge_impl(m, x, mode, dropout_seed);
    ForwardResult r;
    r.head2 = forward_fog_impl(m, edge.cut, mode, dropout_seed);
    r.head1 = std::move(edge.head1);
    r.cut = std::move(edge.cut);
    return r;
}

long count_params(const LayerSpec& l) {
    switch (l.kind) {
    case LayerKind::conv1d:
    case LayerKind::grouped_conv:
    case LayerKind::pointwise_conv:
        return static_cast<long>(l.kernel) * (l.in_ch / l.groups) * l.out_ch + l.out_ch;
    case LayerKind::dense:
        return static_cast<long>(l.in_ch) * l.out_ch + l.out_ch;
    case LayerKind::batchnorm:
        return 2L * l.out_ch;
    default:
        return 0;
    }
}

long count_params(const ModelGraph& m) {
    long total = 0;
    for (const auto& l : m.layers) total += count_params(l);
    return total;
}

long edge_params(const ModelGraph& m) {
    long total = 0;
    for (int i = 0; i <= m.cut_index; ++i) total += count_params(m.layers[static_cast<size_t>(i)]);
    return total;
}

long fog_params(const ModelGraph& m) { return count_params(m) - edge_params(m); }

long count_macs(const LayerSpec& l) {
    switch (l.kind) {
    case LayerKind::conv1d:
    case LayerKind::grouped_conv:
    case LayerKind::pointwise_conv:
        return static_cast<long>(l.in_ch) * l.out_ch * l.kernel * l.out_len / l.groups;
    case LayerKind::dense:
        return static_cast<long>(l.in_ch) * l.out_ch;
    default:
        return 0;
    }
}

long count_macs(const ModelGraph& m) {
    long total = 0;
    for (const auto& l : m.layers) total += count_macs(l);
    return total;
}

long edge_macs(const ModelGraph& m) {
    long total = 0;
    for (int i = 0; i <= m.cut_index; ++i) total += count_macs(m.layers[static_cast<size_t>(i)]);
    return total;
}

long fog_macs(const ModelGraph& m) { return count_macs(m) - edge_macs(m); }

// ---------------------------------------------------------------------------
// Weights container

namespace {

constexpr char kWeightsMagic[4] = {'N', 'N', 'W', '1'};

void append_f32_le(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap32(bits);
    }
    out.push_back(static_cast<uint8_t>(bits & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 24) & 0xff));
}

float read_f32_le(const uint8_t* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

std::vector<uint8_t> serialize_weights(const ModelGraph& m) {
    std::ostringstream manifest;
    std::vector<const Tensor*> order;
    for (const LayerSpec& l : m.layers) {
        for (const std::string& name : tensor_names(l)) {
            const Tensor& t = m.weights.at(name);
            manifest << name << ' ' << to_string(l.kind);
            for (int d = 0; d < t.rank; ++d) manifest << ' ' << t.shape[static_cast<size_t>(d)];
            manifest << '\n';
            order.push_back(&t);
        }
    }
    manifest << '\n'; // blank-line sentinel

    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), kWeightsMagic, kWeightsMagic + 4);
    const std::string text = manifest.str();
    bytes.insert(bytes.end(), text.begin(), text.end());
    for (const Tensor* t : order) {
        for (float v : t->data) append_f32_le(bytes, v);
    }
    return bytes;
}

void save_weights(const ModelGraph& m, const std::string& path) {
    const std::vector<uint8_t> bytes = serialize_weights(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_weights: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    if (!out) throw FormatError("save_weights: write failed for " + path);
}

ModelGraph deserialize_weights(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) {
        throw FormatError("weights container: bad magic");
    }

    // Manifest: text lines up to the blank-line sentinel.
    size_t pos = 4;
    struct Entry {
        std::string name;
        std::vector<int> dims;
    };
    std::vector<Entry> entries;
    while (true) {
        size_t eol = pos;
        while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
        if (eol >= bytes.size()) throw FormatError("weights container: unterminated manifest");
        const std::string line(bytes.begin() + static_cast<long>(pos),
                               bytes.begin() + static_cast<long>(eol));
        pos = eol + 1;
        if (line.empty()) break; // sentinel
        std::istringstream ls(line);
        Entry e;
        std::string kind;
        if (!(ls >> e.name >> kind)) throw FormatError("weights container: malformed manifest line");
        int d;
        while (ls >> d) {
            if (d <= 0) throw FormatError("weights container: non-positive dimension");
            e.dims.push_back(d);
        }
        if (e.dims.empty() || e.dims.size() > 3) {
            throw FormatError("weights container: bad tensor rank");
        }
        entries.push_back(std::move(e));
    }

    ModelGraph m = build_model(0);
    size_t expected_tensors = 0;
    for (const LayerSpec& l : m.layers) expected_tensors += tensor_names(l).size();
    if (entries.size() != expected_tensors) {
        throw FormatError("weights container: tensor count does not match the model");
    }

    size_t total_values = 0;
    for (const Entry& e : entries) {
        size_t n = 1;
        for (int d : e.dims) n *= static_cast<size_t>(d);
        total_values += n;
    }
    if (bytes.size() - pos != total_values * 4) {
        throw FormatError("weights container: payload length disagrees with manifest");
    }

    size_t seen = 0;
    for (const LayerSpec& l : m.layers) {
        for (const std::string& name : tensor_names(l)) {
            const Entry& e = entries[seen++];
            if (e.name != name) throw FormatError("weights container: unexpected tensor " + e.name);
            Tensor& t = m.weights.at(name);
            if (static_cast<int>(e.dims.size()) != t.rank) {
                throw FormatError("weights container: rank mismatch for " + name);
            }
            for (size_t d = 0; d < e.dims.size(); ++d) {
                if (e.dims[d] != t.shape[d]) {
                    throw FormatError("weights container: shape mismatch for " + name);
                }
            }
            for (size_t i = 0; i < t.data.size(); ++i) {
                t.data[i] = read_f32_le(&bytes[pos]);
                pos += 4;
            }
        }
    }
    return m;
}

ModelGraph load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_weights: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

std::array<uint8_t, 32> weights_hash(const ModelGraph& m) {
    const std::vector<uint8_t> bytes = serialize_weights(m);
    return sha256(bytes);
}

} // namespace ecgmon
