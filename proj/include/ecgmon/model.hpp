#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ecgmon/tensor.hpp"

namespace ecgmon {

enum class LayerKind { conv1d, maxpool, batchnorm, grouped_conv, pointwise_conv, dense, dropout };

const char* to_string(LayerKind k);

// One layer of the graph. Convolutions use same padding; pooling uses
// ceil-mode output lengths. in_len/out_len are filled by shape inference.
struct LayerSpec {
    LayerKind kind = LayerKind::conv1d;
    std::string name;
    int kernel = 1;
    int stride = 1;
    int in_ch = 1;
    int out_ch = 1;
    int groups = 1;
    bool relu = false;
    bool softmax = false;
    float dropout_p = 0.0f;
    int in_len = 0;
    int out_len = 0;
};

// Ordered layer list with a named-weight store. layers[cut_index] is the
// early dense head; layers before it form the shared trunk executed on the
// edge, layers after it form the fog subgraph. Both heads read from the
// trunk output (the cut activation).
struct ModelGraph {
    std::vector<LayerSpec> layers;
    std::map<std::string, Tensor> weights;
    int cut_index = 0;
    int input_len = 0;
    int input_ch = 1;

    const LayerSpec& head1() const { return layers[static_cast<size_t>(cut_index)]; }
    const LayerSpec& head2() const { return layers.back(); }
};

// Shape-infers the layer list, Glorot-initializes weights (biases zero,
// batch-norm scale 1 / shift 0 / running stats identity) and returns the
// assembled graph. cut_index must point at a dense layer.
ModelGraph assemble_model(std::vector<LayerSpec> layers, int input_len, int input_ch,
                          int cut_index, uint32_t seed);

// The production two-head beat classifier:
//   Input(105,1) -> Conv(k64,s2,c5,ReLU) -> MaxPool(2,2) -> BatchNorm
//   -> [head1 Dense(135->2, softmax)]
//   -> Conv(k32,s1,c15,ReLU) -> MaxPool -> BatchNorm
//   -> GroupedConv(k10,g15,c75) -> PointwiseConv(c5,ReLU) -> MaxPool
//   -> BatchNorm -> Dropout(0.2) -> Dense(35->4, softmax)
ModelGraph build_model(uint32_t seed);

inline constexpr long kEdgeParamTotal = 607;
inline constexpr long kFogParamTotal = 3804;
inline constexpr int kCutLen = 27;
inline constexpr int kCutCh = 5;

enum class RunMode { train, infer };

struct ForwardResult {
    Tensor head1; // probability 2-vector
    Tensor head2; // probability 4-vector
    Tensor cut;   // trunk output crossing the edge/fog split
};

// Single-sample forward. Train mode uses per-sample batch statistics and
// active dropout (seeded); infer mode uses running stats and identity
// dropout.
ForwardResult forward(const ModelGraph& m, const Tensor& x, RunMode mode = RunMode::infer,
                      uint64_t dropout_seed = 0);

struct EdgeForward {
    Tensor head1;
    Tensor cut;
};

// The split execution pair. forward_fog(forward_edge(x).cut) reproduces
// forward(x).head2 bit-identically: both paths run the same kernels in the
// same order.
EdgeForward forward_edge(const ModelGraph& m, const Tensor& x);
Tensor forward_fog(const ModelGraph& m, const Tensor& cut);

long count_params(const LayerSpec& l);
long count_params(const ModelGraph& m);
long edge_params(const ModelGraph& m); // trunk + head1
long fog_params(const ModelGraph& m);

// Multiply-accumulate count: convolutions (Cin*Cout*K*out_len)/groups,
// dense in*out, zero for pool/batchnorm/dropout.
long count_macs(const LayerSpec& l);
long count_macs(const ModelGraph& m);
long edge_macs(const ModelGraph& m);
long fog_macs(const ModelGraph& m);

// Weights container: magic "NNW1", text manifest (name kind dims... per
// tensor, graph order) terminated by a blank line, then raw little-endian
// float32 payload in manifest order.
void save_weights(const ModelGraph& m, const std::string& path);
std::vector<uint8_t> serialize_weights(const ModelGraph& m);

// Rebuilds the production graph and loads tensors from the container.
// Throws FormatError on bad magic, shape mismatch or truncation.
ModelGraph load_weights(const std::string& path);
ModelGraph deserialize_weights(const std::vector<uint8_t>& bytes);

// SHA-256 of the serialized container; the model version exchanged in HELLO.
std::array<uint8_t, 32> weights_hash(const ModelGraph& m);

} // namespace ecgmon
