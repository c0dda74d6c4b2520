#pragma once

// Internal batched kernels for the layer engine. Storage is float32;
// every reduction accumulates in double so the monolithic and split
// execution paths agree bit-for-bit.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ecgmon/model.hpp"
#include "ecgmon/tensor.hpp"

namespace ecgmon::nn {

// B samples of (len, ch), contiguous: data[(b*len + p)*ch + c].
struct Batch {
    int n = 0, len = 0, ch = 0;
    std::vector<float> data;

    static Batch make(int n, int len, int ch) {
        Batch b;
        b.n = n;
        b.len = len;
        b.ch = ch;
        b.data.assign(static_cast<size_t>(n) * len * ch, 0.0f);
        return b;
    }
    float& at(int b, int p, int c) {
        return data[(static_cast<size_t>(b) * len + static_cast<size_t>(p)) * ch + c];
    }
    float at(int b, int p, int c) const {
        return data[(static_cast<size_t>(b) * len + static_cast<size_t>(p)) * ch + c];
    }
    size_t per_sample() const { return static_cast<size_t>(len) * ch; }
};

struct LayerCache {
    Batch in;                      // layer input (conv/dense/bn backward)
    Batch out;                     // layer output (ReLU mask)
    std::vector<int> pool_argmax;  // chosen input position per output element
    std::vector<double> bn_mean, bn_inv_std; // per channel, batch statistics
    std::vector<float> bn_xhat;    // normalized activations
    std::vector<uint8_t> dropout_mask;
};

// Gradient accumulator keyed like the weight store.
using GradMap = std::map<std::string, std::vector<double>>;

int same_pad_left(int in_len, int out_len, int kernel, int stride);
int conv_out_len(int in_len, int stride);                 // same padding
int pool_out_len(int in_len, int kernel, int stride);     // ceil mode

// Forward one layer. In train mode batch-norm uses batch statistics (and
// updates running stats through mutable_weights) and dropout is active with
// the given seed; in infer mode batch-norm reads running stats and dropout
// is the identity. cache may be null when no backward pass follows.
void forward_layer(const LayerSpec& spec, const std::map<std::string, Tensor>& weights,
                   RunMode mode, const Batch& in, Batch& out, LayerCache* cache,
                   std::map<std::string, Tensor>* mutable_weights, uint64_t dropout_seed);

// Backward one layer: consumes d(out), emits d(in), accumulates parameter
// gradients (per-batch means are applied by the caller).
void backward_layer(const LayerSpec& spec, const std::map<std::string, Tensor>& weights,
                    const LayerCache& cache, const Batch& dout, Batch& din, GradMap* grads);

// Row-wise stable softmax over the flattened sample.
void softmax_rows(Batch& b);

uint64_t layer_seed(uint64_t base, const std::string& layer_name);

} // namespace ecgmon::nn
