#include "nn_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ecgmon/errors.hpp"

namespace ecgmon::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9; // running = m*running + (1-m)*batch

const Tensor& get(const std::map<std::string, Tensor>& weights, const std::string& name) {
    auto it = weights.find(name);
    if (it == weights.end()) throw ParameterError("missing weight tensor: " + name);
    return it->second;
}

} // namespace

int conv_out_len(int in_len, int stride) { return (in_len + stride - 1) / stride; }

int same_pad_left(int in_len, int out_len, int kernel, int stride) {
    const int pad_total = std::max(0, (out_len - 1) * stride + kernel - in_len);
    return pad_total / 2; // the extra padding sample goes on the right
}

int pool_out_len(int in_len, int kernel, int stride) {
    if (in_len < kernel) return in_len > 0 ? 1 : 0;
    int out = (in_len - kernel + stride - 1) / stride + 1;
    if ((out - 1) * stride >= in_len) --out; // last window must start inside
    return out;
}

uint64_t layer_seed(uint64_t base, const std::string& layer_name) {
    uint64_t h = 1469598103934665603ull;
    for (char c : layer_name) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return base ^ h;
}

namespace {

void conv_forward(const LayerSpec& spec, const Tensor& w, const Tensor& b, const Batch& in,
                  Batch& out) {
    const int out_len = conv_out_len(in.len, spec.stride);
    const int pad_left = same_pad_left(in.len, out_len, spec.kernel, spec.stride);
    const int gsi = spec.in_ch / spec.groups;
    const int gso = spec.out_ch / spec.groups;
    out = Batch::make(in.n, out_len, spec.out_ch);

    for (int bi = 0; bi < in.n; ++bi) {
        for (int p = 0; p < out_len; ++p) {
            for (int co = 0; co < spec.out_ch; ++co) {
                const int g = co / gso;
                double acc = static_cast<double>(b.data[static_cast<size_t>(co)]);
                for (int k = 0; k < spec.kernel; ++k) {
                    const int j = p * spec.stride + k - pad_left;
                    if (j < 0 || j >= in.len) continue;
                    for (int cl = 0; cl < gsi; ++cl) {
                        acc += static_cast<double>(w.at3(k, cl, co)) *
                               static_cast<double>(in.at(bi, j, g * gsi + cl));
                    }
                }
                float v = static_cast<float>(acc);
                if (spec.relu && v < 0.0f) v = 0.0f;
                out.at(bi, p, co) = v;
            }
        }
    }
}

void conv_backward(const LayerSpec& spec, const Tensor& w, const LayerCache& cache,
                   const Batch& dout_in, Batch& din, GradMap* grads) {
    const Batch& in = cache.in;
    const int out_len = dout_in.len;
    const int pad_left = same_pad_left(in.len, out_len, spec.kernel, spec.stride);
    const int gsi = spec.in_ch / spec.groups;
    const int gso = spec.out_ch / spec.groups;

    // ReLU gate folded into the upstream gradient.
    Batch dpre = dout_in;
    if (spec.relu) {
        for (size_t i = 0; i < dpre.data.size(); ++i) {
            if (cache.out.data[i] <= 0.0f) dpre.data[i] = 0.0f;
        }
    }

    din = Batch::make(in.n, in.len, in.ch);
    std::vector<double> din_acc(din.data.size(), 0.0);
    std::vector<double>* dw = nullptr;
    std::vector<double>* db = nullptr;
    if (grads) {
        dw = &(*grads)[spec.name + ".w"];
        db = &(*grads)[spec.name + ".b"];
        dw->resize(w.data.size(), 0.0);
        db->resize(static_cast<size_t>(spec.out_ch), 0.0);
    }

    for (int bi = 0; bi < in.n; ++bi) {
        for (int p = 0; p < out_len; ++p) {
            for (int co = 0; co < spec.out_ch; ++co) {
                const double g_out = static_cast<double>(dpre.at(bi, p, co));
                if (g_out == 0.0) continue;
                const int g = co / gso;
                if (db) (*db)[static_cast<size_t>(co)] += g_out;
                for (int k = 0; k < spec.kernel; ++k) {
                    const int j = p * spec.stride + k - pad_left;
                    if (j < 0 || j >= in.len) continue;
                    for (int cl = 0; cl < gsi; ++cl) {
                        const int ci = g * gsi + cl;
                        if (dw) {
                            const size_t widx =
                                (static_cast<size_t>(k) * gsi + cl) * spec.out_ch + co;
                            (*dw)[widx] += g_out * static_cast<double>(in.at(bi, j, ci));
                        }
                        din_acc[(static_cast<size_t>(bi) * in.len + j) * in.ch + ci] +=
                            g_out * static_cast<double>(w.at3(k, cl, co));
                    }
                }
            }
        }
    }
    for (size_t i = 0; i < din.data.size(); ++i) din.data[i] = static_cast<float>(din_acc[i]);
}

void pool_forward(const LayerSpec& spec, const Batch& in, Batch& out, LayerCache* cache) {
    const int out_len = pool_out_len(in.len, spec.kernel, spec.stride);
    out = Batch::make(in.n, out_len, in.ch);
    if (cache) cache->pool_argmax.assign(out.data.size(), 0);

    for (int bi = 0; bi < in.n; ++bi) {
        for (int p = 0; p < out_len; ++p) {
            const int lo = p * spec.stride;
            const int hi = std::min(lo + spec.kernel, in.len);
            for (int c = 0; c < in.ch; ++c) {
                int best = lo;
                float value = in.at(bi, lo, c);
                for (int j = lo + 1; j < hi; ++j) {
                    if (in.at(bi, j, c) > value) {
                        value = in.at(bi, j, c);
                        best = j;
                    }
                }
                out.at(bi, p, c) = value;
                if (cache) {
                    cache->pool_argmax[(static_cast<size_t>(bi) * out_len + p) * in.ch + c] = best;
                }
            }
        }
    }
}

void pool_backward(const LayerCache& cache, const Batch& dout, Batch& din) {
    const Batch& in = cache.in;
    din = Batch::make(in.n, in.len, in.ch);
    for (int bi = 0; bi < dout.n; ++bi) {
        for (int p = 0; p < dout.len; ++p) {
            for (int c = 0; c < dout.ch; ++c) {
                const int src = cache.pool_argmax[(static_cast<size_t>(bi) * dout.len + p) * dout.ch + c];
                din.at(bi, src, c) += dout.at(bi, p, c);
            }
        }
    }
}

void bn_forward(const LayerSpec& spec, const std::map<std::string, Tensor>& weights, RunMode mode,
                const Batch& in, Batch& out, LayerCache* cache,
                std::map<std::string, Tensor>* mutable_weights) {
    const Tensor& gamma = get(weights, spec.name + ".gamma");
    const Tensor& beta = get(weights, spec.name + ".beta");
    out = Batch::make(in.n, in.len, in.ch);

    if (mode == RunMode::infer) {
        const Tensor& rmean = get(weights, spec.name + ".rmean");
        const Tensor& rvar = get(weights, spec.name + ".rvar");
        for (int c = 0; c < in.ch; ++c) {
            const double inv = 1.0 / std::sqrt(static_cast<double>(rvar.data[static_cast<size_t>(c)]) + kBnEps);
            const double mu = rmean.data[static_cast<size_t>(c)];
            const double g = gamma.data[static_cast<size_t>(c)];
            const double b = beta.data[static_cast<size_t>(c)];
            for (int bi = 0; bi < in.n; ++bi) {
                for (int p = 0; p < in.len; ++p) {
                    out.at(bi, p, c) = static_cast<float>(g * ((in.at(bi, p, c) - mu) * inv) + b);
                }
            }
        }
        return;
    }

    // Batch statistics over samples x positions per channel.
    const long m = static_cast<long>(in.n) * in.len;
    std::vector<double> mean(static_cast<size_t>(in.ch), 0.0);
    std::vector<double> var(static_cast<size_t>(in.ch), 0.0);
    for (int bi = 0; bi < in.n; ++bi) {
        for (int p = 0; p < in.len; ++p) {
            for (int c = 0; c < in.ch; ++c) mean[static_cast<size_t>(c)] += in.at(bi, p, c);
        }
    }
    for (auto& v : mean) v /= static_cast<double>(m);
    for (int bi = 0; bi < in.n; ++bi) {
        for (int p = 0; p < in.len; ++p) {
            for (int c = 0; c < in.ch; ++c) {
                const double d = in.at(bi, p, c) - mean[static_cast<size_t>(c)];
                var[static_cast<size_t>(c)] += d * d;
            }
        }
    }
    for (auto& v : var) v /= static_cast<double>(m);

    if (cache) {
        cache->bn_mean = mean;
        cache->bn_inv_std.resize(static_cast<size_t>(in.ch));
        cache->bn_xhat.assign(in.data.size(), 0.0f);
    }
    for (int c = 0; c < in.ch; ++c) {
        const double inv = 1.0 / std::sqrt(var[static_cast<size_t>(c)] + kBnEps);
        if (cache) cache->bn_inv_std[static_cast<size_t>(c)] = inv;
        const double g = gamma.data[static_cast<size_t>(c)];
        const double b = beta.data[static_cast<size_t>(c)];
        for (int bi = 0; bi < in.n; ++bi) {
            for (int p = 0; p < in.len; ++p) {
                const double xh = (in.at(bi, p, c) - mean[static_cast<size_t>(c)]) * inv;
                if (cache) {
                    cache->bn_xhat[(static_cast<size_t>(bi) * in.len + p) * in.ch + c] =
                        static_cast<float>(xh);
                }
                out.at(bi, p, c) = static_cast<float>(g * xh + b);
            }
        }
    }

    if (mutable_weights) {
        Tensor& rmean = (*mutable_weights)[spec.name + ".rmean"];
        Tensor& rvar = (*mutable_weights)[spec.name + ".rvar"];
        const double unbias = m > 1 ? static_cast<double>(m) / (m - 1) : 1.0;
        for (int c = 0; c < in.ch; ++c) {
            rmean.data[static_cast<size_t>(c)] = static_cast<float>(
                kBnMomentum * rmean.data[static_cast<size_t>(c)] + (1.0 - kBnMomentum) * mean[static_cast<size_t>(c)]);
            rvar.data[static_cast<size_t>(c)] = static_cast<float>(
                kBnMomentum * rvar.data[static_cast<size_t>(c)] +
                (1.0 - kBnMomentum) * var[static_cast<size_t>(c)] * unbias);
        }
    }
}

void bn_backward(const LayerSpec& spec, const std::map<std::string, Tensor>& weights,
                 const LayerCache& cache, const Batch& dout, Batch& din, GradMap* grads) {
    const Tensor& gamma = get(weights, spec.name + ".gamma");
    const Batch& in = cache.in;
    const long m = static_cast<long>(in.n) * in.len;
    din = Batch::make(in.n, in.len, in.ch);

    std::vector<double>* dgamma = nullptr;
    std::vector<double>* dbeta = nullptr;
    if (grads) {
        dgamma = &(*grads)[spec.name + ".gamma"];
        dbeta = &(*grads)[spec.name + ".beta"];
        dgamma->resize(static_cast<size_t>(in.ch), 0.0);
        dbeta->resize(static_cast<size_t>(in.ch), 0.0);
    }

    for (int c = 0; c < in.ch; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int bi = 0; bi < in.n; ++bi) {
            for (int p = 0; p < in.len; ++p) {
                const double dy = dout.at(bi, p, c);
                const double xh = cache.bn_xhat[(static_cast<size_t>(bi) * in.len + p) * in.ch + c];
                sum_dy += dy;
                sum_dy_xhat += dy * xh;
            }
        }
        if (dgamma) (*dgamma)[static_cast<size_t>(c)] += sum_dy_xhat;
        if (dbeta) (*dbeta)[static_cast<size_t>(c)] += sum_dy;

        const double g = gamma.data[static_cast<size_t>(c)];
        const double inv = cache.bn_inv_std[static_cast<size_t>(c)];
        for (int bi = 0; bi < in.n; ++bi) {
            for (int p = 0; p < in.len; ++p) {
                const double dy = dout.at(bi, p, c);
                const double xh = cache.bn_xhat[(static_cast<size_t>(bi) * in.len + p) * in.ch + c];
                const double dx =
                    (g * inv / static_cast<double>(m)) *
                    (static_cast<double>(m) * dy - sum_dy - xh * sum_dy_xhat);
                din.at(bi, p, c) = static_cast<float>(dx);
            }
        }
    }
}

void dense_forward(const LayerSpec& spec, const Tensor& w, const Tensor& b, const Batch& in,
                   Batch& out) {
    const int in_dim = in.len * in.ch;
    out = Batch::make(in.n, spec.out_ch, 1);
    for (int bi = 0; bi < in.n; ++bi) {
        const float* x = &in.data[static_cast<size_t>(bi) * in.per_sample()];
        for (int o = 0; o < spec.out_ch; ++o) {
            double acc = static_cast<double>(b.data[static_cast<size_t>(o)]);
            for (int i = 0; i < in_dim; ++i) {
                acc += static_cast<double>(w.at(i, o)) * static_cast<double>(x[i]);
            }
            float v = static_cast<float>(acc);
            if (spec.relu && v < 0.0f) v = 0.0f;
            out.at(bi, o, 0) = v;
        }
    }
    if (spec.softmax) softmax_rows(out);
}

void dense_backward(const LayerSpec& spec, const Tensor& w, const LayerCache& cache,
                    const Batch& dout, Batch& din, GradMap* grads) {
    // dout is d(logits): softmax and cross-entropy are fused upstream.
    const Batch& in = cache.in;
    const int in_dim = in.len * in.ch;
    din = Batch::make(in.n, in.len, in.ch);

    std::vector<double>* dw = nullptr;
    std::vector<double>* db = nullptr;
    if (grads) {
        dw = &(*grads)[spec.name + ".w"];
        db = &(*grads)[spec.name + ".b"];
        dw->resize(w.data.size(), 0.0);
        db->resize(static_cast<size_t>(spec.out_ch), 0.0);
    }

    for (int bi = 0; bi < in.n; ++bi) {
        const float* x = &in.data[static_cast<size_t>(bi) * in.per_sample()];
        float* dx = &din.data[static_cast<size_t>(bi) * in.per_sample()];
        for (int o = 0; o < spec.out_ch; ++o) {
            const double g = dout.at(bi, o, 0);
            if (g == 0.0) continue;
            if (db) (*db)[static_cast<size_t>(o)] += g;
            for (int i = 0; i < in_dim; ++i) {
                if (dw) (*dw)[static_cast<size_t>(i) * spec.out_ch + o] += g * x[i];
                dx[i] += static_cast<float>(g * static_cast<double>(w.at(i, o)));
            }
        }
    }
}

void dropout_forward(const LayerSpec& spec, RunMode mode, const Batch& in, Batch& out,
                     LayerCache* cache, uint64_t seed) {
    out = in;
    if (mode == RunMode::infer || spec.dropout_p <= 0.0f) {
        if (cache) cache->dropout_mask.assign(in.data.size(), 1);
        return;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep = 1.0 - spec.dropout_p;
    const float scale = static_cast<float>(1.0 / keep); // inverted scaling
    if (cache) cache->dropout_mask.assign(in.data.size(), 0);
    for (size_t i = 0; i < in.data.size(); ++i) {
        if (unit(rng) < keep) {
            out.data[i] = in.data[i] * scale;
            if (cache) cache->dropout_mask[i] = 1;
        } else {
            out.data[i] = 0.0f;
        }
    }
}

void dropout_backward(const LayerSpec& spec, const LayerCache& cache, const Batch& dout,
                      Batch& din) {
    din = dout;
    const float scale = static_cast<float>(1.0 / (1.0 - spec.dropout_p));
    for (size_t i = 0; i < din.data.size(); ++i) {
        din.data[i] = cache.dropout_mask[i] ? din.data[i] * scale : 0.0f;
    }
}

} // namespace

void softmax_rows(Batch& b) {
    const size_t dim = b.per_sample();
    for (int bi = 0; bi < b.n; ++bi) {
        float* row = &b.data[static_cast<size_t>(bi) * dim];
        float mx = row[0];
        for (size_t i = 1; i < dim; ++i) mx = std::max(mx, row[i]);
        double denom = 0.0;
        for (size_t i = 0; i < dim; ++i) denom += std::exp(static_cast<double>(row[i] - mx));
        for (size_t i = 0; i < dim; ++i) {
            row[i] = static_cast<float>(std::exp(static_cast<double>(row[i] - mx)) / denom);
        }
    }
}

void forward_layer(const LayerSpec& spec, const std::map<std::string, Tensor>& weights,
                   RunMode mode, const Batch& in, Batch& out, LayerCache* cache,
                   std::map<std::string, Tensor>* mutable_weights, uint64_t dropout_seed) {
    if (cache) cache->in = in;
    switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::grouped_conv:
    case LayerKind::pointwise_conv:
        conv_forward(spec, get(weights, spec.name + ".w"), get(weights, spec.name + ".b"), in, out);
        break;
    case LayerKind::maxpool:
        pool_forward(spec, in, out, cache);
        break;
    case LayerKind::batchnorm:
        bn_forward(spec, weights, mode, in, out, cache, mode == RunMode::train ? mutable_weights : nullptr);
        break;
    case LayerKind::dense:
        dense_forward(spec, get(weights, spec.name + ".w"), get(weights, spec.name + ".b"), in, out);
        break;
    case LayerKind::dropout:
        dropout_forward(spec, mode, in, out, cache, layer_seed(dropout_seed, spec.name));
        break;
    }
    if (cache) cache->out = out;
}

void backward_layer(const LayerSpec& spec, const std::map<std::string, Tensor>& weights,
                    const LayerCache& cache, const Batch& dout, Batch& din, GradMap* grads) {
    switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::grouped_conv:
    case LayerKind::pointwise_conv:
        conv_backward(spec, get(weights, spec.name + ".w"), cache, dout, din, grads);
        break;
    case LayerKind::maxpool:
        pool_backward(cache, dout, din);
        break;
    case LayerKind::batchnorm:
        bn_backward(spec, weights, cache, dout, din, grads);
        break;
    case LayerKind::dense:
        dense_backward(spec, get(weights, spec.name + ".w"), cache, dout, din, grads);
        break;
    case LayerKind::dropout:
        dropout_backward(spec, cache, dout, din);
        break;
    }
}

} // namespace ecgmon::nn
