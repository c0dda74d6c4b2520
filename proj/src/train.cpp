#include "ecgmon/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include "ecgmon/errors.hpp"
#include "nn_kernels.hpp"

namespace ecgmon {

namespace {

bool is_trainable(const std::string& name) {
    return name.ends_with(".w") || name.ends_with(".b") || name.ends_with(".gamma") ||
           name.ends_with(".beta");
}

bool belongs_to(const std::string& tensor_name, const std::string& layer_name) {
    return tensor_name.rfind(layer_name + ".", 0) == 0;
}

nn::Batch batch_inputs(const std::vector<const TrainBeat*>& batch, int len, int ch) {
    nn::Batch x = nn::Batch::make(static_cast<int>(batch.size()), len, ch);
    for (size_t b = 0; b < batch.size(); ++b) {
        if (batch[b]->x.len() != len) throw ParameterError("train: beat window length mismatch");
        std::memcpy(&x.data[b * x.per_sample()], batch[b]->x.data.data(),
                    x.per_sample() * sizeof(float));
    }
    return x;
}

// Forward the requested head over a batch, optionally with caches and
// running-stat updates, and return the class probabilities.
struct PipelineState {
    std::vector<nn::LayerCache> caches;
    nn::Batch probs;
};

void run_pipeline(const ModelGraph& m, const nn::Batch& x, LossHead head, RunMode trunk_mode,
                  std::map<std::string, Tensor>* mutable_weights, uint64_t dropout_seed,
                  PipelineState* st) {
    nn::Batch cur = x;
    nn::Batch next;
    const size_t cut = static_cast<size_t>(m.cut_index);
    if (st) st->caches.resize(m.layers.size());

    for (size_t i = 0; i < cut; ++i) {
        nn::forward_layer(m.layers[i], m.weights, trunk_mode, cur, next,
                          st ? &st->caches[i] : nullptr, mutable_weights, dropout_seed);
        cur = std::move(next);
    }
    if (head == LossHead::head1) {
        nn::forward_layer(m.layers[cut], m.weights, trunk_mode, cur, next,
                          st ? &st->caches[cut] : nullptr, nullptr, dropout_seed);
        if (st) st->probs = std::move(next);
        return;
    }
    for (size_t i = cut + 1; i < m.layers.size(); ++i) {
        nn::forward_layer(m.layers[i], m.weights, trunk_mode, cur, next,
                          st ? &st->caches[i] : nullptr, mutable_weights, dropout_seed);
        cur = std::move(next);
    }
    if (st) st->probs = std::move(cur);
}

double loss_and_backward(const ModelGraph& m, const std::vector<const TrainBeat*>& batch,
                         LossHead head, RunMode trunk_mode,
                         std::map<std::string, Tensor>* mutable_weights,
                         std::map<std::string, Tensor>* grads, uint64_t dropout_seed,
                         const std::vector<double>& class_weights) {
    if (batch.empty()) throw ParameterError("train: empty batch");
    const nn::Batch x = batch_inputs(batch, m.input_len, m.input_ch);

    PipelineState st;
    run_pipeline(m, x, head, trunk_mode, mutable_weights, dropout_seed, &st);

    const int num_classes = st.probs.len;
    const int bsize = static_cast<int>(batch.size());
    double loss = 0.0;
    nn::Batch dlogits = nn::Batch::make(bsize, num_classes, 1);
    for (int b = 0; b < bsize; ++b) {
        const int y = batch[static_cast<size_t>(b)]->label;
        if (y < 0 || y >= num_classes) throw ParameterError("train: label out of range");
        const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<size_t>(y)];
        const double p = std::max(1e-12, static_cast<double>(st.probs.at(b, y, 0)));
        loss += -w * std::log(p);
        for (int o = 0; o < num_classes; ++o) {
            const double soft = st.probs.at(b, o, 0);
            dlogits.at(b, o, 0) =
                static_cast<float>(w * (soft - (o == y ? 1.0 : 0.0)) / bsize);
        }
    }
    loss /= bsize;
    if (!grads) return loss;

    nn::GradMap acc;
    const size_t cut = static_cast<size_t>(m.cut_index);
    nn::Batch dcur = std::move(dlogits);
    nn::Batch dnext;
    if (head == LossHead::head1) {
        // Frozen trunk: only the head's own parameters receive gradients.
        nn::backward_layer(m.layers[cut], m.weights, st.caches[cut], dcur, dnext, &acc);
    } else {
        for (size_t i = m.layers.size(); i-- > cut + 1;) {
            nn::backward_layer(m.layers[i], m.weights, st.caches[i], dcur, dnext, &acc);
            dcur = std::move(dnext);
        }
        for (size_t i = cut; i-- > 0;) {
            nn::backward_layer(m.layers[i], m.weights, st.caches[i], dcur, dnext, &acc);
            dcur = std::move(dnext);
        }
    }

    grads->clear();
    for (const auto& [name, tensor] : m.weights) {
        if (!is_trainable(name)) continue;
        Tensor g = tensor;
        std::fill(g.data.begin(), g.data.end(), 0.0f);
        auto it = acc.find(name);
        if (it != acc.end()) {
            if (it->second.size() != g.data.size()) {
                throw ParameterError("train: gradient shape mismatch for " + name);
            }
            for (size_t i = 0; i < g.data.size(); ++i) {
                g.data[i] = static_cast<float>(it->second[i]);
            }
        }
        (*grads)[name] = std::move(g);
    }
    return loss;
}

int argmax_probs(const nn::Batch& probs, int row) {
    int best = 0;
    for (int o = 1; o < probs.len; ++o) {
        if (probs.at(row, o, 0) > probs.at(row, best, 0)) best = o;
    }
    return best;
}

double validation_accuracy(const ModelGraph& m, const std::vector<TrainBeat>& val, LossHead head) {
    if (val.empty()) throw ParameterError("train: empty validation set");
    long correct = 0;
    // Evaluate in manageable slices to bound memory.
    const size_t chunk = 256;
    for (size_t at = 0; at < val.size(); at += chunk) {
        std::vector<const TrainBeat*> batch;
        for (size_t i = at; i < std::min(val.size(), at + chunk); ++i) batch.push_back(&val[i]);
        const nn::Batch x = batch_inputs(batch, m.input_len, m.input_ch);
        PipelineState st;
        run_pipeline(m, x, head, RunMode::infer, nullptr, 0, &st);
        for (int b = 0; b < static_cast<int>(batch.size()); ++b) {
            if (argmax_probs(st.probs, b) == batch[static_cast<size_t>(b)]->label) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(val.size());
}

TrainResult run_training(const ModelGraph& init, const std::vector<TrainBeat>& train_set,
                         const std::vector<TrainBeat>& val_set, const TrainConfig& cfg,
                         LossHead head) {
    if (train_set.empty() || val_set.empty()) {
        throw ParameterError("train: datasets must be non-empty");
    }
    if (cfg.beta1 <= 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 <= 0.0 || cfg.beta2 >= 1.0) {
        throw ParameterError("train: beta coefficients must lie inside (0, 1)");
    }
    if (cfg.lr <= 0.0) throw ParameterError("train: learning rate must be positive");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.plateau_epochs < 1) {
        throw ParameterError("train: epoch and batch counts must be positive");
    }
    ModelGraph model = init;
    if (head == LossHead::head2) {
        for (auto& l : model.layers) {
            if (l.kind == LayerKind::dropout) l.dropout_p = static_cast<float>(cfg.dropout_p);
        }
    }

    const std::string head_layer = model.layers[static_cast<size_t>(model.cut_index)].name;
    auto updatable = [&](const std::string& name) {
        if (!is_trainable(name)) return false;
        const bool is_head1 = belongs_to(name, head_layer);
        return head == LossHead::head1 ? is_head1 : !is_head1;
    };

    const int num_classes = head == LossHead::head1
                                ? model.layers[static_cast<size_t>(model.cut_index)].out_ch
                                : model.layers.back().out_ch;
    std::vector<double> class_weights;
    if (cfg.class_weighting) {
        class_weights = inverse_frequency_weights(train_set, num_classes);
    } else {
        std::vector<long> counts(static_cast<size_t>(num_classes), 0);
        for (const auto& b : train_set) {
            if (b.label >= 0 && b.label < num_classes) ++counts[static_cast<size_t>(b.label)];
        }
        for (int c = 0; c < num_classes; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) {
                std::fprintf(stderr, "train: warning: class %d has no training samples\n", c);
            }
        }
    }

    AdamState opt(cfg.beta1, cfg.beta2, cfg.adam_eps);
    std::mt19937_64 rng(cfg.seed);
    double lr = cfg.lr;

    TrainResult result;
    result.model = model;
    result.best_val_acc = -1.0;
    int epochs_since_best = 0;

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    const RunMode trunk_mode = head == LossHead::head1 ? RunMode::infer : RunMode::train;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        long batches = 0;
        for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch_size)) {
            std::vector<const TrainBeat*> batch;
            for (size_t i = at; i < std::min(order.size(), at + static_cast<size_t>(cfg.batch_size)); ++i) {
                batch.push_back(&train_set[order[i]]);
            }
            std::map<std::string, Tensor> grads;
            epoch_loss += loss_and_backward(model, batch, head, trunk_mode, &model.weights,
                                            &grads, rng(), class_weights);
            ++batches;
            for (auto& [name, tensor] : model.weights) {
                if (!updatable(name)) continue;
                opt.step(name, tensor, grads.at(name), lr);
            }
            opt.advance();
        }

        const double val_acc = validation_accuracy(model, val_set, head);
        result.log.push_back({epoch, epoch_loss / std::max(1L, batches), val_acc, lr});
        if (cfg.verbose) {
            std::fprintf(stderr, "epoch %3d  loss %.4f  val_acc %.4f  lr %g\n", epoch,
                         epoch_loss / std::max(1L, batches), val_acc, lr);
        }

        if (val_acc > result.best_val_acc) {
            result.best_val_acc = val_acc;
            result.best_epoch = epoch;
            result.model = model;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.early_stop_epochs) break;
            if (epochs_since_best % cfg.plateau_epochs == 0) lr /= cfg.lr_drop_factor;
        }
    }
    return result;
}

} // namespace

void AdamState::step(const std::string& name, Tensor& param, const Tensor& grad, double lr) {
    if (param.data.size() != grad.data.size()) {
        throw ParameterError("adam: parameter/gradient size mismatch for " + name);
    }
    auto& m = m_[name];
    auto& v = v_[name];
    m.resize(param.data.size(), 0.0);
    v.resize(param.data.size(), 0.0);

    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < param.data.size(); ++i) {
        const double g = grad.data[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param.data[i] =
            static_cast<float>(param.data[i] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
}

double batch_loss_and_grads(const ModelGraph& m, const std::vector<const TrainBeat*>& batch,
                            LossHead head, std::map<std::string, Tensor>* grads,
                            uint64_t dropout_seed, const std::vector<double>& class_weights) {
    const RunMode trunk_mode = head == LossHead::head1 ? RunMode::infer : RunMode::train;
    return loss_and_backward(m, batch, head, trunk_mode, nullptr, grads, dropout_seed,
                             class_weights);
}

TrainResult train(const ModelGraph& init, const std::vector<TrainBeat>& train_set,
                  const std::vector<TrainBeat>& val_set, const TrainConfig& cfg) {
    return run_training(init, train_set, val_set, cfg, LossHead::head2);
}

TrainResult train_edge_head(const ModelGraph& trained, const std::vector<TrainBeat>& train_set,
                            const std::vector<TrainBeat>& val_set, const TrainConfig& cfg) {
    return run_training(trained, train_set, val_set, cfg, LossHead::head1);
}

std::vector<double> inverse_frequency_weights(const std::vector<TrainBeat>& set, int num_classes) {
    std::vector<long> counts(static_cast<size_t>(num_classes), 0);
    for (const auto& b : set) {
        if (b.label >= 0 && b.label < num_classes) ++counts[static_cast<size_t>(b.label)];
    }
    std::vector<double> weights(static_cast<size_t>(num_classes), 0.0);
    for (int c = 0; c < num_classes; ++c) {
        if (counts[static_cast<size_t>(c)] == 0) {
            std::fprintf(stderr, "train: warning: class %d has no training samples\n", c);
            continue;
        }
        weights[static_cast<size_t>(c)] =
            static_cast<double>(set.size()) /
            (static_cast<double>(num_classes) * static_cast<double>(counts[static_cast<size_t>(c)]));
    }
    return weights;
}

} // namespace ecgmon
