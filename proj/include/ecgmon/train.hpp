#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ecgmon/model.hpp"

namespace ecgmon {

struct TrainConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr = 0.001;
    double lr_drop_factor = 10.0;
    int plateau_epochs = 15;    // epochs without val improvement before lr drop
    int early_stop_epochs = 100;
    int max_epochs = 500;
    double dropout_p = 0.2;
    int batch_size = 64;
    uint32_t seed = 0;
    bool class_weighting = false; // inverse-frequency weights on the loss
    double adam_eps = 1e-8;
    bool verbose = false;
};

struct TrainBeat {
    Tensor x;      // (105, 1)
    int label = 0; // head2: 0..3 (N,S,V,F); head1: 0 normal / 1 abnormal
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ModelGraph model; // best validation-accuracy checkpoint
    double best_val_acc = 0.0;
    int best_epoch = 0;
    std::vector<EpochLog> log;
};

// Per-tensor Adam moments with bias correction.
class AdamState {
public:
    AdamState(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // In-place update of param from grad at learning rate lr.
    void step(const std::string& name, Tensor& param, const Tensor& grad, double lr);
    void advance() { ++t_; }
    long steps() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 1;
    std::map<std::string, std::vector<double>> m_, v_;
};

enum class LossHead { head1, head2 };

// Mean cross-entropy over the batch for the selected head, with analytic
// gradients for every trainable tensor that head depends on. The returned
// map is keyed like the weight store; grads is optional.
double batch_loss_and_grads(const ModelGraph& m, const std::vector<const TrainBeat*>& batch,
                            LossHead head, std::map<std::string, Tensor>* grads,
                            uint64_t dropout_seed, const std::vector<double>& class_weights = {});

// Trains every layer except head1 against the 4-class head with Adam,
// the plateau learning-rate schedule and best-checkpoint selection.
TrainResult train(const ModelGraph& init, const std::vector<TrainBeat>& train_set,
                  const std::vector<TrainBeat>& val_set, const TrainConfig& cfg);

// Binary head training on a frozen trunk: only head1's dense weights and
// biases receive gradient updates.
TrainResult train_edge_head(const ModelGraph& trained, const std::vector<TrainBeat>& train_set,
                            const std::vector<TrainBeat>& val_set, const TrainConfig& cfg);

std::vector<double> inverse_frequency_weights(const std::vector<TrainBeat>& set, int num_classes);

} // namespace ecgmon
