#pragma once

// Finite-difference gradient verification shared by the unit and acceptance
// suites.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ecgmon/train.hpp"

namespace gradcheck {

// A small graph exercising every layer kind, same two-head topology as the
// production model.
inline ecgmon::ModelGraph micro_model(uint32_t seed) {
    using namespace ecgmon;
    std::vector<LayerSpec> layers(10);
    layers[0] = {.kind = LayerKind::conv1d, .name = "c1", .kernel = 5, .stride = 2,
                 .out_ch = 4, .relu = true};
    layers[1] = {.kind = LayerKind::maxpool, .name = "p1", .kernel = 2, .stride = 2};
    layers[2] = {.kind = LayerKind::batchnorm, .name = "b1"};
    layers[3] = {.kind = LayerKind::dense, .name = "fc1", .out_ch = 2, .softmax = true};
    layers[4] = {.kind = LayerKind::grouped_conv, .name = "gc", .kernel = 3, .stride = 1,
                 .out_ch = 8, .groups = 4};
    layers[5] = {.kind = LayerKind::pointwise_conv, .name = "pc", .kernel = 1, .stride = 1,
                 .out_ch = 3, .relu = true};
    layers[6] = {.kind = LayerKind::maxpool, .name = "p2", .kernel = 2, .stride = 2};
    layers[7] = {.kind = LayerKind::batchnorm, .name = "b2"};
    layers[8] = {.kind = LayerKind::dropout, .name = "dp", .dropout_p = 0.3f};
    layers[9] = {.kind = LayerKind::dense, .name = "fc2", .out_ch = 3, .softmax = true};
    return assemble_model(std::move(layers), 12, 1, 3, seed);
}

inline std::vector<ecgmon::TrainBeat> micro_batch(uint32_t seed, int n, int num_classes,
                                                  int len) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::uniform_int_distribution<int> label(0, num_classes - 1);
    std::vector<ecgmon::TrainBeat> batch(static_cast<size_t>(n));
    for (auto& b : batch) {
        b.x = ecgmon::Tensor::make2(len, 1);
        for (auto& v : b.x.data) v = dist(rng);
        b.label = label(rng);
    }
    return batch;
}

struct Stats {
    long checked = 0;
    long mismatched = 0;
    double worst_rel = 0.0;
    std::string worst_name;
};

// Central differences against the analytic gradients of one head. The
// denominator floor guards near-zero gradients. A component that misses at
// h=1e-3 is retried at h=3e-4: ReLU and max-pool kinks make the wider
// stencil locally invalid when a perturbation crosses an activation tie
// (below ~1e-4 the float32 forward noise dominates instead).
inline Stats run_gradient_check(ecgmon::ModelGraph m,
                                const std::vector<ecgmon::TrainBeat>& batch,
                                ecgmon::LossHead head, uint64_t dropout_seed,
                                const std::string& only_layer = "") {
    using namespace ecgmon;
    std::vector<const TrainBeat*> ptrs;
    for (const auto& b : batch) ptrs.push_back(&b);

    std::map<std::string, Tensor> grads;
    batch_loss_and_grads(m, ptrs, head, &grads, dropout_seed);

    auto fd_at = [&](Tensor& tensor, size_t i, double h) {
        const float keep = tensor.data[i];
        tensor.data[i] = static_cast<float>(keep + h);
        const double up = batch_loss_and_grads(m, ptrs, head, nullptr, dropout_seed);
        tensor.data[i] = static_cast<float>(keep - h);
        const double down = batch_loss_and_grads(m, ptrs, head, nullptr, dropout_seed);
        tensor.data[i] = keep;
        return (up - down) / (2.0 * h);
    };
    auto rel_err = [](double a, double fd, double floor) {
        return std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
    };

    Stats stats;
    for (auto& [name, tensor] : m.weights) {
        if (!(name.ends_with(".w") || name.ends_with(".b") || name.ends_with(".gamma") ||
              name.ends_with(".beta"))) {
            continue;
        }
        if (!only_layer.empty() && name.rfind(only_layer + ".", 0) != 0) continue;
        const Tensor& g = grads.at(name);
        for (size_t i = 0; i < tensor.data.size(); ++i) {
            const double a = g.data[i];
            double fd = fd_at(tensor, i, 1e-3);
            double rel = rel_err(a, fd, 0.1);
            if (rel >= 1e-3) {
                fd = fd_at(tensor, i, 3e-4);
                rel = rel_err(a, fd, 0.25);
            }
            ++stats.checked;
            if (rel >= 1e-3) {
                ++stats.mismatched;
            }
            if (rel > stats.worst_rel) {
                stats.worst_rel = rel;
                stats.worst_name = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return stats;
}

} // namespace gradcheck
