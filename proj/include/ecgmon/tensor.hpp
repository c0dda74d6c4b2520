#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ecgmon {

// Dense rank-<=3 array of float32, row-major. Activations use rank 2 as
// (length, channels); dense weights are (in, out); convolution weights are
// (kernel, in_per_group, out_channels).
struct Tensor {
    std::array<int, 3> shape{0, 1, 1};
    int rank = 1;
    std::vector<float> data;

    Tensor() = default;

    static Tensor make1(int n) {
        Tensor t;
        t.shape = {n, 1, 1};
        t.rank = 1;
        t.data.assign(static_cast<size_t>(n), 0.0f);
        return t;
    }
    static Tensor make2(int len, int ch) {
        Tensor t;
        t.shape = {len, ch, 1};
        t.rank = 2;
        t.data.assign(static_cast<size_t>(len) * ch, 0.0f);
        return t;
    }
    static Tensor make3(int d0, int d1, int d2) {
        Tensor t;
        t.shape = {d0, d1, d2};
        t.rank = 3;
        t.data.assign(static_cast<size_t>(d0) * d1 * d2, 0.0f);
        return t;
    }

    int len() const { return shape[0]; }
    int ch() const { return shape[1]; }
    long size() const { return static_cast<long>(data.size()); }

    float& at(int p, int c) { return data[static_cast<size_t>(p) * shape[1] + c]; }
    float at(int p, int c) const { return data[static_cast<size_t>(p) * shape[1] + c]; }

    float& at3(int i, int j, int k) {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    float at3(int i, int j, int k) const {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& o) const { return rank == o.rank && shape == o.shape; }

    bool operator==(const Tensor& o) const {
        return rank == o.rank && shape == o.shape && data == o.data;
    }
};

} // namespace ecgmon
