#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "trimip/math.hpp"

namespace trimip {

// Dense row-major tensor of doubles. Shapes are small (at most 3-d here), so
// no strides or views; everything owns its storage.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<real> v;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
        v.assign(count(shape), real(0));
    }

    static size_t count(const std::vector<size_t>& s) {
        size_t n = 1;
        for (size_t d : s) n *= d;
        return n;
    }

    size_t size() const { return v.size(); }
    real* data() { return v.data(); }
    const real* data() const { return v.data(); }
    real& operator[](size_t i) { return v[i]; }
    real operator[](size_t i) const { return v[i]; }

    // 2-d indexing [row][col]
    real& at(size_t i, size_t j) { return v[i * shape[1] + j]; }
    real at(size_t i, size_t j) const { return v[i * shape[1] + j]; }

    // 3-d indexing [row][col][channel]
    real& at(size_t i, size_t j, size_t k) { return v[(i * shape[1] + j) * shape[2] + k]; }
    real at(size_t i, size_t j, size_t k) const { return v[(i * shape[1] + j) * shape[2] + k]; }

    void zero() { std::fill(v.begin(), v.end(), real(0)); }

    void add(const Tensor& o) {
        if (o.v.size() != v.size()) throw std::invalid_argument("tensor add: size mismatch");
        for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace trimip
