#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lob/errors.hpp"

namespace lob::nn {

/// Dense row-major tensor of doubles. The optional grad buffer is
/// allocated when the tensor is tracked (parameters, finite-difference
/// probes); activations flow untracked.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> shp)
        : shape(std::move(shp)), data(numel_of(shape), 0.0) {}
    Tensor(std::vector<size_t> shp, std::vector<double> values)
        : shape(std::move(shp)), data(std::move(values)) {
        if (data.size() != numel_of(shape)) throw ShapeMismatch("tensor data/shape mismatch");
    }

    static size_t numel_of(const std::vector<size_t>& s) {
        size_t n = 1;
        for (size_t d : s) n *= d;
        return n;
    }

    size_t numel() const { return data.size(); }
    size_t dim(size_t i) const { return shape[i]; }
    size_t ndim() const { return shape.size(); }

    void track() {
        requires_grad = true;
        grad.assign(data.size(), 0.0);
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + "]";
    }
};

void check_finite(std::span<const double> values, const std::string& what);
void check_finite_grad(std::span<const double> values, const std::string& what);

} // namespace lob::nn
