#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vimguard/error.hpp"

namespace vimguard::nnet {

/// Dense tensor with a flat value array and an optional same-shape gradient.
/// Training runs at 32-bit; gradient checking instantiates the whole stack at
/// 64-bit.
template <typename S>
struct Tensor {
    std::vector<int> shape;
    std::vector<S> data;
    std::vector<S> grad; // empty until populated by backward()

    Tensor() = default;
    Tensor(std::vector<int> sh, std::vector<S> values) : shape(std::move(sh)), data(std::move(values)) {
        require(static_cast<int64_t>(data.size()) == numel_of(shape), Err::ShapeMismatch,
                "tensor data does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& sh) {
        int64_t n = 1;
        for (int d : sh) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<int> sh) {
        Tensor t;
        t.shape = std::move(sh);
        t.data.assign(static_cast<size_t>(numel_of(t.shape)), S(0));
        return t;
    }

    static Tensor full(std::vector<int> sh, S v) {
        Tensor t = zeros(std::move(sh));
        for (S& x : t.data) x = v;
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rows() const { return shape.size() == 2 ? shape[0] : (shape.empty() ? 0 : shape[0]); }
    int cols() const { return shape.size() == 2 ? shape[1] : 1; }

    S& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    S at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }
    void zero_grad() { grad.assign(data.size(), S(0)); }

    bool finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

} // namespace vimguard::nnet
