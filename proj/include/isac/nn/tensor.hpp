// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac::nn {

/// Dense row-major real tensor with an optional adjoint buffer.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::optional<std::vector<double>> grad;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(element_count(shape), fill)
    {
    }

    static std::size_t element_count(const std::vector<std::size_t>& s)
    {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    [[nodiscard]] std::size_t size() const { return data.size(); }
    [[nodiscard]] std::size_t rank() const { return shape.size(); }

    /// Row-major linear offset of a multi-index.
    [[nodiscard]] std::size_t offset(std::initializer_list<std::size_t> idx) const
    {
        if (idx.size() != shape.size()) throw std::out_of_range("Tensor: index rank mismatch");
        std::size_t off = 0, d = 0;
        for (std::size_t i : idx) {
            if (i >= shape[d]) throw std::out_of_range("Tensor: index out of range");
            off = off * shape[d++] + i;
        }
        return off;
    }

    double& operator()(std::initializer_list<std::size_t> idx) { return data[offset(idx)]; }
    double operator()(std::initializer_list<std::size_t> idx) const { return data[offset(idx)]; }

    void zero_grad() { grad.emplace(data.size(), 0.0); }

    void check_invariants() const
    {
        if (data.size() != element_count(shape)) throw std::logic_error("Tensor: data length does not match shape");
        if (grad && grad->size() != data.size()) throw std::logic_error("Tensor: grad length does not match shape");
    }
};

} // namespace isac::nn
