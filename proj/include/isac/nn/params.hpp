// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/rng.hpp"

namespace isac::nn {

/// One named weight block inside the flat parameter vector. Blocks are stored
/// column-major (Eigen's default), so element (r, c) of block b lives at
/// b.offset + c * b.rows + r.
struct ParamBlock {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;

    [[nodiscard]] Eigen::Index size() const { return rows * cols; }
};

/// Ordered list of blocks covering a flat vector exactly.
class ParamLayout {
public:
    void add(std::string name, Eigen::Index rows, Eigen::Index cols)
    {
        blocks_.push_back({std::move(name), rows, cols, total_});
        total_ += rows * cols;
    }

    [[nodiscard]] const ParamBlock& block(const std::string& name) const
    {
        for (const auto& b : blocks_)
            if (b.name == name) return b;
        throw std::out_of_range("ParamLayout: no block named '" + name + "'");
    }

    [[nodiscard]] const std::vector<ParamBlock>& blocks() const { return blocks_; }
    [[nodiscard]] Eigen::Index total() const { return total_; }

private:
    std::vector<ParamBlock> blocks_;
    Eigen::Index total_ = 0;
};

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

/// Trainable weights as one flat vector plus named matrix views into it.
class NetworkParams {
public:
    NetworkParams() = default;
    explicit NetworkParams(ParamLayout layout) : layout_(std::move(layout)), flat_(Eigen::VectorXd::Zero(layout_.total())) {}

    [[nodiscard]] const ParamLayout& layout() const { return layout_; }
    [[nodiscard]] Eigen::VectorXd& flat_view() { return flat_; }
    [[nodiscard]] const Eigen::VectorXd& flat_view() const { return flat_; }
    [[nodiscard]] Eigen::Index size() const { return flat_.size(); }

    MatMap mat(const std::string& name)
    {
        const auto& b = layout_.block(name);
        return {flat_.data() + b.offset, b.rows, b.cols};
    }
    [[nodiscard]] ConstMatMap mat(const std::string& name) const
    {
        const auto& b = layout_.block(name);
        return {flat_.data() + b.offset, b.rows, b.cols};
    }

    /// View of the same block inside another vector with this layout (e.g. a gradient).
    MatMap view(Eigen::VectorXd& other, const std::string& name) const
    {
        const auto& b = layout_.block(name);
        return {other.data() + b.offset, b.rows, b.cols};
    }

    /// Glorot-uniform fill of one block: U(-s, s) * sqrt(6 / (fan_in + fan_out)).
    void glorot(const std::string& name, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng, double scale = 1.0)
    {
        const double lim = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        auto m = mat(name);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-lim, lim);
    }

private:
    ParamLayout layout_;
    Eigen::VectorXd flat_;
};

} // namespace isac::nn
