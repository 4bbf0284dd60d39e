// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/hcl_net.hpp"

namespace isac::nn {

/// Rescales W onto the power sphere when it exceeds the budget.
inline void project_power(BeamformingMatrix& W, double power_budget)
{
    const double p = W.squaredNorm();
    if (p > power_budget) W *= std::sqrt(power_budget / p);
}

/// Online beamforming: one forward pass, optional hard power projection.
inline BeamformingMatrix predict(const HistoryWindow& window, const HclNet& net, const SimConfig& cfg, bool project)
{
    if (net.shape().n_vehicles != cfg.n_vehicles || net.shape().n_antennas != cfg.n_tx ||
        net.shape().history_len != cfg.history_len)
        throw std::invalid_argument("predict: network shape does not match the configuration");
    BeamformingMatrix W = net.forward(window);
    if (project) project_power(W, cfg.power_budget);
    return W;
}

/// Input normalization: 1 / median of the per-vehicle estimated channel
/// norms over every history slot of the dataset.
inline double input_scale(const std::vector<TrainingExample>& data)
{
    std::vector<double> norms;
    for (const auto& ex : data)
        for (const auto& H : ex.history.slots)
            for (Eigen::Index k = 0; k < H.cols(); ++k) norms.push_back(H.col(k).norm());
    if (norms.empty()) throw std::invalid_argument("input_scale: no channels in dataset");
    auto mid = norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2);
    std::nth_element(norms.begin(), mid, norms.end());
    if (!(*mid > 0.0)) throw std::invalid_argument("input_scale: median channel norm is zero");
    return 1.0 / *mid;
}

} // namespace isac::nn
