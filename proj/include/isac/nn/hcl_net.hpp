// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/params.hpp"
#include "isac/nn/tensor.hpp"
#include "isac/rng.hpp"

namespace isac::nn {

/// Layer sizes of the historical-channel convolutional LSTM.
///
/// Each vehicle's length-M channel (two real planes) is folded into a
/// 4 x (M/4) x 2 map, convolved with `filters` 3x3x2 kernels ("same" zero
/// padding, ReLU), max-pooled 2x2/stride 2 and flattened. The K per-vehicle
/// features of one slot are concatenated and fed to an LSTM, oldest slot
/// first; the last hidden state goes through a linear layer to 2KM outputs.
struct HclShape {
    int n_vehicles = 3;
    int n_antennas = 32;
    int history_len = 5;
    int filters = 4;
    int hidden = 64;

    static constexpr int kGridRows = 4;
    static constexpr int kKernel = 3;
    static constexpr int kInChannels = 2;

    [[nodiscard]] int grid_cols() const { return n_antennas / kGridRows; }
    [[nodiscard]] int cells() const { return kGridRows * grid_cols(); }
    [[nodiscard]] int pooled_rows() const { return kGridRows / 2; }
    [[nodiscard]] int pooled_cols() const { return grid_cols() / 2; }
    [[nodiscard]] int taps() const { return kKernel * kKernel * kInChannels; }
    [[nodiscard]] int flatten() const { return filters * pooled_rows() * pooled_cols(); }
    [[nodiscard]] int lstm_input() const { return n_vehicles * flatten(); }
    [[nodiscard]] int gates() const { return 4 * hidden; }
    [[nodiscard]] int output() const { return 2 * n_vehicles * n_antennas; }

    void validate() const
    {
        if (n_vehicles < 1 || history_len < 1 || filters < 1 || hidden < 1)
            throw std::invalid_argument("HclShape: sizes must be positive");
        if (n_antennas < 8 || n_antennas % 8 != 0)
            throw std::invalid_argument("HclShape: antenna count must be a positive multiple of 8");
    }

    [[nodiscard]] ParamLayout layout() const
    {
        ParamLayout l;
        l.add("conv_w", filters, taps());
        l.add("conv_b", filters, 1);
        l.add("lstm_wx", gates(), lstm_input());
        l.add("lstm_wh", gates(), hidden);
        l.add("lstm_b", gates(), 1);
        l.add("fc_w", output(), hidden);
        l.add("fc_b", output(), 1);
        return l;
    }

    bool operator==(const HclShape&) const = default;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Tap index inside a conv kernel row: ((dr * 3) + dc) * 2 + channel.
inline int tap_index(int dr, int dc, int ch) { return (dr * HclShape::kKernel + dc) * HclShape::kInChannels + ch; }

} // namespace detail

/// Per-vehicle feature extractor on a single M x 2 slice. Straight loops;
/// serves as the reference for the batched path.
inline Tensor cnn_forward(const Tensor& slice, const NetworkParams& params, const HclShape& shape)
{
    const int M = shape.n_antennas;
    if (slice.rank() != 2 || slice.shape[0] != static_cast<std::size_t>(M) || slice.shape[1] != 2)
        throw std::invalid_argument("cnn_forward: expected an M x 2 slice with M = " + std::to_string(M));
    const int R = HclShape::kGridRows, C = shape.grid_cols(), F = shape.filters;
    auto w = params.mat("conv_w");
    auto b = params.mat("conv_b");

    std::vector<double> act(static_cast<std::size_t>(R * C * F));
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            for (int f = 0; f < F; ++f) {
                double z = b(f, 0);
                for (int dr = 0; dr < 3; ++dr)
                    for (int dc = 0; dc < 3; ++dc) {
                        int rr = r + dr - 1, cc = c + dc - 1;
                        if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
                        for (int ch = 0; ch < 2; ++ch)
                            z += w(f, detail::tap_index(dr, dc, ch)) *
                                 slice.data[static_cast<std::size_t>((rr * C + cc) * 2 + ch)];
                    }
                act[static_cast<std::size_t>((r * C + c) * F + f)] = std::max(0.0, z);
            }

    const int PR = shape.pooled_rows(), PC = shape.pooled_cols();
    Tensor out({static_cast<std::size_t>(shape.flatten())});
    for (int pr = 0; pr < PR; ++pr)
        for (int pc = 0; pc < PC; ++pc)
            for (int f = 0; f < F; ++f) {
                double m = -std::numeric_limits<double>::infinity();
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        m = std::max(m, act[static_cast<std::size_t>(((2 * pr + i) * C + (2 * pc + j)) * F + f)]);
                out.data[static_cast<std::size_t>((pr * PC + pc) * F + f)] = m;
            }
    return out;
}

/// One LSTM step. Gate rows are stacked [input; forget; output; cell].
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                                             const Eigen::VectorXd& c_prev,
                                                             const NetworkParams& params, const HclShape& shape)
{
    const int H = shape.hidden;
    if (x.size() != shape.lstm_input() || h_prev.size() != H || c_prev.size() != H)
        throw std::invalid_argument("lstm_step: width mismatch");
    auto wx = params.mat("lstm_wx");
    auto wh = params.mat("lstm_wh");
    auto b = params.mat("lstm_b");
    Eigen::VectorXd h(H), c(H);
    for (int u = 0; u < H; ++u) {
        double z[4];
        for (int g = 0; g < 4; ++g) {
            const int row = g * H + u;
            double s = b(row, 0);
            for (Eigen::Index j = 0; j < x.size(); ++j) s += wx(row, j) * x[j];
            for (int j = 0; j < H; ++j) s += wh(row, j) * h_prev[j];
            z[g] = s;
        }
        double ig = detail::sigmoid(z[0]), fg = detail::sigmoid(z[1]), og = detail::sigmoid(z[2]);
        double cand = std::tanh(z[3]);
        c[u] = fg * c_prev[u] + ig * cand;
        h[u] = og * std::tanh(c[u]);
    }
    return {h, c};
}

/// Historical-channel convolutional LSTM predictor.
class HclNet {
public:
    struct Cache {
        int batch = 0;
        Eigen::MatrixXd patches;           // taps x (slices * cells)
        Eigen::MatrixXd act;               // filters x (slices * cells), post-ReLU
        std::vector<Eigen::Index> pool_arg; // argmax column per pooled entry, in x_t order
        std::vector<Eigen::MatrixXd> x;    // per step: lstm_input x B
        std::vector<Eigen::MatrixXd> h, c; // per step + initial: hidden x B
        std::vector<Eigen::MatrixXd> gate; // per step: activated gates, 4H x B
    };

    HclNet() = default;
    HclNet(HclShape shape, double kappa) : shape_(shape), params_(shape.layout()), kappa_(kappa) { shape_.validate(); }

    /// Glorot-uniform weights, zero biases except forget-gate biases at +1.
    /// The output layer's range is scaled by sqrt(P / K).
    static HclNet create(const HclShape& shape, double kappa, double power_budget, std::uint32_t seed)
    {
        HclNet net(shape, kappa);
        Rng rng(seed);
        auto& p = net.params_;
        const int k2 = HclShape::kKernel * HclShape::kKernel;
        p.glorot("conv_w", k2 * HclShape::kInChannels, k2 * shape.filters, rng);
        p.glorot("lstm_wx", shape.lstm_input(), shape.gates(), rng);
        p.glorot("lstm_wh", shape.hidden, shape.gates(), rng);
        p.mat("lstm_b").block(shape.hidden, 0, shape.hidden, 1).setOnes();
        p.glorot("fc_w", shape.hidden, shape.output(), rng, std::sqrt(power_budget / shape.n_vehicles));
        return net;
    }

    [[nodiscard]] const HclShape& shape() const { return shape_; }
    [[nodiscard]] NetworkParams& params() { return params_; }
    [[nodiscard]] const NetworkParams& params() const { return params_; }
    [[nodiscard]] double kappa() const { return kappa_; }
    void set_kappa(double k) { kappa_ = k; }

    /// Reference forward pass built from cnn_forward and lstm_step.
    [[nodiscard]] Eigen::VectorXd forward_reference(const HistoryWindow& window) const
    {
        Tensor in = map_input(window, shape_.history_len, kappa_);
        const int K = shape_.n_vehicles, M = shape_.n_antennas, F = shape_.flatten();
        Eigen::VectorXd h = Eigen::VectorXd::Zero(shape_.hidden), c = h;
        for (int t = 0; t < shape_.history_len; ++t) {
            Eigen::VectorXd x(shape_.lstm_input());
            for (int k = 0; k < K; ++k) {
                Tensor slice({static_cast<std::size_t>(M), 2});
                auto base = in.data.begin() + static_cast<std::ptrdiff_t>((t * K + k) * M * 2);
                std::copy(base, base + 2 * M, slice.data.begin());
                Tensor feat = cnn_forward(slice, params_, shape_);
                for (int i = 0; i < F; ++i) x[k * F + i] = feat.data[static_cast<std::size_t>(i)];
            }
            std::tie(h, c) = lstm_step(x, h, c, params_, shape_);
        }
        return params_.mat("fc_w") * h + params_.mat("fc_b");
    }

    /// Raw outputs for a batch of windows, one column (length 2KM) per window.
    Eigen::MatrixXd forward_batch(std::span<const HistoryWindow* const> windows, Cache* cache = nullptr) const
    {
        Cache local;
        Cache& cc = cache ? *cache : local;
        const int B = static_cast<int>(windows.size());
        const int K = shape_.n_vehicles, M = shape_.n_antennas, T = shape_.history_len;
        const int R = HclShape::kGridRows, C = shape_.grid_cols(), cells = shape_.cells();
        const int F = shape_.filters, FL = shape_.flatten(), PR = shape_.pooled_rows(), PC = shape_.pooled_cols();
        const Eigen::Index slices = static_cast<Eigen::Index>(B) * T * K;
        cc.batch = B;

        // im2col over every (example, step, vehicle) slice
        cc.patches.setZero(shape_.taps(), slices * cells);
        for (int b = 0; b < B; ++b) {
            const HistoryWindow& w = *windows[static_cast<std::size_t>(b)];
            if (w.length() != T || w.n_vehicles() != K || w.n_antennas() != M)
                throw std::invalid_argument("HclNet: history window does not match the network shape");
            for (int t = 0; t < T; ++t)
                for (int k = 0; k < K; ++k) {
                    const Eigen::Index s = (static_cast<Eigen::Index>(b) * T + t) * K + k;
                    const auto col = w.slots[static_cast<std::size_t>(t)].col(k);
                    for (int r = 0; r < R; ++r)
                        for (int c = 0; c < C; ++c) {
                            const Eigen::Index pcol = s * cells + r * C + c;
                            for (int dr = 0; dr < 3; ++dr)
                                for (int dc = 0; dc < 3; ++dc) {
                                    int rr = r + dr - 1, cc2 = c + dc - 1;
                                    if (rr < 0 || rr >= R || cc2 < 0 || cc2 >= C) continue;
                                    const cplx v = kappa_ * col[rr * C + cc2];
                                    cc.patches(detail::tap_index(dr, dc, 0), pcol) = v.real();
                                    cc.patches(detail::tap_index(dr, dc, 1), pcol) = v.imag();
                                }
                        }
                }
        }
        cc.act.noalias() = params_.mat("conv_w") * cc.patches;
        cc.act.colwise() += params_.mat("conv_b").col(0);
        cc.act = cc.act.cwiseMax(0.0);

        // max-pool into the per-step LSTM inputs
        cc.x.assign(static_cast<std::size_t>(T), Eigen::MatrixXd(shape_.lstm_input(), B));
        cc.pool_arg.assign(static_cast<std::size_t>(T) * shape_.lstm_input() * B, 0);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t)
                for (int k = 0; k < K; ++k) {
                    const Eigen::Index s = (static_cast<Eigen::Index>(b) * T + t) * K + k;
                    for (int pr = 0; pr < PR; ++pr)
                        for (int pc = 0; pc < PC; ++pc)
                            for (int f = 0; f < F; ++f) {
                                Eigen::Index best = s * cells + (2 * pr) * C + 2 * pc;
                                for (int i = 0; i < 2; ++i)
                                    for (int j = 0; j < 2; ++j) {
                                        Eigen::Index col = s * cells + (2 * pr + i) * C + (2 * pc + j);
                                        if (cc.act(f, col) > cc.act(f, best)) best = col;
                                    }
                                const int row = k * FL + (pr * PC + pc) * F + f;
                                cc.x[static_cast<std::size_t>(t)](row, b) = cc.act(f, best);
                                cc.pool_arg[pool_index(t, row, b, B)] = best;
                            }
                }

        // LSTM, oldest slot first
        const int H = shape_.hidden;
        auto wx = params_.mat("lstm_wx");
        auto wh = params_.mat("lstm_wh");
        auto lb = params_.mat("lstm_b");
        cc.h.assign(static_cast<std::size_t>(T) + 1, Eigen::MatrixXd::Zero(H, B));
        cc.c.assign(static_cast<std::size_t>(T) + 1, Eigen::MatrixXd::Zero(H, B));
        cc.gate.assign(static_cast<std::size_t>(T), Eigen::MatrixXd());
        for (int t = 0; t < T; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            Eigen::MatrixXd z = wx * cc.x[ti];
            z.noalias() += wh * cc.h[ti];
            z.colwise() += lb.col(0);
            for (Eigen::Index j = 0; j < B; ++j)
                for (int u = 0; u < H; ++u) {
                    z(u, j) = detail::sigmoid(z(u, j));
                    z(H + u, j) = detail::sigmoid(z(H + u, j));
                    z(2 * H + u, j) = detail::sigmoid(z(2 * H + u, j));
                    z(3 * H + u, j) = std::tanh(z(3 * H + u, j));
                    const double c = z(H + u, j) * cc.c[ti](u, j) + z(u, j) * z(3 * H + u, j);
                    cc.c[ti + 1](u, j) = c;
                    cc.h[ti + 1](u, j) = z(2 * H + u, j) * std::tanh(c);
                }
            cc.gate[ti] = std::move(z);
        }

        Eigen::MatrixXd out = params_.mat("fc_w") * cc.h[static_cast<std::size_t>(T)];
        out.colwise() += params_.mat("fc_b").col(0);
        return out;
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(outputs).
    void backward_batch(const Cache& cc, const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) const
    {
        const int B = cc.batch, T = shape_.history_len, H = shape_.hidden;
        if (d_out.cols() != B || d_out.rows() != shape_.output())
            throw std::invalid_argument("HclNet::backward_batch: output gradient shape mismatch");
        if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());

        params_.view(grad, "fc_w").noalias() += d_out * cc.h[static_cast<std::size_t>(T)].transpose();
        params_.view(grad, "fc_b").col(0) += d_out.rowwise().sum();
        Eigen::MatrixXd dh = params_.mat("fc_w").transpose() * d_out;
        Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(H, B);

        auto wx = params_.mat("lstm_wx");
        auto wh = params_.mat("lstm_wh");
        auto gwx = params_.view(grad, "lstm_wx");
        auto gwh = params_.view(grad, "lstm_wh");
        auto gb = params_.view(grad, "lstm_b");
        auto gcw = params_.view(grad, "conv_w");
        auto gcb = params_.view(grad, "conv_b");

        Eigen::MatrixXd d_act = Eigen::MatrixXd::Zero(cc.act.rows(), cc.act.cols());
        Eigen::MatrixXd dz(4 * H, B);
        for (int t = T - 1; t >= 0; --t) {
            const auto ti = static_cast<std::size_t>(t);
            const Eigen::MatrixXd& g = cc.gate[ti];
            for (Eigen::Index j = 0; j < B; ++j)
                for (int u = 0; u < H; ++u) {
                    const double ig = g(u, j), fg = g(H + u, j), og = g(2 * H + u, j), cand = g(3 * H + u, j);
                    const double tc = std::tanh(cc.c[ti + 1](u, j));
                    const double dcu = dc(u, j) + dh(u, j) * og * (1.0 - tc * tc);
                    dz(u, j) = dcu * cand * ig * (1.0 - ig);
                    dz(H + u, j) = dcu * cc.c[ti](u, j) * fg * (1.0 - fg);
                    dz(2 * H + u, j) = dh(u, j) * tc * og * (1.0 - og);
                    dz(3 * H + u, j) = dcu * ig * (1.0 - cand * cand);
                    dc(u, j) = dcu * fg;
                }
            gwx.noalias() += dz * cc.x[ti].transpose();
            gwh.noalias() += dz * cc.h[ti].transpose();
            gb.col(0) += dz.rowwise().sum();
            dh.noalias() = wh.transpose() * dz;
            const Eigen::MatrixXd dx = wx.transpose() * dz;

            // un-pool: route each input gradient to its argmax cell
            const int F = shape_.filters;
            for (Eigen::Index b = 0; b < B; ++b)
                for (Eigen::Index row = 0; row < dx.rows(); ++row) {
                    const int f = static_cast<int>(row % F);
                    d_act(f, cc.pool_arg[pool_index(t, static_cast<int>(row), static_cast<int>(b), B)]) += dx(row, b);
                }
        }
        // ReLU mask, then filter gradients from the stored patches
        for (Eigen::Index j = 0; j < d_act.cols(); ++j)
            for (Eigen::Index f = 0; f < d_act.rows(); ++f)
                if (!(cc.act(f, j) > 0.0)) d_act(f, j) = 0.0;
        gcw.noalias() += d_act * cc.patches.transpose();
        gcb.col(0) += d_act.rowwise().sum();
    }

    Eigen::MatrixXd forward_examples(std::span<const TrainingExample* const> batch, Cache* cache = nullptr) const
    {
        std::vector<const HistoryWindow*> windows;
        windows.reserve(batch.size());
        for (const auto* ex : batch) windows.push_back(&ex->history);
        return forward_batch(windows, cache);
    }

    /// W = F(h(window)).
    [[nodiscard]] BeamformingMatrix forward(const HistoryWindow& window) const
    {
        const HistoryWindow* p = &window;
        Eigen::MatrixXd out = forward_batch(std::span<const HistoryWindow* const>(&p, 1));
        return beams_from_output(out.col(0), shape_.n_vehicles, shape_.n_antennas);
    }

private:
    /// pool_arg is laid out [t][row][b].
    [[nodiscard]] std::size_t pool_index(int t, int row, int b, int batch) const
    {
        return (static_cast<std::size_t>(t) * static_cast<std::size_t>(shape_.lstm_input()) +
                static_cast<std::size_t>(row)) *
                   static_cast<std::size_t>(batch) +
               static_cast<std::size_t>(b);
    }

    HclShape shape_;
    NetworkParams params_;
    double kappa_ = 1.0;
};

} // namespace isac::nn
