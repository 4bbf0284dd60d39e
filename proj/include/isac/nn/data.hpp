// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/nn/tensor.hpp"

namespace isac::nn {

/// The last tau estimated channel matrices, oldest first, together with the
/// per-slot angle/range estimates they were built from.
struct HistoryWindow {
    std::vector<ChannelMatrix> slots;        // each N_t x K
    std::vector<Eigen::VectorXd> theta_hat;  // each length K
    std::vector<Eigen::VectorXd> d_hat;      // each length K

    [[nodiscard]] int length() const { return static_cast<int>(slots.size()); }
    [[nodiscard]] int n_vehicles() const { return slots.empty() ? 0 : static_cast<int>(slots.front().cols()); }
    [[nodiscard]] int n_antennas() const { return slots.empty() ? 0 : static_cast<int>(slots.front().rows()); }
};

/// One unlabeled training example: the network input and the truth of the
/// slot that the predicted beams will be applied to.
struct TrainingExample {
    HistoryWindow history;
    ChannelMatrix true_channels; // N_t x K
    Eigen::VectorXd true_thetas; // K
    Eigen::VectorXd true_dists;  // K
};

/// Packs a window into a tau x K x M x 2 tensor (real part in channel 0,
/// imaginary part in channel 1), scaled by kappa.
inline Tensor map_input(const HistoryWindow& window, int expected_len, double kappa = 1.0)
{
    if (window.length() != expected_len)
        throw std::invalid_argument("map_input: expected " + std::to_string(expected_len) + " history slots, got " +
                                    std::to_string(window.length()));
    const auto tau = static_cast<std::size_t>(window.length());
    const auto K = static_cast<std::size_t>(window.n_vehicles());
    const auto M = static_cast<std::size_t>(window.n_antennas());
    Tensor t({tau, K, M, 2});
    std::size_t i = 0;
    for (std::size_t s = 0; s < tau; ++s) {
        const auto& H = window.slots[s];
        if (static_cast<std::size_t>(H.cols()) != K || static_cast<std::size_t>(H.rows()) != M)
            throw std::invalid_argument("map_input: inconsistent slot dimensions");
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t m = 0; m < M; ++m) {
                const cplx v = H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                t.data[i++] = kappa * v.real();
                t.data[i++] = kappa * v.imag();
            }
    }
    return t;
}

/// Inverse of map_input for kappa = 1.
inline HistoryWindow unmap_input(const Tensor& t)
{
    if (t.rank() != 4 || t.shape[3] != 2) throw std::invalid_argument("unmap_input: expected tau x K x M x 2");
    HistoryWindow w;
    const auto tau = t.shape[0], K = t.shape[1], M = t.shape[2];
    std::size_t i = 0;
    for (std::size_t s = 0; s < tau; ++s) {
        ChannelMatrix H(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t m = 0; m < M; ++m, i += 2)
                H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = cplx(t.data[i], t.data[i + 1]);
        w.slots.push_back(std::move(H));
    }
    return w;
}

/// F(.): network output (length 2KM, laid out K x M x 2) to the N_t x K
/// complex beamforming matrix.
template <class Vec>
BeamformingMatrix beams_from_output(const Vec& out, int K, int M)
{
    BeamformingMatrix W(M, K);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < M; ++m) {
            const Eigen::Index i = 2 * (static_cast<Eigen::Index>(k) * M + m);
            W(m, k) = cplx(out[i], out[i + 1]);
        }
    return W;
}

/// Adjoint of beams_from_output: a (Re, Im)-packed gradient over W written
/// back into the K x M x 2 output layout.
template <class Vec>
void output_grad_from_beams(const BeamformingMatrix& gW, Vec&& d_out)
{
    const auto M = gW.rows(), K = gW.cols();
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index m = 0; m < M; ++m) {
            const Eigen::Index i = 2 * (k * M + m);
            d_out[i] = gW(m, k).real();
            d_out[i + 1] = gW(m, k).imag();
        }
}

} // namespace isac::nn
