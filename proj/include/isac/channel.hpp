// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "isac/config.hpp"
#include "isac/sim_core.hpp"

namespace isac {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

/// N_t x K complex matrix; column k belongs to vehicle k.
using ChannelMatrix = Eigen::MatrixXcd;
/// N_t x K complex matrix; column k is the beam w_k.
using BeamformingMatrix = Eigen::MatrixXcd;

/// ULA response: entry m is exp(-j pi m cos(theta)) / sqrt(n). Unit norm.
inline CVector steering(double theta, int n_ant)
{
    if (n_ant < 1) throw std::invalid_argument("steering: n_ant must be >= 1");
    CVector a(n_ant);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_ant));
    const double phase = -std::numbers::pi * std::cos(theta);
    for (int m = 0; m < n_ant; ++m) a[m] = std::polar(scale, phase * m);
    return a;
}

/// d/dtheta of steering(): entry m is (j pi m sin(theta)) * a_m.
inline CVector steering_dtheta(double theta, int n_ant)
{
    CVector a = steering(theta, n_ant);
    const cplx f(0.0, std::numbers::pi * std::sin(theta));
    for (int m = 0; m < n_ant; ++m) a[m] *= f * static_cast<double>(m);
    return a;
}

/// Amplitude path loss sqrt(alpha_0 (d/d_0)^-zeta).
inline double path_loss_amp(double dist, const SimConfig& cfg)
{
    if (!(dist > 0.0)) throw std::invalid_argument("path_loss_amp: distance must be positive");
    return std::sqrt(cfg.pathloss_ref * std::pow(dist / cfg.ref_dist, -cfg.pathloss_exp));
}

/// h = sqrt(N_t) * alpha(d) * a(theta).
inline CVector effective_channel(double theta, double dist, const SimConfig& cfg)
{
    return std::sqrt(static_cast<double>(cfg.n_tx)) * path_loss_amp(dist, cfg) * steering(theta, cfg.n_tx);
}

inline ChannelMatrix channel_matrix(const std::vector<VehicleState>& states, const SimConfig& cfg)
{
    ChannelMatrix H(cfg.n_tx, static_cast<Eigen::Index>(states.size()));
    for (std::size_t k = 0; k < states.size(); ++k)
        H.col(static_cast<Eigen::Index>(k)) = effective_channel(states[k].theta, states[k].dist, cfg);
    return H;
}

/// |h_k^H w_k|^2 / (sum_{j != k} |h_k^H w_j|^2 + sigma2).
inline double sinr(const CVector& h_k, const BeamformingMatrix& W, Eigen::Index k, double sigma2)
{
    if (h_k.size() != W.rows()) throw std::invalid_argument("sinr: dimension mismatch");
    double signal = 0.0, interference = 0.0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        double g = std::norm(h_k.dot(W.col(j)));
        (j == k ? signal : interference) += g;
    }
    return signal / (interference + sigma2);
}

/// Sum over users of log2(1 + SINR_k), in bits/s/Hz.
inline double sum_rate(const ChannelMatrix& H, const BeamformingMatrix& W, double sigma2)
{
    if (H.cols() != W.cols() || H.rows() != W.rows()) throw std::invalid_argument("sum_rate: dimension mismatch");
    double r = 0.0;
    for (Eigen::Index k = 0; k < H.cols(); ++k) r += std::log2(1.0 + sinr(H.col(k), W, k, sigma2));
    return r;
}

inline double frobenius_sq(const BeamformingMatrix& W) { return W.squaredNorm(); }

} // namespace isac
