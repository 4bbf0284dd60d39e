// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/sensing.hpp"

namespace isac::nn {

/// Value of the penalized cost and its parts, averaged over a batch.
struct LossBreakdown {
    double total = 0.0;
    double sum_rate = 0.0;      // mean over examples of sum_k log2(1 + SINR_k)
    double crlb_theta = 0.0;    // mean over examples and vehicles (after capping)
    double crlb_d = 0.0;
    double penalty_theta = 0.0; // lambda1 * relu(crlb_theta - gamma_theta)^2
    double penalty_d = 0.0;
    double penalty_power = 0.0; // lambda3 * mean relu(||W||_F^2 - P)^2
    double power = 0.0;         // mean ||W||_F^2
};

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Sum-rate of one example and, optionally, its (Re, Im)-packed gradient
/// with respect to W.
inline double sum_rate_with_grad(const ChannelMatrix& H, const BeamformingMatrix& W, double sigma2,
                                 BeamformingMatrix* grad)
{
    const Eigen::Index K = H.cols();
    Eigen::MatrixXcd G = H.adjoint() * W; // G(k, j) = h_k^H w_j
    double rate = 0.0;
    Eigen::MatrixXcd coef(K, W.cols());
    for (Eigen::Index k = 0; k < K; ++k) {
        double total = sigma2, signal = 0.0;
        for (Eigen::Index j = 0; j < W.cols(); ++j) total += std::norm(G(k, j));
        if (k < W.cols()) signal = std::norm(G(k, k));
        const double rest = total - signal; // interference plus noise
        rate += std::log2(total / rest);
        for (Eigen::Index j = 0; j < W.cols(); ++j) coef(k, j) = G(k, j) * (1.0 / total - (j == k ? 0.0 : 1.0 / rest));
    }
    if (grad) *grad = (2.0 / std::numbers::ln2) * (H * coef);
    return rate;
}

/// Penalized cost over a batch of network outputs (one column of length 2KM
/// per example):
///
///   J = -mean_i sum_k log2(1 + SINR_ik)
///       + lambda1 relu(mean_ik CRLB_theta - gamma_theta)^2
///       + lambda2 relu(mean_ik CRLB_d - gamma_d)^2
///       + lambda3 mean_i relu(||W_i||_F^2 - P)^2
///
/// CRLBs are taken at the true geometry of each example and clamped to
/// crlb_cap_factor * gamma (zero gradient once clamped). When d_out is not
/// null it receives dJ/d(outputs).
inline LossBreakdown penalty_loss_outputs(const Eigen::MatrixXd& out, std::span<const TrainingExample* const> batch,
                                          const SimConfig& cfg, Eigen::MatrixXd* d_out = nullptr)
{
    const auto B = static_cast<Eigen::Index>(batch.size());
    if (B == 0) throw std::invalid_argument("penalty_loss: empty batch");
    if (out.cols() != B) throw std::invalid_argument("penalty_loss: output/batch size mismatch");
    const int K = cfg.n_vehicles, M = cfg.n_tx;
    if (out.rows() != 2 * K * M) throw std::invalid_argument("penalty_loss: output width does not match 2 K N_t");

    LossBreakdown L;
    std::vector<BeamformingMatrix> gW(static_cast<std::size_t>(B));
    std::vector<BeamformingMatrix> g_theta, g_d;
    if (d_out) {
        g_theta.resize(static_cast<std::size_t>(B));
        g_d.resize(static_cast<std::size_t>(B));
    }
    std::vector<double> excess(static_cast<std::size_t>(B));
    std::vector<BeamformingMatrix> Ws(static_cast<std::size_t>(B));

    const double cap_t = cfg.crlb_theta_cap(), cap_d = cfg.crlb_d_cap();
    for (Eigen::Index i = 0; i < B; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const TrainingExample& ex = *batch[ii];
        Ws[ii] = beams_from_output(out.col(i), K, M);
        const BeamformingMatrix& W = Ws[ii];
        L.sum_rate += sum_rate_with_grad(ex.true_channels, W, cfg.noise_vehicle, d_out ? &gW[ii] : nullptr);
        if (d_out) {
            g_theta[ii].setZero(M, K);
            g_d[ii].setZero(M, K);
        }
        for (int k = 0; k < K; ++k) {
            CVector w = W.col(k), gt, gd;
            double ct = crlb_theta_value(ex.true_thetas[k], ex.true_dists[k], w, cfg, d_out ? &gt : nullptr);
            double cd = crlb_d_value(ex.true_thetas[k], ex.true_dists[k], w, cfg, d_out ? &gd : nullptr);
            if (!(ct < cap_t)) ct = cap_t;
            else if (d_out) g_theta[ii].col(k) = gt;
            if (!(cd < cap_d)) cd = cap_d;
            else if (d_out) g_d[ii].col(k) = gd;
            L.crlb_theta += ct;
            L.crlb_d += cd;
        }
        const double p = W.squaredNorm();
        L.power += p;
        excess[ii] = relu(p - cfg.power_budget);
        L.penalty_power += excess[ii] * excess[ii];
    }
    const double invB = 1.0 / static_cast<double>(B), invBK = invB / K;
    L.sum_rate *= invB;
    L.crlb_theta *= invBK;
    L.crlb_d *= invBK;
    L.power *= invB;
    L.penalty_power *= cfg.lambda3 * invB;
    const double ex_t = relu(L.crlb_theta - cfg.gamma_theta), ex_d = relu(L.crlb_d - cfg.gamma_d);
    L.penalty_theta = cfg.lambda1 * ex_t * ex_t;
    L.penalty_d = cfg.lambda2 * ex_d * ex_d;
    L.total = -L.sum_rate + L.penalty_theta + L.penalty_d + L.penalty_power;

    if (d_out) {
        d_out->resize(out.rows(), B);
        const double ct = 2.0 * cfg.lambda1 * ex_t * invBK, cd = 2.0 * cfg.lambda2 * ex_d * invBK;
        for (Eigen::Index i = 0; i < B; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            BeamformingMatrix g = -invB * gW[ii];
            if (ct != 0.0) g += ct * g_theta[ii];
            if (cd != 0.0) g += cd * g_d[ii];
            if (excess[ii] > 0.0) g += (4.0 * cfg.lambda3 * invB * excess[ii]) * Ws[ii];
            output_grad_from_beams(g, d_out->col(i));
        }
    }
    return L;
}

} // namespace isac::nn
