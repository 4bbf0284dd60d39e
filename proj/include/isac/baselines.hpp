// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/params.hpp"
#include "isac/rng.hpp"
#include "isac/sensing.hpp"
#include "isac/sim_core.hpp"

namespace isac {

enum class BaselineKind { genie, naive_dl, random };

inline std::string to_string(BaselineKind k)
{
    switch (k) {
    case BaselineKind::genie: return "genie";
    case BaselineKind::naive_dl: return "naive_dl";
    case BaselineKind::random: return "random";
    }
    return "?";
}

/// Perfectly aligned beams with an equal power split: w_k = sqrt(P/K) a(theta_k).
inline BeamformingMatrix genie_beamformer(const std::vector<VehicleState>& states, const SimConfig& cfg)
{
    const auto K = static_cast<Eigen::Index>(states.size());
    BeamformingMatrix W(cfg.n_tx, K);
    const double amp = std::sqrt(cfg.power_budget / static_cast<double>(K));
    for (Eigen::Index k = 0; k < K; ++k) W.col(k) = amp * steering(states[static_cast<std::size_t>(k)].theta, cfg.n_tx);
    return W;
}

/// Interference-free per-user rate of the genie scheme.
inline double genie_user_rate(const VehicleState& s, const SimConfig& cfg, int n_users)
{
    const double alpha = path_loss_amp(s.dist, cfg);
    return std::log2(1.0 + (cfg.power_budget / n_users) * cfg.n_tx * alpha * alpha / cfg.noise_vehicle);
}

/// Upper bound: perfect instantaneous CSI, no multi-user interference, CRLB
/// constraints ignored.
inline double genie_rate(const std::vector<VehicleState>& states, const SimConfig& cfg)
{
    double r = 0.0;
    for (const auto& s : states) r += genie_user_rate(s, cfg, static_cast<int>(states.size()));
    return r;
}

/// w_k = sqrt(P/K) a(theta_k) with theta_k ~ U(0, pi) drawn per vehicle.
inline BeamformingMatrix random_beamformer(const SimConfig& cfg, Rng& rng)
{
    BeamformingMatrix W(cfg.n_tx, cfg.n_vehicles);
    const double amp = std::sqrt(cfg.power_budget / cfg.n_vehicles);
    for (int k = 0; k < cfg.n_vehicles; ++k) W.col(k) = amp * steering(rng.uniform(0.0, std::numbers::pi), cfg.n_tx);
    return W;
}

/// Fully-connected beamformer fed only with the previous slot's angle and
/// range estimates, which it treats as the current truth. Two ReLU hidden
/// layers, linear output of width 2KM.
class NaiveNet {
public:
    struct Cache {
        int batch = 0;
        Eigen::MatrixXd in, a1, a2;
    };

    static constexpr int kHidden = 128;

    NaiveNet() = default;
    NaiveNet(int n_vehicles, int n_antennas, int hidden = kHidden)
        : K_(n_vehicles), M_(n_antennas), hidden_(hidden), params_(make_layout(n_vehicles, n_antennas, hidden)),
          shift_(Eigen::VectorXd::Zero(2 * n_vehicles)), scale_(Eigen::VectorXd::Ones(2 * n_vehicles))
    {
        if (K_ < 1 || M_ < 1 || hidden_ < 1) throw std::invalid_argument("NaiveNet: sizes must be positive");
    }

    static nn::ParamLayout make_layout(int K, int M, int hidden)
    {
        nn::ParamLayout l;
        l.add("l1_w", hidden, 2 * K);
        l.add("l1_b", hidden, 1);
        l.add("l2_w", hidden, hidden);
        l.add("l2_b", hidden, 1);
        l.add("out_w", 2 * K * M, hidden);
        l.add("out_b", 2 * K * M, 1);
        return l;
    }

    static NaiveNet create(int K, int M, double power_budget, std::uint32_t seed, int hidden = kHidden)
    {
        NaiveNet net(K, M, hidden);
        Rng rng(seed);
        net.params_.glorot("l1_w", 2 * K, hidden, rng);
        net.params_.glorot("l2_w", hidden, hidden, rng);
        net.params_.glorot("out_w", hidden, 2 * K * M, rng, std::sqrt(power_budget / K));
        return net;
    }

    /// Per-feature standardization from the training set; marks the net usable.
    void fit_normalization(const std::vector<nn::TrainingExample>& data)
    {
        if (data.empty()) throw std::invalid_argument("NaiveNet: empty dataset");
        Eigen::MatrixXd f(2 * K_, static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) f.col(static_cast<Eigen::Index>(i)) = raw_features(data[i].history);
        shift_ = f.rowwise().mean();
        Eigen::VectorXd var = (f.colwise() - shift_).array().square().rowwise().mean();
        scale_ = var.array().sqrt().max(1e-12).inverse();
        fitted_ = true;
    }

    void set_normalization(Eigen::VectorXd shift, Eigen::VectorXd scale)
    {
        if (shift.size() != 2 * K_ || scale.size() != 2 * K_) throw std::invalid_argument("NaiveNet: bad normalization");
        shift_ = std::move(shift);
        scale_ = std::move(scale);
        fitted_ = true;
    }

    [[nodiscard]] bool fitted() const { return fitted_; }
    [[nodiscard]] const Eigen::VectorXd& shift() const { return shift_; }
    [[nodiscard]] const Eigen::VectorXd& scale() const { return scale_; }
    [[nodiscard]] int n_vehicles() const { return K_; }
    [[nodiscard]] int n_antennas() const { return M_; }
    [[nodiscard]] int hidden() const { return hidden_; }
    nn::NetworkParams& params() { return params_; }
    [[nodiscard]] const nn::NetworkParams& params() const { return params_; }

    /// (theta_hat_k, d_hat_k) of the newest history slot, interleaved per vehicle.
    [[nodiscard]] Eigen::VectorXd raw_features(const nn::HistoryWindow& w) const
    {
        if (w.theta_hat.empty() || w.theta_hat.back().size() != K_ || w.d_hat.back().size() != K_)
            throw std::invalid_argument("NaiveNet: history window carries no estimates for K vehicles");
        return raw_features(w.theta_hat.back(), w.d_hat.back());
    }

    [[nodiscard]] Eigen::VectorXd raw_features(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& d_hat) const
    {
        Eigen::VectorXd f(2 * K_);
        for (int k = 0; k < K_; ++k) {
            f[2 * k] = theta_hat[k];
            f[2 * k + 1] = d_hat[k];
        }
        return f;
    }

    Eigen::MatrixXd forward_inputs(const Eigen::MatrixXd& raw, Cache* cache = nullptr) const
    {
        Cache local;
        Cache& c = cache ? *cache : local;
        c.batch = static_cast<int>(raw.cols());
        c.in = (raw.colwise() - shift_).array().colwise() * scale_.array();
        c.a1 = params_.mat("l1_w") * c.in;
        c.a1.colwise() += params_.mat("l1_b").col(0);
        c.a1 = c.a1.cwiseMax(0.0);
        c.a2 = params_.mat("l2_w") * c.a1;
        c.a2.colwise() += params_.mat("l2_b").col(0);
        c.a2 = c.a2.cwiseMax(0.0);
        Eigen::MatrixXd out = params_.mat("out_w") * c.a2;
        out.colwise() += params_.mat("out_b").col(0);
        return out;
    }

    Eigen::MatrixXd forward_examples(std::span<const nn::TrainingExample* const> batch, Cache* cache = nullptr) const
    {
        Eigen::MatrixXd raw(2 * K_, static_cast<Eigen::Index>(batch.size()));
        for (std::size_t i = 0; i < batch.size(); ++i) raw.col(static_cast<Eigen::Index>(i)) = raw_features(batch[i]->history);
        return forward_inputs(raw, cache);
    }

    void backward_batch(const Cache& c, const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) const
    {
        if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
        params_.view(grad, "out_w").noalias() += d_out * c.a2.transpose();
        params_.view(grad, "out_b").col(0) += d_out.rowwise().sum();
        Eigen::MatrixXd d2 = (params_.mat("out_w").transpose() * d_out).array() * (c.a2.array() > 0.0).cast<double>();
        params_.view(grad, "l2_w").noalias() += d2 * c.a1.transpose();
        params_.view(grad, "l2_b").col(0) += d2.rowwise().sum();
        Eigen::MatrixXd d1 = (params_.mat("l2_w").transpose() * d2).array() * (c.a1.array() > 0.0).cast<double>();
        params_.view(grad, "l1_w").noalias() += d1 * c.in.transpose();
        params_.view(grad, "l1_b").col(0) += d1.rowwise().sum();
    }

private:
    int K_ = 0, M_ = 0, hidden_ = kHidden;
    nn::NetworkParams params_;
    Eigen::VectorXd shift_, scale_;
    bool fitted_ = false;
};

/// Beams from the naive network given the previous slot's observations.
inline BeamformingMatrix naive_dl_beamformer(const std::vector<ObservationRecord>& last_obs, const NaiveNet& net,
                                             const SimConfig& cfg)
{
    if (!net.fitted()) throw std::invalid_argument("naive_dl_beamformer: network has not been trained");
    if (static_cast<int>(last_obs.size()) != net.n_vehicles() || net.n_vehicles() != cfg.n_vehicles ||
        net.n_antennas() != cfg.n_tx)
        throw std::invalid_argument("naive_dl_beamformer: network shape does not match the configuration");
    Eigen::VectorXd th(net.n_vehicles()), d(net.n_vehicles());
    for (int k = 0; k < net.n_vehicles(); ++k) {
        th[k] = last_obs[static_cast<std::size_t>(k)].theta_hat;
        d[k] = last_obs[static_cast<std::size_t>(k)].d_hat;
    }
    Eigen::MatrixXd out = net.forward_inputs(net.raw_features(th, d));
    return nn::beams_from_output(out.col(0), net.n_vehicles(), net.n_antennas());
}

} // namespace isac
