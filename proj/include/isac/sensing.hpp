// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/rng.hpp"
#include "isac/sim_core.hpp"

namespace isac {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Estimates produced by the echo processing of one vehicle in one slot.
struct ObservationRecord {
    double nu_hat = 0.0;    // round-trip delay [s]
    double mu_hat = 0.0;    // Doppler [Hz]
    double theta_hat = 0.0; // [rad]
    double d_hat = 0.0;     // c * nu_hat / 2 [m]
    double vdot_hat = 0.0;  // c * mu_hat / (2 f_c) [m/s]
    bool observable = true;
};

struct SensingNoiseModel {
    double sigma_r2 = 0.0;  // post matched-filter echo noise [W]
    double sigma_nu2 = 0.0; // delay estimation variance [s^2]
    double sigma_mu2 = 0.0; // Doppler estimation variance [Hz^2]
    bool observable = true;
};

struct FisherInfo {
    Eigen::Matrix3d f = Eigen::Matrix3d::Zero(); // over (theta, d, radial_v)
    double crlb_theta = kInf;                    // [rad^2]
    double crlb_d = kInf;                        // [m^2]
    bool observable = false;
};

/// beta = varrho / (2 d).
inline cplx reflection_coeff(double dist, const SimConfig& cfg)
{
    if (!(dist > 0.0)) throw std::invalid_argument("reflection_coeff: distance must be positive");
    return cfg.rcs_coeff / (2.0 * dist);
}

/// |psi|^2 = N_t N_r |beta|^2 (the Doppler phase has unit modulus).
inline double echo_power_gain(double dist, const SimConfig& cfg)
{
    return static_cast<double>(cfg.n_tx) * cfg.n_rx * std::norm(reflection_coeff(dist, cfg));
}

/// |a(theta)^H w|^2.
inline double beam_gain(double theta, const CVector& w, int n_tx)
{
    return std::norm(steering(theta, n_tx).dot(w));
}

namespace detail {
inline bool is_null_gain(double gain, const CVector& w)
{
    return !(gain > 1e-24 * w.squaredNorm()) || gain == 0.0;
}
} // namespace detail

/// Post-processing noise statistics for an echo received through beam w.
/// A beam with no gain towards theta yields observable == false and
/// infinite delay/Doppler variances.
inline SensingNoiseModel obs_noise_vars(double theta, double dist, const CVector& w, const SimConfig& cfg)
{
    SensingNoiseModel m;
    m.sigma_r2 = cfg.echo_noise_var();
    double gain = beam_gain(theta, w, cfg.n_tx);
    if (detail::is_null_gain(gain, w)) {
        m.sigma_nu2 = m.sigma_mu2 = kInf;
        m.observable = false;
        return m;
    }
    double denom = cfg.mf_gain * echo_power_gain(dist, cfg) * gain;
    m.sigma_nu2 = cfg.rho_nu * cfg.rho_nu * cfg.noise_rsu / denom;
    m.sigma_mu2 = cfg.rho_mu * cfg.rho_mu * cfg.noise_rsu / denom;
    return m;
}

/// Noiseless matched-filter output sqrt(N_t N_r) beta xi b(theta) (a(theta)^H w).
inline CVector echo_mean(double theta, double dist, const CVector& w, const SimConfig& cfg)
{
    const double G = std::sqrt(static_cast<double>(cfg.n_tx) * cfg.n_rx);
    const cplx scale = G * reflection_coeff(dist, cfg) * cfg.mf_gain;
    return scale * steering(theta, cfg.n_rx) * steering(theta, cfg.n_tx).dot(w);
}

/// Linear map w -> d(echo_mean)/d(theta) at a fixed geometry:
///   D w = G beta xi [ b'(theta) (a^H w) + b(theta) (a'^H w) ].
/// Precomputes the four array vectors so both D w and D^H v are O(N).
class EchoDerivative {
public:
    EchoDerivative(double theta, double dist, const SimConfig& cfg)
        : a_(steering(theta, cfg.n_tx)), da_(steering_dtheta(theta, cfg.n_tx)), b_(steering(theta, cfg.n_rx)),
          db_(steering_dtheta(theta, cfg.n_rx)),
          scale_(std::sqrt(static_cast<double>(cfg.n_tx) * cfg.n_rx) * reflection_coeff(dist, cfg) * cfg.mf_gain)
    {
    }

    [[nodiscard]] CVector apply(const CVector& w) const
    {
        return scale_ * (db_ * a_.dot(w) + b_ * da_.dot(w));
    }

    /// D^H v.
    [[nodiscard]] CVector adjoint(const CVector& v) const
    {
        return std::conj(scale_) * (a_ * db_.dot(v) + da_ * b_.dot(v));
    }

private:
    CVector a_, da_, b_, db_;
    cplx scale_;
};

inline CVector echo_dtheta(double theta, double dist, const CVector& w, const SimConfig& cfg)
{
    return EchoDerivative(theta, dist, cfg).apply(w);
}

/// Angle CRLB sigma_r^2 / ||d r / d theta||^2. When `grad` is given it
/// receives the gradient with respect to (Re w, Im w), packed as a complex
/// vector. Infinite when the derivative vanishes.
inline double crlb_theta_value(double theta, double dist, const CVector& w, const SimConfig& cfg,
                               CVector* grad = nullptr)
{
    EchoDerivative D(theta, dist, cfg);
    CVector Dw = D.apply(w);
    double q = Dw.squaredNorm();
    double sr2 = cfg.echo_noise_var();
    if (!(q > 0.0)) {
        if (grad) grad->setZero(w.size());
        return kInf;
    }
    double crlb = sr2 / q;
    if (grad) *grad = (-2.0 * sr2 / (q * q)) * D.adjoint(Dw);
    return crlb;
}

/// Range CRLB sigma_nu^2 c^2 / 4, with gradient as in crlb_theta_value.
inline double crlb_d_value(double theta, double dist, const CVector& w, const SimConfig& cfg,
                           CVector* grad = nullptr)
{
    CVector a = steering(theta, cfg.n_tx);
    cplx aw = a.dot(w);
    double gain = std::norm(aw);
    if (detail::is_null_gain(gain, w)) {
        if (grad) grad->setZero(w.size());
        return kInf;
    }
    double c = cfg.wave_speed;
    double num = cfg.rho_nu * cfg.rho_nu * cfg.noise_rsu * c * c / 4.0;
    double coef = num / (cfg.mf_gain * echo_power_gain(dist, cfg));
    if (grad) *grad = (-2.0 * coef / (gain * gain)) * a * aw;
    return coef / gain;
}

/// Fisher information of (theta, d, radial_v) for one vehicle illuminated by w.
/// The echo model treats beta as a known nuisance, so the Jacobian is block
/// diagonal and F = diag(||dr/dtheta||^2 / sigma_r^2, (2/c)^2 / sigma_nu^2,
/// (2 f_c / c)^2 / sigma_mu^2).
inline FisherInfo fisher_information(const VehicleState& s, const CVector& w, const SimConfig& cfg)
{
    FisherInfo out;
    SensingNoiseModel nm = obs_noise_vars(s.theta, s.dist, w, cfg);
    CVector dr = echo_dtheta(s.theta, s.dist, w, cfg);
    const double c = cfg.wave_speed;
    out.f(0, 0) = dr.squaredNorm() / nm.sigma_r2;
    if (nm.observable) {
        out.f(1, 1) = (2.0 / c) * (2.0 / c) / nm.sigma_nu2;
        out.f(2, 2) = (2.0 * cfg.carrier_hz / c) * (2.0 * cfg.carrier_hz / c) / nm.sigma_mu2;
    }
    out.observable = nm.observable && out.f(0, 0) > 0.0;
    out.crlb_theta = out.f(0, 0) > 0.0 ? 1.0 / out.f(0, 0) : kInf;
    out.crlb_d = nm.observable ? nm.sigma_nu2 * c * c / 4.0 : kInf;
    return out;
}

/// Statistical stand-in for the matched-filter search: delay and Doppler
/// estimates are the truth plus Gaussian errors with the SNR-dependent
/// variances; the angle estimate follows cfg.theta_mode. Always consumes
/// exactly three normals so parallel streams stay aligned.
inline ObservationRecord generate_observation(const VehicleState& s, const CVector& w, const SimConfig& cfg, Rng& rng,
                                              ThetaMode mode)
{
    ObservationRecord o;
    SensingNoiseModel nm = obs_noise_vars(s.theta, s.dist, w, cfg);
    double e_nu = rng.normal();
    double e_mu = rng.normal();
    double e_th = rng.normal();
    const double c = cfg.wave_speed;
    if (!nm.observable) {
        o.observable = false;
        return o;
    }
    o.nu_hat = 2.0 * s.dist / c + std::sqrt(nm.sigma_nu2) * e_nu;
    o.mu_hat = 2.0 * s.radial_v * cfg.carrier_hz / c + std::sqrt(nm.sigma_mu2) * e_mu;
    if (mode == ThetaMode::relative) {
        o.theta_hat = s.theta * (1.0 + std::sqrt(cfg.obs_rel_mse) * e_th);
    } else {
        double crlb = crlb_theta_value(s.theta, s.dist, w, cfg);
        if (!std::isfinite(crlb)) {
            o.observable = false;
            return o;
        }
        o.theta_hat = s.theta + std::sqrt(crlb) * e_th;
    }
    o.d_hat = c * o.nu_hat / 2.0;
    o.vdot_hat = c * o.mu_hat / (2.0 * cfg.carrier_hz);
    return o;
}

inline ObservationRecord generate_observation(const VehicleState& s, const CVector& w, const SimConfig& cfg, Rng& rng)
{
    return generate_observation(s, w, cfg, rng, cfg.theta_mode);
}

} // namespace isac
