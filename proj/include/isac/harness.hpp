// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "isac/baselines.hpp"
#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/hcl_net.hpp"
#include "isac/nn/predict.hpp"
#include "isac/nn/train.hpp"
#include "isac/rng.hpp"
#include "isac/sensing.hpp"
#include "isac/sim_core.hpp"

namespace isac {

enum class Method { hcl_net, naive_dl, random, genie };

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::hcl_net: return "hcl_net";
    case Method::naive_dl: return "naive_dl";
    case Method::random: return "random";
    case Method::genie: return "genie";
    }
    return "?";
}

inline Method method_from_string(const std::string& s)
{
    for (Method m : {Method::hcl_net, Method::naive_dl, Method::random, Method::genie})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown method '" + s + "' (expected hcl_net|naive_dl|random|genie)");
}

/// Trained networks available to an episode. output_scale multiplies the
/// network beams (power transfer between budgets); project enables the hard
/// power projection at inference.
struct Models {
    const nn::HclNet* hcl = nullptr;
    const NaiveNet* naive = nullptr;
    bool project = false;
    double output_scale = 1.0;
};

enum class Decision { warmup_random, method, genie };

struct SlotRecord {
    int slot = 0;
    std::vector<VehicleState> states;
    BeamformingMatrix W;        // applied during this slot
    Decision source = Decision::warmup_random;
    int info_slot = -1;         // newest slot whose data entered W; -1 if none
    Eigen::VectorXd sinr;       // per vehicle, realized against the true channel
    double rate = 0.0;          // sum_k log2(1 + sinr_k)
    Eigen::VectorXd crlb_theta; // per vehicle, at the true geometry
    Eigen::VectorXd crlb_d;
    std::vector<ObservationRecord> obs;
    Eigen::VectorXd theta_est;  // estimates carried forward (held when unobservable)
    Eigen::VectorXd d_est;
    ChannelMatrix est_channels; // effective_channel(theta_est, d_est)
};

struct EpisodeSummary {
    double rate = 0.0;
    double crlb_theta = 0.0;
    double crlb_d = 0.0;
    double power = 0.0;
    int slots = 0;
};

struct EpisodeTrace {
    Method method = Method::random;
    int history_len = 0;
    std::vector<SlotRecord> slots;

    /// Means over the slots after warm-up (all slots if the episode never
    /// leaves warm-up).
    [[nodiscard]] EpisodeSummary summary() const
    {
        EpisodeSummary s;
        const std::size_t first = slots.size() > static_cast<std::size_t>(history_len) ? history_len : 0;
        for (std::size_t n = first; n < slots.size(); ++n) {
            const auto& r = slots[n];
            s.rate += r.rate;
            s.crlb_theta += r.crlb_theta.mean();
            s.crlb_d += r.crlb_d.mean();
            s.power += r.W.squaredNorm();
            ++s.slots;
        }
        if (s.slots > 0) {
            s.rate /= s.slots;
            s.crlb_theta /= s.slots;
            s.crlb_d /= s.slots;
            s.power /= s.slots;
        }
        return s;
    }
};

namespace detail {

inline constexpr std::uint64_t kEvalStream = 0x6576616cULL;    // "eval"
inline constexpr std::uint64_t kDatasetStream = 0x64617461ULL; // "data"

/// Independent generators for vehicle motion, echo observations and random
/// beams, so different methods run on the same trajectories and noise.
struct Streams {
    Rng motion, obs, beams;
    explicit Streams(std::uint32_t seed)
        : motion(derive_seed(seed, 0)), obs(derive_seed(seed, 1)), beams(derive_seed(seed, 2))
    {
    }
};

using Decider = std::function<BeamformingMatrix(const nn::HistoryWindow&, Rng& beams)>;

inline BeamformingMatrix steer_to_estimates(const Eigen::VectorXd& theta, const SimConfig& cfg)
{
    BeamformingMatrix W(cfg.n_tx, cfg.n_vehicles);
    const double amp = std::sqrt(cfg.power_budget / cfg.n_vehicles);
    for (int k = 0; k < cfg.n_vehicles; ++k) W.col(k) = amp * steering(theta[k], cfg.n_tx);
    return W;
}

/// Slot loop shared by evaluation and dataset generation. Slot n applies
/// the W decided at the end of slot n-1 (random until the history window
/// holds tau estimates), scores it against the truth of slot n, observes the
/// echoes and decides W for slot n+1. With genie set, every slot instead
/// uses beams aligned with its own true angles and interference is ignored.
inline EpisodeTrace simulate(const SimConfig& cfg, int n_slots, std::uint32_t seed, Method method, bool genie,
                             const Decider& decide)
{
    if (n_slots < 1) throw std::invalid_argument("simulate: episode needs at least one slot");
    const int K = cfg.n_vehicles, tau = cfg.history_len;
    Streams st(seed);
    EpisodeTrace tr;
    tr.method = method;
    tr.history_len = tau;
    tr.slots.reserve(static_cast<std::size_t>(n_slots));

    std::vector<VehicleState> states = init_vehicles(cfg, st.motion);
    // Before the first echo the only prior is the nominal lane position.
    Eigen::VectorXd th_est(K), d_est(K);
    for (int k = 0; k < K; ++k) {
        th_est[k] = std::atan2(cfg.road_y, anchor_x(cfg, k));
        d_est[k] = std::hypot(cfg.road_y, anchor_x(cfg, k));
    }
    nn::HistoryWindow window;
    BeamformingMatrix W_next = random_beamformer(cfg, st.beams);
    Decision src_next = Decision::warmup_random;
    int info_next = -1;

    for (int n = 0; n < n_slots; ++n) {
        if (n > 0) states = step_all(states, cfg, st.motion);
        SlotRecord r;
        r.slot = n;
        r.states = states;
        if (genie) {
            r.W = genie_beamformer(states, cfg);
            r.source = Decision::genie;
            r.info_slot = n;
        } else {
            r.W = std::move(W_next);
            r.source = src_next;
            r.info_slot = info_next;
        }
        const ChannelMatrix H = channel_matrix(states, cfg);
        r.sinr.resize(K);
        r.crlb_theta.resize(K);
        r.crlb_d.resize(K);
        for (int k = 0; k < K; ++k) {
            r.sinr[k] = genie ? std::norm(H.col(k).dot(r.W.col(k))) / cfg.noise_vehicle
                              : sinr(H.col(k), r.W, k, cfg.noise_vehicle);
            r.rate += std::log2(1.0 + r.sinr[k]);
            const FisherInfo fi = fisher_information(states[static_cast<std::size_t>(k)], r.W.col(k), cfg);
            r.crlb_theta[k] = fi.crlb_theta;
            r.crlb_d[k] = fi.crlb_d;
        }
        r.obs.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            ObservationRecord o = generate_observation(states[static_cast<std::size_t>(k)], r.W.col(k), cfg, st.obs);
            if (o.observable && o.d_hat > 0.0) {
                th_est[k] = o.theta_hat;
                d_est[k] = o.d_hat;
            }
            r.obs.push_back(o);
        }
        r.theta_est = th_est;
        r.d_est = d_est;
        r.est_channels.resize(cfg.n_tx, K);
        for (int k = 0; k < K; ++k) r.est_channels.col(k) = effective_channel(th_est[k], d_est[k], cfg);

        window.slots.push_back(r.est_channels);
        window.theta_hat.push_back(th_est);
        window.d_hat.push_back(d_est);
        if (window.length() > tau) {
            window.slots.erase(window.slots.begin());
            window.theta_hat.erase(window.theta_hat.begin());
            window.d_hat.erase(window.d_hat.begin());
        }
        if (!genie) {
            if (window.length() < tau) {
                W_next = random_beamformer(cfg, st.beams);
                src_next = Decision::warmup_random;
            } else {
                W_next = decide(window, st.beams);
                src_next = Decision::method;
            }
            info_next = n;
        }
        tr.slots.push_back(std::move(r));
    }
    return tr;
}

} // namespace detail

/// One episode of cfg.episode_slots slots under the given method.
inline EpisodeTrace run_episode(const SimConfig& cfg, Method method, const Models& models, std::uint32_t seed)
{
    detail::Decider decide;
    switch (method) {
    case Method::genie:
        break;
    case Method::random:
        decide = [&cfg](const nn::HistoryWindow&, Rng& beams) { return random_beamformer(cfg, beams); };
        break;
    case Method::hcl_net:
        if (!models.hcl) throw std::invalid_argument("run_episode: hcl_net requires a trained model");
        decide = [&cfg, &models](const nn::HistoryWindow& w, Rng&) {
            BeamformingMatrix W = nn::predict(w, *models.hcl, cfg, false) * models.output_scale;
            if (models.project) nn::project_power(W, cfg.power_budget);
            return W;
        };
        break;
    case Method::naive_dl:
        if (!models.naive) throw std::invalid_argument("run_episode: naive_dl requires a trained model");
        decide = [&cfg, &models](const nn::HistoryWindow& w, Rng&) {
            std::vector<ObservationRecord> last(static_cast<std::size_t>(cfg.n_vehicles));
            for (int k = 0; k < cfg.n_vehicles; ++k) {
                last[static_cast<std::size_t>(k)].theta_hat = w.theta_hat.back()[k];
                last[static_cast<std::size_t>(k)].d_hat = w.d_hat.back()[k];
            }
            BeamformingMatrix W = naive_dl_beamformer(last, *models.naive, cfg) * models.output_scale;
            if (models.project) nn::project_power(W, cfg.power_budget);
            return W;
        };
        break;
    }
    return detail::simulate(cfg, cfg.episode_slots, seed, method, method == Method::genie, decide);
}

/// Training examples from independent episodes. Each episode stops at a
/// uniformly drawn target slot in [tau, N-1]; the example is the tau
/// estimated channels before it plus the truth of the target slot. Beams are
/// random during warm-up and afterwards steered at the latest angle
/// estimates.
inline std::vector<nn::TrainingExample> generate_dataset(const SimConfig& cfg, int n_examples, std::uint32_t seed)
{
    if (n_examples < 1) throw std::invalid_argument("generate_dataset: n_examples must be >= 1");
    const int tau = cfg.history_len, N = cfg.episode_slots;
    if (N <= tau) throw std::invalid_argument("generate_dataset: episode_slots must exceed history_len");
    const detail::Decider steer = [&cfg](const nn::HistoryWindow& w, Rng&) {
        return detail::steer_to_estimates(w.theta_hat.back(), cfg);
    };
    const std::uint32_t base = derive_seed(seed, detail::kDatasetStream);
    std::vector<nn::TrainingExample> out;
    out.reserve(static_cast<std::size_t>(n_examples));
    for (int i = 0; i < n_examples; ++i) {
        const std::uint32_t ep = derive_seed(base, static_cast<std::uint64_t>(i));
        Rng pick(derive_seed(ep, 3));
        const int target = tau + static_cast<int>(pick.below(static_cast<std::uint32_t>(N - tau)));
        EpisodeTrace tr = detail::simulate(cfg, target + 1, ep, Method::random, false, steer);
        nn::TrainingExample ex;
        for (int t = target - tau; t < target; ++t) {
            const auto& r = tr.slots[static_cast<std::size_t>(t)];
            ex.history.slots.push_back(r.est_channels);
            ex.history.theta_hat.push_back(r.theta_est);
            ex.history.d_hat.push_back(r.d_est);
        }
        const auto& truth = tr.slots[static_cast<std::size_t>(target)].states;
        ex.true_thetas.resize(cfg.n_vehicles);
        ex.true_dists.resize(cfg.n_vehicles);
        for (int k = 0; k < cfg.n_vehicles; ++k) {
            ex.true_thetas[k] = truth[static_cast<std::size_t>(k)].theta;
            ex.true_dists[k] = truth[static_cast<std::size_t>(k)].dist;
        }
        ex.true_channels = channel_matrix(truth, cfg);
        out.push_back(std::move(ex));
    }
    return out;
}

// ---- training --------------------------------------------------------------

inline nn::HclShape hcl_shape(const SimConfig& cfg)
{
    nn::HclShape s;
    s.n_vehicles = cfg.n_vehicles;
    s.n_antennas = cfg.n_tx;
    s.history_len = cfg.history_len;
    return s;
}

inline nn::TrainResult<nn::HclNet> train_hcl(const std::vector<nn::TrainingExample>& data, const SimConfig& cfg,
                                             const nn::TrainHyper& hyper, const nn::TrainCallback& cb = {})
{
    nn::HclNet net = nn::HclNet::create(hcl_shape(cfg), nn::input_scale(data), cfg.power_budget, hyper.seed);
    return nn::train(std::move(net), data, cfg, hyper, cb);
}

inline nn::TrainResult<NaiveNet> train_naive(const std::vector<nn::TrainingExample>& data, const SimConfig& cfg,
                                            const nn::TrainHyper& hyper, const nn::TrainCallback& cb = {})
{
    NaiveNet net = NaiveNet::create(cfg.n_vehicles, cfg.n_tx, cfg.power_budget, hyper.seed);
    net.fit_normalization(data);
    return nn::train(std::move(net), data, cfg, hyper, cb);
}

// ---- evaluation --------------------------------------------------------------

struct MethodStats {
    std::string method;
    double P = 0.0;
    double rate_mean = 0.0; // bits/s/Hz
    double rate_ci = 0.0;   // 95% normal half-width
    double crlb_theta_mean = 0.0;
    double crlb_d_mean = 0.0;
    double crlb_theta_sqrt = 0.0;
    double crlb_d_sqrt = 0.0;
    double power_mean = 0.0;
    int n = 0;
};

struct EvalReport {
    std::vector<MethodStats> rows;

    [[nodiscard]] const MethodStats& at(const std::string& method) const
    {
        for (const auto& r : rows)
            if (r.method == method) return r;
        throw std::out_of_range("EvalReport: no row for method '" + method + "'");
    }
};

namespace detail {

/// Pairwise summation in index order; the result does not depend on how
/// realizations were scheduled across threads.
inline double pairwise_sum(const double* x, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double mean(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size()); }

inline double ci95(const std::vector<double>& x)
{
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(x.size() - 1);
    return 1.96 * std::sqrt(var / static_cast<double>(x.size()));
}

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn)
{
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

/// Seed of realization r; shared by all methods so comparisons are paired.
inline std::uint32_t realization_seed(std::uint32_t seed, int r)
{
    return derive_seed(derive_seed(seed, detail::kEvalStream), static_cast<std::uint64_t>(r));
}

inline EvalReport monte_carlo_eval(const SimConfig& cfg, const std::vector<Method>& methods, const Models& models,
                                   int n_realizations, std::uint32_t seed, int threads = 0)
{
    if (n_realizations < 1) throw std::invalid_argument("monte_carlo_eval: need at least one realization");
    const std::size_t R = static_cast<std::size_t>(n_realizations);
    std::vector<std::vector<EpisodeSummary>> res(methods.size(), std::vector<EpisodeSummary>(R));
    detail::parallel_for(n_realizations, threads, [&](int r) {
        const std::uint32_t s = realization_seed(seed, r);
        for (std::size_t m = 0; m < methods.size(); ++m)
            res[m][static_cast<std::size_t>(r)] = run_episode(cfg, methods[m], models, s).summary();
    });
    EvalReport rep;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> rate(R), ct(R), cd(R), pw(R);
        for (std::size_t r = 0; r < R; ++r) {
            rate[r] = res[m][r].rate;
            ct[r] = res[m][r].crlb_theta;
            cd[r] = res[m][r].crlb_d;
            pw[r] = res[m][r].power;
        }
        MethodStats s;
        s.method = to_string(methods[m]);
        s.P = cfg.power_budget;
        s.rate_mean = detail::mean(rate);
        s.rate_ci = detail::ci95(rate);
        s.crlb_theta_mean = detail::mean(ct);
        s.crlb_d_mean = detail::mean(cd);
        s.crlb_theta_sqrt = std::sqrt(s.crlb_theta_mean);
        s.crlb_d_sqrt = std::sqrt(s.crlb_d_mean);
        s.power_mean = detail::mean(pw);
        s.n = n_realizations;
        rep.rows.push_back(std::move(s));
    }
    return rep;
}

inline const std::vector<double>& default_power_grid()
{
    static const std::vector<double> g{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
    return g;
}

/// Supplies the trained models to use at budget P (retrained per point or
/// transferred from one budget).
using ModelProvider = std::function<Models(double P)>;

inline std::vector<MethodStats> power_sweep(SimConfig cfg, const std::vector<double>& p_values,
                                            const std::vector<Method>& methods, const ModelProvider& provider,
                                            int n_realizations, std::uint32_t seed, int threads = 0)
{
    std::vector<MethodStats> rows;
    for (double P : p_values) {
        cfg.power_budget = P;
        const Models models = provider ? provider(P) : Models{};
        EvalReport rep = monte_carlo_eval(cfg, methods, models, n_realizations, seed, threads);
        rows.insert(rows.end(), rep.rows.begin(), rep.rows.end());
    }
    return rows;
}

// ---- export ------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "method,P,rate_mean,rate_ci,crlb_theta_sqrt,crlb_d_sqrt,n";

inline std::string format_g9(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/// CSV with the documented header. When cfg is given, the effective
/// configuration precedes the header as '#' comment lines.
inline std::string format_csv(const std::vector<MethodStats>& rows, const SimConfig* cfg = nullptr)
{
    std::string s;
    if (cfg)
        for (const auto& [k, v] : config_echo(*cfg)) s += "# " + k + "=" + v + "\n";
    s += kCsvHeader;
    s += "\n";
    for (const auto& r : rows) {
        s += r.method + "," + format_g9(r.P) + "," + format_g9(r.rate_mean) + "," + format_g9(r.rate_ci) + "," +
             format_g9(r.crlb_theta_sqrt) + "," + format_g9(r.crlb_d_sqrt) + "," + std::to_string(r.n) + "\n";
    }
    return s;
}

inline nlohmann::json to_json(const std::vector<MethodStats>& rows, const SimConfig* cfg = nullptr)
{
    nlohmann::json j;
    if (cfg) {
        j["config"] = nlohmann::json::object();
        for (const auto& [k, v] : config_echo(*cfg)) j["config"][k] = v;
    }
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"method", r.method},
                             {"P", r.P},
                             {"rate_mean", r.rate_mean},
                             {"rate_ci", r.rate_ci},
                             {"crlb_theta_mean", r.crlb_theta_mean},
                             {"crlb_d_mean", r.crlb_d_mean},
                             {"crlb_theta_sqrt", r.crlb_theta_sqrt},
                             {"crlb_d_sqrt", r.crlb_d_sqrt},
                             {"power_mean", r.power_mean},
                             {"n", r.n}});
    return j;
}

inline std::vector<MethodStats> rows_from_json(const nlohmann::json& j)
{
    // Non-finite values are written as null.
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
    };
    std::vector<MethodStats> rows;
    for (const auto& e : j.at("rows")) {
        MethodStats r;
        r.method = e.at("method").get<std::string>();
        r.P = num(e.at("P"));
        r.rate_mean = num(e.at("rate_mean"));
        r.rate_ci = num(e.at("rate_ci"));
        r.crlb_theta_mean = num(e.at("crlb_theta_mean"));
        r.crlb_d_mean = num(e.at("crlb_d_mean"));
        r.crlb_theta_sqrt = num(e.at("crlb_theta_sqrt"));
        r.crlb_d_sqrt = num(e.at("crlb_d_sqrt"));
        r.power_mean = num(e.at("power_mean"));
        r.n = e.at("n").get<int>();
        rows.push_back(std::move(r));
    }
    return rows;
}

enum class ExportFormat { csv, json };

inline void export_table(const std::vector<MethodStats>& rows, const std::string& path, ExportFormat fmt,
                         const SimConfig* cfg = nullptr)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    if (fmt == ExportFormat::csv) f << format_csv(rows, cfg);
    else f << to_json(rows, cfg).dump(2) << "\n";
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<MethodStats> import_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    return rows_from_json(nlohmann::json::parse(f));
}

} // namespace isac
