// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isac/baselines.hpp"
#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/harness.hpp"
#include "isac/io.hpp"
#include "isac/nn/train.hpp"
#include "isac/sensing.hpp"

namespace isac::cli {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline ExportFormat format_for(const std::string& path)
{
    return ends_with(path, ".json") ? ExportFormat::json : ExportFormat::csv;
}

inline std::vector<double> parse_grid(const std::string& s)
{
    std::vector<double> g;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) g.push_back(isac::detail::parse_double("power-grid", isac::detail::trim(item)));
    if (g.empty()) throw ConfigError("power-grid: empty list");
    return g;
}

struct TrainArgs {
    int iters = 3000;
    double lr = 1e-3;
    int batch = 64;
    std::string optimizer = "adam";
    double momentum = 0.9;

    void add_to(CLI::App* sub)
    {
        sub->add_option("--iters", iters, "Training iterations")->check(CLI::NonNegativeNumber);
        sub->add_option("--lr", lr, "Step size")->check(CLI::NonNegativeNumber);
        sub->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
        sub->add_option("--optimizer", optimizer, "adam or sgd");
        sub->add_option("--momentum", momentum, "Momentum for sgd");
    }

    [[nodiscard]] nn::TrainHyper hyper(std::uint32_t seed) const
    {
        nn::TrainHyper h;
        h.max_iters = iters;
        h.lr = lr;
        h.batch_size = batch;
        h.seed = seed;
        h.optimizer = nn::optimizer_from_string(optimizer);
        h.momentum = h.optimizer == nn::Optimizer::sgd ? momentum : 0.0;
        return h;
    }
};

inline void print_rows(std::ostream& out, const std::vector<MethodStats>& rows)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-9s %8s %12s %10s %14s %14s %8s\n", "method", "P", "rate", "ci95", "sqrt_crlb_th",
                  "sqrt_crlb_d", "power");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-9s %8.3g %12.6g %10.3g %14.6g %14.6g %8.4g\n", r.method.c_str(), r.P,
                      r.rate_mean, r.rate_ci, r.crlb_theta_sqrt, r.crlb_d_sqrt, r.power_mean);
        out << buf;
    }
}

} // namespace detail

/// Entry point of the isac tool. Returns the process exit status.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr)
{
    CLI::App app{"Predictive ISAC beamforming simulator"};
    app.name("isac");
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint32_t> seed;
    std::optional<std::string> theta_mode;
    app.add_option("--config", config_path, "Key-value configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "Override one configuration key (key=value); repeatable");
    app.add_option("--seed", seed, "Master seed (overrides rng_seed)");
    app.add_option("--theta-mode", theta_mode, "Angle estimate model: relative or crlb")
        ->check(CLI::IsMember({"relative", "crlb"}));

    detail::TrainArgs targs;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate an offline training set");
    int gen_examples = 2000;
    std::string gen_out;
    gen->add_option("--examples", gen_examples, "Number of examples")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Dataset file")->required();

    // train
    auto* trn = app.add_subcommand("train", "Train the HCL-Net or the naive baseline");
    std::string trn_data, trn_out, trn_net = "hcl", trn_trace;
    int trn_examples = 2000;
    trn->add_option("--data", trn_data, "Dataset file (generated on the fly if omitted)");
    trn->add_option("--examples", trn_examples, "Examples to generate when --data is omitted")->check(CLI::PositiveNumber);
    trn->add_option("--net", trn_net, "hcl or naive")->check(CLI::IsMember({"hcl", "naive"}));
    trn->add_option("--out", trn_out, "Model file")->required();
    trn->add_option("--trace", trn_trace, "Write the loss trace (one value per line)");
    targs.add_to(trn);

    // eval
    auto* ev = app.add_subcommand("eval", "Monte-Carlo evaluation of all methods");
    std::string ev_model, ev_naive, ev_out, ev_methods;
    int ev_real = 500;
    bool ev_project = false;
    ev->add_option("--model", ev_model, "HCL-Net model file");
    ev->add_option("--naive-model", ev_naive, "Naive DL model file");
    ev->add_option("--methods", ev_methods, "Comma-separated subset of hcl_net,naive_dl,random,genie");
    ev->add_option("--realizations", ev_real, "Monte-Carlo realizations")->check(CLI::PositiveNumber);
    ev->add_option("--out", ev_out, "Result table (.csv or .json)");
    ev->add_flag("--project-power", ev_project, "Project network beams onto the power budget");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Evaluate over a grid of power budgets");
    std::string sw_grid, sw_model, sw_naive, sw_out, sw_mode = "transfer";
    int sw_real = 500, sw_examples = 2000;
    bool sw_project = false;
    sw->add_option("--power-grid", sw_grid, "Comma-separated budgets in W (default 0.1,0.2,0.5,1,2,5,10)");
    sw->add_option("--mode", sw_mode, "transfer (reuse --model) or retrain (train per budget)")
        ->check(CLI::IsMember({"transfer", "retrain"}));
    sw->add_option("--model", sw_model, "HCL-Net model file (transfer mode)");
    sw->add_option("--naive-model", sw_naive, "Naive DL model file (transfer mode)");
    sw->add_option("--examples", sw_examples, "Training examples per budget (retrain mode)")->check(CLI::PositiveNumber);
    sw->add_option("--realizations", sw_real, "Monte-Carlo realizations per budget")->check(CLI::PositiveNumber);
    sw->add_option("--out", sw_out, "Result table (.csv or .json)");
    sw->add_flag("--project-power", sw_project, "Project network beams onto the power budget");
    targs.add_to(sw);

    // crlb
    auto* cr = app.add_subcommand("crlb", "Closed-form CRLBs for one aligned beam");
    double cr_theta = 0.0, cr_dist = 0.0, cr_power = 1.0;
    cr->add_option("--theta", cr_theta, "Angle [rad]")->required();
    cr->add_option("--dist", cr_dist, "Distance [m]")->required()->check(CLI::PositiveNumber);
    cr->add_option("--power", cr_power, "Beam power [W]")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    SimConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config_file(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (seed) cfg.rng_seed = *seed;
        if (theta_mode) cfg.theta_mode = theta_mode_from_string(*theta_mode);
        cfg.validate();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }
    const auto base_seed = static_cast<std::uint32_t>(cfg.rng_seed);

    try {
        if (*gen) {
            auto data = generate_dataset(cfg, gen_examples, base_seed);
            io::save_dataset(gen_out, data, cfg);
            out << "wrote " << data.size() << " examples to " << gen_out << " (fnv1a "
                << io::hex64(io::dataset_hash(data, cfg)) << ")\n";
            return 0;
        }

        if (*trn) {
            std::vector<nn::TrainingExample> data;
            if (!trn_data.empty()) {
                auto ld = io::load_dataset(trn_data);
                data = std::move(ld.examples);
            } else {
                data = generate_dataset(cfg, trn_examples, base_seed);
            }
            const nn::TrainHyper h = targs.hyper(base_seed);
            std::vector<double> trace;
            if (trn_net == "hcl") {
                auto res = train_hcl(data, cfg, h);
                io::save_model(trn_out, res.net, cfg, cfg.power_budget);
                trace = std::move(res.loss_trace);
            } else {
                auto res = train_naive(data, cfg, h);
                io::save_model(trn_out, res.net, cfg, cfg.power_budget);
                trace = std::move(res.loss_trace);
            }
            if (!trn_trace.empty()) {
                std::ofstream f(trn_trace);
                if (!f) throw std::runtime_error("cannot open '" + trn_trace + "' for writing");
                for (double v : trace) f << format_g9(v) << "\n";
            }
            out << "trained " << trn_net << " for " << trace.size() << " iterations";
            if (!trace.empty()) out << ", final loss " << format_g9(trace.back());
            out << "; wrote " << trn_out << "\n";
            return 0;
        }

        if (*ev) {
            if (ev_model.empty()) {
                err << "error: eval: model file required (--model)\n";
                return 2;
            }
            auto hcl = io::load_hcl(ev_model);
            std::optional<io::LoadedNaive> naive;
            if (!ev_naive.empty()) naive = io::load_naive(ev_naive);
            std::vector<Method> methods;
            if (ev_methods.empty()) {
                methods.push_back(Method::hcl_net);
                if (naive) methods.push_back(Method::naive_dl);
                methods.push_back(Method::random);
                methods.push_back(Method::genie);
            } else {
                std::stringstream ss(ev_methods);
                std::string m;
                while (std::getline(ss, m, ',')) methods.push_back(method_from_string(isac::detail::trim(m)));
            }
            Models models{&hcl.net, naive ? &naive->net : nullptr, ev_project, 1.0};
            EvalReport rep = monte_carlo_eval(cfg, methods, models, ev_real, base_seed);
            detail::print_rows(out, rep.rows);
            if (!ev_out.empty()) export_table(rep.rows, ev_out, detail::format_for(ev_out), &cfg);
            return 0;
        }

        if (*sw) {
            const std::vector<double> grid = sw_grid.empty() ? default_power_grid() : detail::parse_grid(sw_grid);
            std::vector<Method> methods;
            ModelProvider provider;
            // Models live here for the duration of the sweep.
            std::optional<io::LoadedHcl> hcl;
            std::optional<io::LoadedNaive> naive;
            std::vector<std::unique_ptr<nn::HclNet>> hcl_per_p;
            std::vector<std::unique_ptr<NaiveNet>> naive_per_p;
            if (sw_mode == "transfer") {
                if (sw_model.empty()) {
                    err << "error: sweep: model file required (--model) in transfer mode\n";
                    return 2;
                }
                hcl = io::load_hcl(sw_model);
                if (!sw_naive.empty()) naive = io::load_naive(sw_naive);
                provider = [&](double P) {
                    return Models{&hcl->net, naive ? &naive->net : nullptr, sw_project, std::sqrt(P / hcl->p_train)};
                };
                methods = {Method::hcl_net};
                if (naive) methods.push_back(Method::naive_dl);
            } else {
                provider = [&](double P) {
                    SimConfig c = cfg;
                    c.power_budget = P;
                    auto data = generate_dataset(c, sw_examples, base_seed);
                    const nn::TrainHyper h = targs.hyper(base_seed);
                    hcl_per_p.push_back(std::make_unique<nn::HclNet>(train_hcl(data, c, h).net));
                    naive_per_p.push_back(std::make_unique<NaiveNet>(train_naive(data, c, h).net));
                    return Models{hcl_per_p.back().get(), naive_per_p.back().get(), sw_project, 1.0};
                };
                methods = {Method::hcl_net, Method::naive_dl};
            }
            methods.push_back(Method::random);
            methods.push_back(Method::genie);
            auto rows = power_sweep(cfg, grid, methods, provider, sw_real, base_seed);
            detail::print_rows(out, rows);
            if (!sw_out.empty()) {
                SimConfig echo = cfg;
                export_table(rows, sw_out, detail::format_for(sw_out), &echo);
            }
            return 0;
        }

        if (*cr) {
            VehicleState s = make_state(cr_dist * std::cos(cr_theta), cr_dist * std::sin(cr_theta), 0.0);
            const CVector w = std::sqrt(cr_power) * steering(cr_theta, cfg.n_tx);
            const FisherInfo fi = fisher_information(s, w, cfg);
            out << "crlb_theta=" << format_g9(fi.crlb_theta) << " rad^2\n";
            out << "crlb_d=" << format_g9(fi.crlb_d) << " m^2\n";
            out << "sqrt_crlb_theta=" << format_g9(std::sqrt(fi.crlb_theta)) << " rad\n";
            out << "sqrt_crlb_d=" << format_g9(std::sqrt(fi.crlb_d)) << " m\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace isac::cli
