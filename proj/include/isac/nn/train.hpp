// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/config.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/loss.hpp"
#include "isac/nn/params.hpp"
#include "isac/rng.hpp"

namespace isac::nn {

using ExampleSpan = std::span<const TrainingExample* const>;

/// What the training loop needs from a network: a batched forward pass with
/// a cache, and a backward pass that accumulates a flat parameter gradient.
template <class Net>
concept BeamformingNet = requires(const Net& cn, Net& n, ExampleSpan batch, typename Net::Cache* cache,
                                  const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) {
    { cn.forward_examples(batch, cache) } -> std::same_as<Eigen::MatrixXd>;
    cn.backward_batch(*cache, d_out, grad);
    { n.params() } -> std::same_as<NetworkParams&>;
};

inline constexpr std::size_t kChunk = 256;

template <BeamformingNet Net>
Eigen::MatrixXd forward_all(const Net& net, ExampleSpan batch)
{
    if (batch.size() <= kChunk) return net.forward_examples(batch, nullptr);
    Eigen::MatrixXd out;
    for (std::size_t s = 0; s < batch.size(); s += kChunk) {
        auto part = batch.subspan(s, std::min(kChunk, batch.size() - s));
        Eigen::MatrixXd o = net.forward_examples(part, nullptr);
        if (out.size() == 0) out.resize(o.rows(), static_cast<Eigen::Index>(batch.size()));
        out.middleCols(static_cast<Eigen::Index>(s), o.cols()) = o;
    }
    return out;
}

template <BeamformingNet Net>
LossBreakdown penalty_loss(ExampleSpan batch, const Net& net, const SimConfig& cfg)
{
    return penalty_loss_outputs(forward_all(net, batch), batch, cfg);
}

struct GradientResult {
    LossBreakdown loss;
    Eigen::VectorXd grad;
};

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact gradient of penalty_loss with respect to the flat parameter vector.
/// The CRLB penalties couple all examples through the batch mean, so large
/// batches take two passes: outputs first, then chunked backward sweeps.
template <BeamformingNet Net>
GradientResult gradient(ExampleSpan batch, const Net& net, const SimConfig& cfg)
{
    GradientResult r;
    r.grad = Eigen::VectorXd::Zero(net.params().size());
    Eigen::MatrixXd d_out;
    if (batch.size() <= kChunk) {
        typename Net::Cache cache;
        Eigen::MatrixXd out = net.forward_examples(batch, &cache);
        r.loss = penalty_loss_outputs(out, batch, cfg, &d_out);
        if (!std::isfinite(r.loss.total)) throw NonFiniteLoss("gradient: loss is not finite");
        net.backward_batch(cache, d_out, r.grad);
        return r;
    }
    r.loss = penalty_loss_outputs(forward_all(net, batch), batch, cfg, &d_out);
    if (!std::isfinite(r.loss.total)) throw NonFiniteLoss("gradient: loss is not finite");
    for (std::size_t s = 0; s < batch.size(); s += kChunk) {
        auto part = batch.subspan(s, std::min(kChunk, batch.size() - s));
        typename Net::Cache cache;
        net.forward_examples(part, &cache);
        net.backward_batch(cache, d_out.middleCols(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(part.size())),
                           r.grad);
    }
    return r;
}

enum class Optimizer { sgd, adam };

inline Optimizer optimizer_from_string(const std::string& s)
{
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd|adam)");
}

struct TrainHyper {
    double lr = 1e-3;
    int batch_size = 64;
    int max_iters = 3000;
    std::uint32_t seed = 1;
    Optimizer optimizer = Optimizer::adam;
    double momentum = 0.0; // sgd only
    double lr_decay = 1.0; // lr multiplier applied at the end of every epoch
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace))
    {
    }
    [[nodiscard]] const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

template <class Net>
struct TrainResult {
    Net net;
    std::vector<double> loss_trace; // mini-batch loss before each update
};

using TrainCallback = std::function<void(int iter, const LossBreakdown&)>;

/// Mini-batch descent on the penalized cost for hyper.max_iters iterations.
/// Batches walk a fresh permutation of the data each epoch; with
/// batch_size >= |data| every iteration is full-batch in dataset order.
template <BeamformingNet Net>
TrainResult<Net> train(Net net, const std::vector<TrainingExample>& data, const SimConfig& cfg,
                       const TrainHyper& hyper, const TrainCallback& on_iter = {})
{
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (hyper.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    TrainResult<Net> res{std::move(net), {}};
    Eigen::VectorXd& theta = res.net.params().flat_view();
    const Eigen::Index P = theta.size();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(P), m2 = Eigen::VectorXd::Zero(P);

    const std::size_t N = data.size();
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(hyper.batch_size), N);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(hyper.seed);
    std::size_t cursor = N; // forces a shuffle on the first mini-batch
    std::vector<const TrainingExample*> batch(bs);
    double lr = hyper.lr;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int it = 0; it < hyper.max_iters; ++it) {
        if (bs == N) {
            for (std::size_t i = 0; i < N; ++i) batch[i] = &data[i];
        } else {
            if (cursor + bs > N) {
                if (it > 0) lr *= hyper.lr_decay;
                for (std::size_t i = N - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint32_t>(i + 1))]);
                cursor = 0;
            }
            for (std::size_t i = 0; i < bs; ++i) batch[i] = &data[order[cursor + i]];
            cursor += bs;
        }
        GradientResult g;
        try {
            g = gradient(ExampleSpan(batch), res.net, cfg);
        } catch (const NonFiniteLoss&) {
            throw TrainingDiverged("train: loss became non-finite at iteration " + std::to_string(it), res.loss_trace);
        }
        res.loss_trace.push_back(g.loss.total);
        if (on_iter) on_iter(it, g.loss);
        if (!g.grad.allFinite())
            throw TrainingDiverged("train: gradient became non-finite at iteration " + std::to_string(it), res.loss_trace);

        if (hyper.optimizer == Optimizer::sgd) {
            if (hyper.momentum > 0.0) {
                m1 = hyper.momentum * m1 + g.grad;
                theta -= lr * m1;
            } else {
                theta -= lr * g.grad;
            }
        } else {
            m1 = b1 * m1 + (1.0 - b1) * g.grad;
            m2 = b2 * m2 + (1.0 - b2) * g.grad.cwiseProduct(g.grad);
            const double c1 = 1.0 - std::pow(b1, it + 1), c2 = 1.0 - std::pow(b2, it + 1);
            theta.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
        }
    }
    return res;
}

} // namespace isac::nn
