// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "isac/baselines.hpp"
#include "isac/harness.hpp"
#include "isac/nn/data.hpp"
#include "isac/nn/hcl_net.hpp"
#include "isac/nn/loss.hpp"
#include "isac/nn/predict.hpp"
#include "isac/nn/tensor.hpp"
#include "isac/nn/train.hpp"

using namespace isac;
using namespace isac::nn;

namespace {

HistoryWindow random_window(Rng& r, int tau, int K, int M, double scale = 1.0)
{
    HistoryWindow w;
    for (int t = 0; t < tau; ++t) {
        ChannelMatrix H(M, K);
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m) H(m, k) = scale * cplx(r.normal(), r.normal());
        w.slots.push_back(H);
        w.theta_hat.push_back(Eigen::VectorXd::Constant(K, 1.0));
        w.d_hat.push_back(Eigen::VectorXd::Constant(K, 25.0));
    }
    return w;
}

void randomize(NetworkParams& p, Rng& r, double scale)
{
    for (Eigen::Index i = 0; i < p.size(); ++i) p.flat_view()[i] = scale * r.normal();
}

std::vector<const TrainingExample*> ptrs(const std::vector<TrainingExample>& d)
{
    std::vector<const TrainingExample*> v;
    for (const auto& e : d) v.push_back(&e);
    return v;
}

// Relative error with a floor tied to the gradient's overall scale, so
// coordinates whose true derivative is ~0 are compared absolutely.
double rel_err(double a, double n, double floor) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}); }

template <class Net>
double max_fd_error(Net net, const std::vector<TrainingExample>& data, const SimConfig& cfg, int coords,
                    std::uint32_t seed)
{
    auto batch = ptrs(data);
    const GradientResult g = gradient(ExampleSpan(batch), net, cfg);
    const double floor = 1e-6 * g.grad.cwiseAbs().maxCoeff();
    Rng r(seed);
    double worst = 0.0;
    auto& theta = net.params().flat_view();
    const double h = 1e-5;
    for (int i = 0; i < coords; ++i) {
        const auto j = static_cast<Eigen::Index>(r.below(static_cast<std::uint32_t>(theta.size())));
        const double keep = theta[j];
        theta[j] = keep + h;
        const double fp = penalty_loss(ExampleSpan(batch), net, cfg).total;
        theta[j] = keep - h;
        const double fm = penalty_loss(ExampleSpan(batch), net, cfg).total;
        theta[j] = keep;
        worst = std::max(worst, rel_err(g.grad[j], (fp - fm) / (2 * h), floor));
    }
    return worst;
}

SimConfig penalty_active_config()
{
    SimConfig c;
    c.gamma_theta = 1e-18;
    c.gamma_d = 1e-12;
    c.power_budget = 0.05;
    c.lambda1 = 1e30;
    c.lambda2 = 1e18;
    return c;
}

} // namespace

// ---- tensor / input mapping -------------------------------------------------

TEST(Tensor, ShapeInvariants)
{
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    t(std::initializer_list<std::size_t>{1, 2, 3}) = 5.0;
    EXPECT_EQ(t.data.back(), 5.0);
    t.zero_grad();
    EXPECT_NO_THROW(t.check_invariants());
    t.data.pop_back();
    EXPECT_THROW(t.check_invariants(), std::logic_error);
    EXPECT_THROW(t.offset({0, 3, 0}), std::out_of_range);
}

TEST(MapInput, ZeroAndRealChannels)
{
    Rng r(1);
    HistoryWindow w = random_window(r, 5, 3, 32);
    for (auto& H : w.slots) H.setZero();
    Tensor t = map_input(w, 5);
    EXPECT_TRUE(std::all_of(t.data.begin(), t.data.end(), [](double x) { return x == 0.0; }));
    w = random_window(r, 5, 3, 32);
    for (auto& H : w.slots) H = H.real().cast<cplx>();
    t = map_input(w, 5);
    for (std::size_t i = 1; i < t.size(); i += 2) EXPECT_EQ(t.data[i], 0.0);
}

TEST(MapInput, RoundTripAndScaling)
{
    Rng r(2);
    HistoryWindow w = random_window(r, 5, 3, 32, 1e-5);
    Tensor t = map_input(w, 5);
    EXPECT_EQ(t.shape, (std::vector<std::size_t>{5, 3, 32, 2}));
    HistoryWindow back = unmap_input(t);
    for (int s = 0; s < 5; ++s) EXPECT_TRUE((back.slots[s].array() == w.slots[s].array()).all());
    EXPECT_EQ(t(std::initializer_list<std::size_t>{2, 1, 7, 1}), w.slots[2](7, 1).imag());
    Tensor s = map_input(w, 5, 1e5);
    EXPECT_NEAR(s.data[10], 1e5 * t.data[10], 1e-12);
    EXPECT_THROW(map_input(w, 4), std::invalid_argument);
}

// ---- shapes -----------------------------------------------------------------

TEST(HclShape, TableSizes)
{
    HclShape s; // K=3, M=32, tau=5
    EXPECT_EQ(s.flatten(), 32);
    EXPECT_EQ(s.lstm_input(), 96);
    EXPECT_EQ(s.hidden, 64);
    EXPECT_EQ(s.output(), 3 * 32 * 2);
    EXPECT_EQ(s.layout().total(), 4 * 18 + 4 + 256 * 96 + 256 * 64 + 256 + 192 * 64 + 192);
    EXPECT_EQ(HclNet(s, 1.0).params().size(), 53772);
    HclShape bad;
    bad.n_antennas = 12;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

// ---- CNN ----------------------------------------------------------------------

TEST(Cnn, ZeroInputZeroBiasGivesZero)
{
    HclShape s;
    HclNet net = HclNet::create(s, 1.0, 1.0, 3);
    net.params().mat("conv_b").setZero();
    Tensor out = cnn_forward(Tensor({32, 2}), net.params(), s);
    ASSERT_EQ(out.size(), 32u);
    for (double v : out.data) EXPECT_EQ(v, 0.0);
}

TEST(Cnn, ImpulseResponseByHand)
{
    // Impulse of height 1 at grid cell (1, 1) (antenna 9), real plane.
    HclShape s;
    HclNet net(s, 1.0);
    auto w = net.params().mat("conv_w");
    w(0, nn::detail::tap_index(1, 1, 0)) = 1.0; // centre tap: identity
    w(1, nn::detail::tap_index(0, 2, 0)) = 2.0; // output (r, c) reads input (r-1, c+1)
    w(2, nn::detail::tap_index(1, 1, 1)) = 3.0; // looks only at the imaginary plane
    Tensor x({32, 2});
    x.data[9 * 2 + 0] = 1.0;
    Tensor out = cnn_forward(x, net.params(), s);
    // Filter 0 fires at (1,1) -> pooled (0,0); filter 1 fires at (2,0) -> pooled (1,0).
    std::vector<double> expect(32, 0.0);
    expect[(0 * 4 + 0) * 4 + 0] = 1.0;
    expect[(1 * 4 + 0) * 4 + 1] = 2.0;
    for (int i = 0; i < 32; ++i) EXPECT_EQ(out.data[i], expect[i]) << i;
}

TEST(Cnn, RejectsWrongSlice) { EXPECT_THROW(cnn_forward(Tensor({16, 2}), HclNet(HclShape{}, 1.0).params(), HclShape{}), std::invalid_argument); }

// ---- LSTM ---------------------------------------------------------------------

TEST(Lstm, ZeroWeightsGiveZeroState)
{
    HclShape s;
    HclNet net(s, 1.0);
    auto [h, c] = lstm_step(Eigen::VectorXd::Ones(96), Eigen::VectorXd::Zero(64), Eigen::VectorXd::Zero(64),
                            net.params(), s);
    EXPECT_EQ(h.norm(), 0.0);
    EXPECT_EQ(c.norm(), 0.0);
}

TEST(Lstm, SaturatedForgetGateCarriesCell)
{
    HclShape s;
    HclNet net(s, 1.0);
    net.params().mat("lstm_b").block(64, 0, 64, 1).setConstant(1e3);
    Rng r(4);
    Eigen::VectorXd c0 = Eigen::VectorXd::NullaryExpr(64, [&] { return r.normal(); });
    auto [h, c] = lstm_step(Eigen::VectorXd::Ones(96), Eigen::VectorXd::Zero(64), c0, net.params(), s);
    EXPECT_LT((c - c0).norm(), 1e-12);
}

TEST(Lstm, MatchesScalarGateEquations)
{
    HclShape s;
    s.hidden = 5;
    s.n_vehicles = 1;
    s.n_antennas = 8; // lstm input = 4 filters x 2 x 1 pooled cells = 8
    HclNet net(s, 1.0);
    Rng r(5);
    randomize(net.params(), r, 0.5);
    Eigen::VectorXd x(8), h0(5), c0(5);
    for (int i = 0; i < 8; ++i) x[i] = r.normal();
    for (int i = 0; i < 5; ++i) {
        h0[i] = r.normal();
        c0[i] = r.normal();
    }
    auto [h, c] = lstm_step(x, h0, c0, net.params(), s);
    const auto wx = net.params().mat("lstm_wx");
    const auto wh = net.params().mat("lstm_wh");
    const auto b = net.params().mat("lstm_b");
    auto sig = [](double z) { return 1 / (1 + std::exp(-z)); };
    for (int u = 0; u < 5; ++u) {
        auto pre = [&](int g) {
            return b(g * 5 + u, 0) + (wx.row(g * 5 + u) * x)(0) + (wh.row(g * 5 + u) * h0)(0);
        };
        const double cu = sig(pre(1)) * c0[u] + sig(pre(0)) * std::tanh(pre(3));
        EXPECT_NEAR(c[u], cu, 1e-14);
        EXPECT_NEAR(h[u], sig(pre(2)) * std::tanh(cu), 1e-14);
    }
}

// ---- full forward --------------------------------------------------------------

TEST(Forward, ZeroParamsGiveZeroBeams)
{
    HclNet net(HclShape{}, 1.0);
    Rng r(6);
    BeamformingMatrix W = net.forward(random_window(r, 5, 3, 32));
    EXPECT_EQ(W.rows(), 32);
    EXPECT_EQ(W.cols(), 3);
    EXPECT_EQ(W.norm(), 0.0);
}

TEST(Forward, BatchedPathMatchesReference)
{
    HclNet net = HclNet::create(HclShape{}, 3.0, 1.0, 7);
    Rng r(7);
    std::vector<HistoryWindow> ws;
    for (int i = 0; i < 4; ++i) ws.push_back(random_window(r, 5, 3, 32));
    std::vector<const HistoryWindow*> p;
    for (auto& w : ws) p.push_back(&w);
    Eigen::MatrixXd out = net.forward_batch(p);
    ASSERT_EQ(out.rows(), 192);
    for (int i = 0; i < 4; ++i) EXPECT_LT((out.col(i) - net.forward_reference(ws[i])).norm(), 1e-12 * out.col(i).norm());
}

TEST(Forward, DeterministicAndOutputLayout)
{
    HclNet net = HclNet::create(HclShape{}, 2.0, 1.0, 8);
    Rng r(8);
    HistoryWindow w = random_window(r, 5, 3, 32);
    BeamformingMatrix a = net.forward(w), b = net.forward(w);
    EXPECT_TRUE((a.array() == b.array()).all());
    Eigen::VectorXd raw = net.forward_reference(w);
    ASSERT_EQ(raw.size(), 3 * 32 * 2);
    EXPECT_NEAR(a(5, 2).real(), raw[2 * (2 * 32 + 5)], 1e-13);
    EXPECT_NEAR(a(5, 2).imag(), raw[2 * (2 * 32 + 5) + 1], 1e-13);
}

TEST(Forward, VehiclePermutationPermutesLstmInputBlocks)
{
    // Swapping vehicles 0 and 2 in the input is undone by swapping the
    // matching 32-column blocks of the LSTM input weights.
    HclNet net = HclNet::create(HclShape{}, 1.0, 1.0, 9);
    Rng r(9);
    HistoryWindow w = random_window(r, 5, 3, 32);
    HistoryWindow p = w;
    for (auto& H : p.slots) H.col(0).swap(H.col(2));
    HclNet q = net;
    auto wx = q.params().mat("lstm_wx");
    wx.middleCols(0, 32).swap(wx.middleCols(64, 32));
    EXPECT_LT((q.forward_reference(p) - net.forward_reference(w)).norm(), 1e-12);
}

// ---- loss ---------------------------------------------------------------------

TEST(Loss, ZeroBeamsSaturateAtCap)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 4, 1);
    HclNet net(hcl_shape(cfg), 1.0);
    auto b = ptrs(data);
    LossBreakdown L = penalty_loss(ExampleSpan(b), net, cfg);
    EXPECT_EQ(L.sum_rate, 0.0);
    EXPECT_DOUBLE_EQ(L.crlb_theta, cfg.crlb_theta_cap());
    EXPECT_DOUBLE_EQ(L.crlb_d, cfg.crlb_d_cap());
    const double et = cfg.crlb_theta_cap() - cfg.gamma_theta, ed = cfg.crlb_d_cap() - cfg.gamma_d;
    EXPECT_DOUBLE_EQ(L.total, cfg.lambda1 * et * et + cfg.lambda2 * ed * ed);
    EXPECT_TRUE(std::isfinite(L.total));
}

TEST(Loss, SingleUserInactiveConstraints)
{
    SimConfig cfg;
    cfg.n_vehicles = 1;
    TrainingExample ex;
    ex.true_thetas = Eigen::VectorXd::Constant(1, 0.9);
    ex.true_dists = Eigen::VectorXd::Constant(1, 25.0);
    ex.true_channels = effective_channel(0.9, 25.0, cfg);
    const CVector w = 0.5 * steering(0.92, cfg.n_tx);
    Eigen::MatrixXd out(64, 1);
    for (int m = 0; m < 32; ++m) {
        out(2 * m, 0) = w[m].real();
        out(2 * m + 1, 0) = w[m].imag();
    }
    const TrainingExample* p = &ex;
    LossBreakdown L = penalty_loss_outputs(out, ExampleSpan(&p, 1), cfg);
    EXPECT_EQ(L.penalty_theta + L.penalty_d + L.penalty_power, 0.0);
    const double g = std::norm(ex.true_channels.col(0).dot(w));
    EXPECT_NEAR(L.total, -std::log2(1 + g / cfg.noise_vehicle), 1e-12);
}

TEST(Loss, MatchesTermByTermEvaluation)
{
    SimConfig cfg = penalty_active_config();
    cfg.power_budget = 1e-6;
    auto data = generate_dataset(cfg, 3, 2);
    HclNet net = HclNet::create(hcl_shape(cfg), 1.0 / data[0].history.slots[0].col(0).norm(), 1.0, 2);
    auto b = ptrs(data);
    const LossBreakdown L = penalty_loss(ExampleSpan(b), net, cfg);
    double rate = 0.0, ct = 0.0, cd = 0.0, pw = 0.0;
    for (const auto& ex : data) {
        BeamformingMatrix W = net.forward(ex.history);
        for (int k = 0; k < 3; ++k) {
            rate += std::log2(1 + sinr(ex.true_channels.col(k), W, k, cfg.noise_vehicle));
            const FisherInfo fi = fisher_information(
                make_state(ex.true_dists[k] * std::cos(ex.true_thetas[k]), ex.true_dists[k] * std::sin(ex.true_thetas[k]), 0),
                W.col(k), cfg);
            ct += std::min(fi.crlb_theta, cfg.crlb_theta_cap());
            cd += std::min(fi.crlb_d, cfg.crlb_d_cap());
        }
        pw += std::pow(std::max(0.0, W.squaredNorm() - cfg.power_budget), 2);
    }
    const double B = 3.0;
    const double J = -rate / B + cfg.lambda1 * std::pow(std::max(0.0, ct / (B * 3) - cfg.gamma_theta), 2) +
                     cfg.lambda2 * std::pow(std::max(0.0, cd / (B * 3) - cfg.gamma_d), 2) + cfg.lambda3 * pw / B;
    EXPECT_NEAR(L.total / J, 1.0, 1e-9);
    EXPECT_GT(L.penalty_theta, 0.0);
    EXPECT_GT(L.penalty_d, 0.0);
    EXPECT_GT(L.penalty_power, 0.0);
}

TEST(Loss, ReluSquareEqualsMaxForm)
{
    for (double x : {-3.0, -1e-300, 0.0, 1e-300, 2.5}) EXPECT_EQ(relu(x) * relu(x), std::pow(std::max(0.0, x), 2));
}

// ---- gradients -------------------------------------------------------------------

TEST(Gradient, HclMatchesFiniteDifferences)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 6, 3);
    HclNet net = HclNet::create(hcl_shape(cfg), input_scale(data), cfg.power_budget, 3);
    EXPECT_LT(max_fd_error(net, data, cfg, 60, 11), 1e-4);
}

TEST(Gradient, HclMatchesFiniteDifferencesWithActivePenalties)
{
    SimConfig cfg = penalty_active_config();
    auto data = generate_dataset(cfg, 6, 4);
    HclNet net = HclNet::create(hcl_shape(cfg), input_scale(data), 1.0, 4);
    auto b = ptrs(data);
    const LossBreakdown L = penalty_loss(ExampleSpan(b), net, cfg);
    ASSERT_GT(L.penalty_theta, 0.0);
    ASSERT_GT(L.penalty_d, 0.0);
    ASSERT_GT(L.penalty_power, 0.0);
    EXPECT_LT(max_fd_error(net, data, cfg, 60, 12), 1e-4);
}

TEST(Gradient, NaiveMatchesFiniteDifferences)
{
    SimConfig cfg = penalty_active_config();
    auto data = generate_dataset(cfg, 6, 5);
    NaiveNet net = NaiveNet::create(3, 32, 1.0, 5);
    net.fit_normalization(data);
    EXPECT_LT(max_fd_error(net, data, cfg, 60, 13), 1e-4);
}

TEST(Gradient, ChunkedLargeBatchMatchesSinglePass)
{
    SimConfig cfg = penalty_active_config();
    auto data = generate_dataset(cfg, 300, 6);
    NaiveNet net = NaiveNet::create(3, 32, 1.0, 6);
    net.fit_normalization(data);
    auto b = ptrs(data);
    GradientResult whole = gradient(ExampleSpan(b), net, cfg);
    // Reference: accumulate per-example output gradients from one forward pass.
    NaiveNet::Cache cache;
    Eigen::MatrixXd out = net.forward_examples(ExampleSpan(b), &cache);
    Eigen::MatrixXd d_out;
    penalty_loss_outputs(out, ExampleSpan(b), cfg, &d_out);
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(net.params().size());
    net.backward_batch(cache, d_out, ref);
    EXPECT_LT((whole.grad - ref).norm(), 1e-10 * ref.norm());
}

TEST(Gradient, ZeroParametersAreStationary)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 4, 7);
    HclNet net(hcl_shape(cfg), 1.0);
    auto b = ptrs(data);
    EXPECT_EQ(gradient(ExampleSpan(b), net, cfg).grad.norm(), 0.0);
}

TEST(Gradient, PowerPenaltyAnalyticProbe)
{
    // Only the output bias is non-zero, so W is the bias itself; with a huge
    // receiver noise and no CRLB weight the gradient is the power term alone:
    // d/db_i lambda3 relu(||b||^2 - P)^2 = 4 lambda3 relu(||b||^2 - P) b_i.
    SimConfig cfg;
    cfg.noise_vehicle = 1e30;
    cfg.lambda1 = cfg.lambda2 = 0.0;
    auto data = generate_dataset(cfg, 2, 8);
    HclNet net(hcl_shape(cfg), 1.0);
    auto fb = net.params().mat("fc_b");
    for (Eigen::Index i = 0; i < fb.rows(); ++i) fb(i, 0) = 0.2 * std::sin(1.0 + i);
    const double excess = fb.squaredNorm() - cfg.power_budget;
    ASSERT_GT(excess, 0.0);
    auto b = ptrs(data);
    Eigen::VectorXd g = gradient(ExampleSpan(b), net, cfg).grad;
    auto gb = net.params().view(g, "fc_b");
    for (Eigen::Index i = 0; i < fb.rows(); ++i) EXPECT_NEAR(gb(i, 0), 4 * cfg.lambda3 * excess * fb(i, 0), 1e-9);
}

TEST(Gradient, NonFiniteLossRejected)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 2, 9);
    HclNet net = HclNet::create(hcl_shape(cfg), 1.0, 1.0, 9);
    net.params().mat("fc_b")(0, 0) = std::numeric_limits<double>::quiet_NaN();
    auto b = ptrs(data);
    EXPECT_THROW(gradient(ExampleSpan(b), net, cfg), NonFiniteLoss);
}

TEST(Gradient, SmallStepDecreasesLoss)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 8, 10);
    HclNet net = HclNet::create(hcl_shape(cfg), input_scale(data), 1.0, 10);
    auto b = ptrs(data);
    GradientResult g = gradient(ExampleSpan(b), net, cfg);
    net.params().flat_view() -= (1e-6 / g.grad.norm()) * g.grad;
    EXPECT_LT(penalty_loss(ExampleSpan(b), net, cfg).total, g.loss.total);
}

// ---- training -------------------------------------------------------------------

TEST(Train, FullBatchDescentReducesLoss)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 8, 11);
    TrainHyper h;
    h.optimizer = Optimizer::sgd;
    h.lr = 1e-4;
    h.batch_size = 8;
    h.max_iters = 11;
    auto res = train_hcl(data, cfg, h);
    ASSERT_EQ(res.loss_trace.size(), 11u);
    EXPECT_LT(res.loss_trace[10], res.loss_trace[0]);
}

TEST(Train, ZeroStepLeavesParametersUnchanged)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 8, 12);
    TrainHyper h;
    h.lr = 0.0;
    h.batch_size = 8;
    h.max_iters = 5;
    h.optimizer = Optimizer::sgd;
    HclNet init = HclNet::create(hcl_shape(cfg), input_scale(data), 1.0, h.seed);
    auto res = train(init, data, cfg, h);
    EXPECT_TRUE((res.net.params().flat_view().array() == init.params().flat_view().array()).all());
    for (double v : res.loss_trace) EXPECT_EQ(v, res.loss_trace[0]);
}

TEST(Train, SameSeedSameTrace)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 20, 13);
    TrainHyper h;
    h.batch_size = 6;
    h.max_iters = 8;
    auto a = train_hcl(data, cfg, h), b = train_hcl(data, cfg, h);
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    EXPECT_TRUE((a.net.params().flat_view().array() == b.net.params().flat_view().array()).all());
}

TEST(Train, DivergenceAbortsWithTrace)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 4, 14);
    TrainHyper h;
    h.optimizer = Optimizer::sgd;
    h.lr = 1e200;
    h.batch_size = 4;
    h.max_iters = 50;
    try {
        train_hcl(data, cfg, h);
        FAIL() << "expected divergence";
    } catch (const TrainingDiverged& e) {
        EXPECT_FALSE(e.trace().empty());
    }
}

TEST(Train, EmptyDatasetRejected)
{
    SimConfig cfg;
    EXPECT_THROW(train(HclNet(hcl_shape(cfg), 1.0), {}, cfg, TrainHyper{}), std::invalid_argument);
}

// ---- predict ----------------------------------------------------------------------

TEST(Predict, ProjectionAndPassThrough)
{
    SimConfig cfg;
    HclNet net = HclNet::create(hcl_shape(cfg), 1e5, 50.0, 15); // deliberately over budget
    Rng r(15);
    HistoryWindow w = random_window(r, 5, 3, 32, 1e-5);
    BeamformingMatrix raw = predict(w, net, cfg, false);
    EXPECT_TRUE((raw.array() == net.forward(w).array()).all());
    ASSERT_GT(raw.squaredNorm(), cfg.power_budget);
    BeamformingMatrix p = predict(w, net, cfg, true);
    EXPECT_LE(p.squaredNorm(), cfg.power_budget * (1 + 1e-12));
    EXPECT_NEAR(p.squaredNorm(), cfg.power_budget, 1e-12);
}

TEST(Predict, InputScaleIsInverseMedianNorm)
{
    SimConfig cfg;
    auto data = generate_dataset(cfg, 5, 16);
    std::vector<double> n;
    for (const auto& ex : data)
        for (const auto& H : ex.history.slots)
            for (int k = 0; k < 3; ++k) n.push_back(H.col(k).norm());
    std::sort(n.begin(), n.end());
    EXPECT_DOUBLE_EQ(input_scale(data), 1.0 / n[n.size() / 2]);
}
