// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "isac/baselines.hpp"
#include "isac/harness.hpp"

using namespace isac;

TEST(Genie, ZeroBudgetGivesZeroRate)
{
    SimConfig c;
    c.power_budget = 0.0;
    Rng r(1);
    EXPECT_EQ(genie_rate(init_vehicles(c, r), c), 0.0);
}

TEST(Genie, ScalarCaseIsOneBit)
{
    // K = 1, N_t = 1, alpha^2 P / sigma^2 = 1 => log2(2) = 1.
    SimConfig c;
    c.n_tx = 1;
    c.n_vehicles = 1;
    c.pathloss_exp = 0.0;
    c.pathloss_ref = 1.0;
    c.noise_vehicle = 1.0;
    c.power_budget = 1.0;
    EXPECT_DOUBLE_EQ(genie_rate({make_state(3.0, 4.0, 0.0)}, c), 1.0);
}

TEST(Genie, MatchesHighPrecisionOracle)
{
    // log2(1 + (P/K) N alpha0 d^-zeta / sigma^2), 40-digit arithmetic.
    SimConfig c;
    const double d[3] = {25.0, 32.02, 40.3};
    const double ref[3] = {4.909728438234525, 4.040876357970134, 3.263041561958579};
    std::vector<VehicleState> s;
    for (int k = 0; k < 3; ++k) {
        s.push_back(make_state(0.0, d[k], 0.0));
        EXPECT_NEAR(genie_user_rate(s.back(), c, 3), ref[k], 1e-12);
    }
    EXPECT_NEAR(genie_rate(s, c), ref[0] + ref[1] + ref[2], 1e-11);
}

TEST(Genie, BeamformerAchievesTheFormulaWithoutInterference)
{
    SimConfig c;
    Rng r(2);
    auto s = init_vehicles(c, r);
    BeamformingMatrix W = genie_beamformer(s, c);
    EXPECT_NEAR(W.squaredNorm(), c.power_budget, 1e-12);
    const ChannelMatrix H = channel_matrix(s, c);
    for (int k = 0; k < 3; ++k) {
        const double snr = std::norm(H.col(k).dot(W.col(k))) / c.noise_vehicle;
        EXPECT_NEAR(std::log2(1 + snr), genie_user_rate(s[k], c, 3), 1e-10);
    }
}

TEST(Random, PowerAndMeanAlignment)
{
    SimConfig c;
    Rng r(3);
    const CVector a = steering(0.9, c.n_tx);
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        BeamformingMatrix W = random_beamformer(c, r);
        ASSERT_NEAR(W.squaredNorm(), c.power_budget, 1e-12);
        acc += std::norm(a.dot(W.col(0))) / W.col(0).squaredNorm();
    }
    // A uniform angle spreads |a^H w|^2 over roughly N beam widths: mean ~ 1/N.
    const double mean = acc / n;
    EXPECT_GT(mean, 1.0 / (3 * c.n_tx));
    EXPECT_LT(mean, 3.0 / c.n_tx);
}

TEST(Random, Reproducible)
{
    SimConfig c;
    Rng a(4), b(4);
    EXPECT_TRUE((random_beamformer(c, a).array() == random_beamformer(c, b).array()).all());
}

TEST(Naive, ZeroParametersGiveZeroBeams)
{
    SimConfig c;
    NaiveNet net(3, 32);
    auto data = generate_dataset(c, 4, 5);
    net.fit_normalization(data);
    std::vector<ObservationRecord> obs(3);
    for (auto& o : obs) {
        o.theta_hat = 0.9;
        o.d_hat = 25.0;
    }
    EXPECT_EQ(naive_dl_beamformer(obs, net, c).norm(), 0.0);
}

TEST(Naive, UntrainedOrMismatchedRejected)
{
    SimConfig c;
    NaiveNet net = NaiveNet::create(3, 32, 1.0, 6);
    std::vector<ObservationRecord> obs(3);
    EXPECT_THROW(naive_dl_beamformer(obs, net, c), std::invalid_argument);
    net.set_normalization(Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6));
    EXPECT_NO_THROW(naive_dl_beamformer(obs, net, c));
    obs.pop_back();
    EXPECT_THROW(naive_dl_beamformer(obs, net, c), std::invalid_argument);
}

TEST(Naive, UsesOnlyTheNewestEstimates)
{
    SimConfig c;
    auto data = generate_dataset(c, 2, 7);
    NaiveNet net = NaiveNet::create(3, 32, 1.0, 7);
    net.fit_normalization(data);
    nn::HistoryWindow w = data[0].history;
    const Eigen::VectorXd f = net.raw_features(w);
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(f[2 * k], w.theta_hat.back()[k]);
        EXPECT_EQ(f[2 * k + 1], w.d_hat.back()[k]);
    }
    w.theta_hat.front().setConstant(0.1);
    w.slots.front().setZero();
    EXPECT_TRUE((net.raw_features(w).array() == f.array()).all());
}
