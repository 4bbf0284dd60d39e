// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "isac/channel.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

// Scalar re-implementation of the SINR definition, one term at a time.
double sinr_oracle(const ChannelMatrix& H, const BeamformingMatrix& W, int k, double s2)
{
    auto inner = [&](int j) {
        std::complex<double> acc = 0.0;
        for (int m = 0; m < H.rows(); ++m) acc += std::conj(H(m, k)) * W(m, j);
        return std::norm(acc);
    };
    double interf = 0.0;
    for (int j = 0; j < W.cols(); ++j)
        if (j != k) interf += inner(j);
    return inner(k) / (interf + s2);
}

BeamformingMatrix random_w(Rng& r, int M, int K, double scale)
{
    BeamformingMatrix W(M, K);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < M; ++m) W(m, k) = scale * cplx(r.normal(), r.normal());
    return W;
}

} // namespace

TEST(Steering, Broadside)
{
    CVector a = steering(std::numbers::pi / 2, 4);
    for (int m = 0; m < 4; ++m) {
        EXPECT_NEAR(a[m].real(), 0.5, 1e-15);
        EXPECT_NEAR(a[m].imag(), 0.0, 1e-15);
    }
}

TEST(Steering, SingleElementAndEndfire)
{
    EXPECT_EQ(steering(0.7, 1)[0], cplx(1.0, 0.0));
    CVector a = steering(0.0, 2);
    EXPECT_NEAR(a[0].real(), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(a[1].real(), -1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(a[1].imag(), 0.0, 1e-15);
}

TEST(Steering, UnitNormAndEntryMagnitude)
{
    Rng r(1);
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(r.below(64));
        CVector a = steering(r.uniform(0, std::numbers::pi), n);
        EXPECT_NEAR(a.norm(), 1.0, 1e-13);
        for (int m = 0; m < n; ++m) EXPECT_NEAR(std::abs(a[m]), 1 / std::sqrt(double(n)), 1e-14);
    }
}

TEST(Steering, DerivativeMatchesFiniteDifference)
{
    const double th = 0.8, h = 1e-6;
    CVector fd = (steering(th + h, 32) - steering(th - h, 32)) / (2 * h);
    EXPECT_LT((fd - steering_dtheta(th, 32)).norm() / fd.norm(), 1e-8);
}

TEST(Steering, AsymptoticOrthogonality)
{
    Rng r(4);
    for (int i = 0; i < 2000; ++i) {
        const double c1 = r.uniform(-1, 1), c2 = r.uniform(-1, 1);
        // Phases wrap with period 2 in cos(theta), so separation is measured on that circle.
        const double sep = std::min(std::abs(c1 - c2), 2.0 - std::abs(c1 - c2));
        if (sep < 4.0 / 32) continue;
        const cplx g = steering(std::acos(c1), 32).dot(steering(std::acos(c2), 32));
        EXPECT_LE(std::abs(g), 0.35);
    }
    // Fixed separation: correlation shrinks with the array size.
    const double t1 = 0.9, t2 = 1.1;
    double prev = 1.0;
    for (int n : {16, 64, 256}) {
        const double g = std::abs(steering(t1, n).dot(steering(t2, n)));
        EXPECT_LT(g, prev);
        prev = g;
    }
}

TEST(PathLoss, ReferenceValues)
{
    SimConfig c;
    EXPECT_NEAR(path_loss_amp(1.0, c), 3.1622776601683794e-4, 1e-18);
    // 10^-3.5 * 25^-1.275 evaluated in 50-digit arithmetic.
    EXPECT_NEAR(path_loss_amp(25.0, c), 5.2194710000789455e-06, 1e-18);
    c.pathloss_exp = 0.0;
    EXPECT_DOUBLE_EQ(path_loss_amp(3.0, c), path_loss_amp(300.0, c));
    EXPECT_THROW(path_loss_amp(0.0, c), std::invalid_argument);
    EXPECT_THROW(path_loss_amp(-1.0, c), std::invalid_argument);
}

TEST(EffectiveChannel, Norms)
{
    SimConfig c;
    EXPECT_NEAR(effective_channel(0.9273, 25.0, c).norm(), 2.952e-5, 1e-8);
    c.n_tx = 1;
    CVector h = effective_channel(1.0, 1.0, c);
    EXPECT_NEAR(std::abs(h[0]), path_loss_amp(1.0, c), 1e-18);
    Rng r(2);
    c.n_tx = 32;
    for (int i = 0; i < 50; ++i) {
        const double d = r.uniform(5, 100);
        EXPECT_NEAR(effective_channel(r.uniform(0, 3), d, c).norm(), std::sqrt(32.0) * path_loss_amp(d, c),
                    1e-12 * path_loss_amp(d, c));
    }
}

TEST(Sinr, TrivialCases)
{
    CVector h = CVector::Ones(4);
    BeamformingMatrix W = BeamformingMatrix::Zero(4, 1);
    EXPECT_EQ(sinr(h, W, 0, 1.0), 0.0);
    W(0, 0) = 1.0; // |h^H w|^2 = 1
    EXPECT_DOUBLE_EQ(sinr(h, W, 0, 1.0), 1.0);
}

TEST(Sinr, OrthogonalInterfererHasNoEffect)
{
    Rng r(3);
    CVector h1(8);
    for (int m = 0; m < 8; ++m) h1[m] = cplx(r.normal(), r.normal());
    CVector w1(8), w2(8);
    for (int m = 0; m < 8; ++m) {
        w1[m] = cplx(r.normal(), r.normal());
        w2[m] = cplx(r.normal(), r.normal());
    }
    w2 -= h1 * (h1.dot(w2) / h1.squaredNorm()); // w2 orthogonal to h1
    BeamformingMatrix one(8, 1), two(8, 2);
    one.col(0) = w1;
    two.col(0) = w1;
    two.col(1) = w2;
    EXPECT_NEAR(sinr(h1, two, 0, 0.3), sinr(h1, one, 0, 0.3), 1e-12);
}

TEST(SumRate, TrivialCases)
{
    // Diagonal channel, unit gains, sigma^2 = 1 => every SINR = 1.
    ChannelMatrix H = ChannelMatrix::Identity(3, 3);
    EXPECT_DOUBLE_EQ(sum_rate(H, BeamformingMatrix::Identity(3, 3), 1.0), 3.0);
    EXPECT_DOUBLE_EQ(sum_rate(H, BeamformingMatrix::Zero(3, 3), 1.0), 0.0);
}

TEST(SumRate, MatchesScalarOracle)
{
    Rng r(8);
    for (int i = 0; i < 20; ++i) {
        ChannelMatrix H = random_w(r, 6, 3, 1.0);
        BeamformingMatrix W = random_w(r, 6, 3, 0.5);
        double ref = 0.0;
        for (int k = 0; k < 3; ++k) ref += std::log2(1.0 + sinr_oracle(H, W, k, 0.7));
        EXPECT_NEAR(sum_rate(H, W, 0.7), ref, 1e-12);
    }
}

TEST(SumRate, PhaseRotationInvariance)
{
    Rng r(9);
    ChannelMatrix H = random_w(r, 8, 3, 1.0);
    BeamformingMatrix W = random_w(r, 8, 3, 1.0);
    const double base = sum_rate(H, W, 0.1);
    for (int k = 0; k < 3; ++k) {
        BeamformingMatrix V = W;
        V.col(k) *= std::polar(1.0, r.uniform(0, 6.28));
        EXPECT_NEAR(sum_rate(H, V, 0.1), base, 1e-12);
    }
}

TEST(SumRate, SingleUserRateGrowsWithScale)
{
    Rng r(10);
    ChannelMatrix H = random_w(r, 8, 1, 1.0);
    BeamformingMatrix W = random_w(r, 8, 1, 1.0);
    double prev = sum_rate(H, W, 1.0);
    for (double c : {1.5, 2.0, 10.0}) {
        const double v = sum_rate(H, std::sqrt(c) * W, 1.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}
