#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "splitsde/errors.hpp"
#include "splitsde/periodic.hpp"
#include "splitsde/rng.hpp"

using namespace splitsde;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

// Trapezoid over one period with n nodes; the reference for Gram entries.
double quad(const std::function<double(double)>& f, double period, int n = 10000) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        s += f(period * j / n);
    }
    return s / n;
}

TrigPoly random_poly(CounterRng& rng, double period) {
    std::map<int, Complex> c;
    const int kmax = 1 + static_cast<int>(rng.uniform() * 4.0);
    for (int k = 1; k <= kmax; ++k) {
        c[k] = {rng.normal(), rng.normal()};
    }
    return TrigPoly(period, c);
}

} // namespace

// ============================================================ TrigPoly

TEST(TrigPoly, CosineAtZero) { EXPECT_DOUBLE_EQ(TrigPoly::cosine().eval(0.0), 1.0); }

TEST(TrigPoly, SineAtQuarterPeriod) { EXPECT_NEAR(TrigPoly::sine().eval(std::numbers::pi / 2), 1.0, 1e-15); }

TEST(TrigPoly, CompletesConjugatePartner) {
    const TrigPoly p(kTwoPi, {{2, {0.5, 0.0}}});
    EXPECT_EQ(p.coeff(-2), Complex(0.5, 0.0));
    EXPECT_NEAR(p.eval(0.3), std::cos(0.6), 1e-15);
}

TEST(TrigPoly, RejectsInconsistentPartner) {
    EXPECT_THROW(TrigPoly(kTwoPi, {{1, {1.0, 0.0}}, {-1, {2.0, 0.0}}}), Error);
}

TEST(TrigPoly, RejectsComplexMean) { EXPECT_THROW(TrigPoly(kTwoPi, {{0, {0.0, 1.0}}}), Error); }

TEST(TrigPoly, RejectsNonPositivePeriod) { EXPECT_THROW(TrigPoly(0.0, {}), Error); }

TEST(TrigPoly, MeanZeroIntegratesToZero) {
    const TrigPoly p = TrigPoly::cosine(2) + TrigPoly::sine(3, kTwoPi, 0.7);
    EXPECT_NEAR(quad([&](double t) { return p(t); }, kTwoPi), 0.0, 1e-12);
}

TEST(TrigPoly, GeneralPeriod) {
    const TrigPoly p = TrigPoly::cosine(1, 3.0);
    EXPECT_NEAR(p(1.5), -1.0, 1e-15);
    EXPECT_NEAR(p(3.0 + 0.2), p(0.2), 1e-14);
}

TEST(TrigPoly, DerivativeMatchesFiniteDifference) {
    const TrigPoly p = TrigPoly::cosine(2) + TrigPoly::sine(3);
    const double h = 1e-6;
    for (double t : {0.1, 1.3, 4.0}) {
        EXPECT_NEAR(p.derivative(t), (p(t + h) - p(t - h)) / (2 * h), 1e-8);
    }
}

TEST(TrigPoly, ComplexPolyNeedsEvalComplex) {
    const TrigPoly e(kTwoPi, {{1, {1.0, 0.0}}}, false);
    EXPECT_THROW((void)e.eval(0.0), Error);
    EXPECT_NEAR(std::abs(e.eval_complex(0.5) - std::exp(Complex(0.0, 0.5))), 0.0, 1e-15);
}

// ============================================================ antiderivative_mean_zero

TEST(Antiderivative, CosGivesSin) {
    const TrigPoly F = antiderivative_mean_zero(TrigPoly::cosine());
    for (double t : {0.0, 0.7, 2.0}) {
        EXPECT_NEAR(F(t), std::sin(t), 1e-15);
    }
}

TEST(Antiderivative, SinGivesMinusCos) {
    const TrigPoly F = antiderivative_mean_zero(TrigPoly::sine());
    for (double t : {0.0, 0.7, 2.0}) {
        EXPECT_NEAR(F(t), -std::cos(t), 1e-15);
    }
}

TEST(Antiderivative, MixedAgainstFiniteDifference) {
    const TrigPoly p = TrigPoly::cosine(2) + TrigPoly::sine(3);
    const TrigPoly F = antiderivative_mean_zero(p);
    const double h = 1e-4;
    for (double t = 0.0; t < kTwoPi; t += 0.37) {
        EXPECT_NEAR(F(t), std::sin(2 * t) / 2 - std::cos(3 * t) / 3, 1e-14);
        // Fourth-order central difference.
        const double d = (-F(t + 2 * h) + 8 * F(t + h) - 8 * F(t - h) + F(t - 2 * h)) / (12 * h);
        EXPECT_NEAR(d, p(t), 1e-10);
    }
}

TEST(Antiderivative, NonZeroMeanThrows) {
    try {
        (void)antiderivative_mean_zero(TrigPoly::constant(1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonZeroMean);
    }
}

// ============================================================ gram_matrix / psd_sqrt

TEST(Gram, CosSinIsHalfIdentity) {
    const std::vector<TrigPoly> p{antiderivative_mean_zero(TrigPoly::cosine()),
                                  antiderivative_mean_zero(TrigPoly::sine())};
    const CovarianceForm c = gram_matrix(p);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double ref = quad([&](double t) { return p[a](t) * p[b](t); }, kTwoPi);
            EXPECT_NEAR(c.matrix()(a, b), ref, 1e-10);
        }
    }
    EXPECT_NEAR((c.matrix() - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-12);
}

TEST(Gram, SingleSin) {
    const std::vector<TrigPoly> p{TrigPoly::sine()};
    const CovarianceForm c = gram_matrix(p);
    EXPECT_NEAR(c.matrix()(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(c.sqrt()(0, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Gram, EmptyList) {
    const CovarianceForm c = gram_matrix(std::vector<TrigPoly>{});
    EXPECT_EQ(c.matrix().rows(), 0);
    EXPECT_EQ(c.matrix().cols(), 0);
}

TEST(Gram, PeriodMismatchThrows) {
    const std::vector<TrigPoly> p{TrigPoly::sine(1, 1.0), TrigPoly::sine(1, 2.0)};
    try {
        (void)gram_matrix(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PeriodMismatch);
    }
}

TEST(Gram, RandomFamiliesArePsd) {
    CounterRng rng(11, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 6;
        const double period = 0.5 + 5.0 * rng.uniform();
        std::vector<TrigPoly> p;
        for (int i = 0; i < n; ++i) {
            p.push_back(random_poly(rng, period));
        }
        const CovarianceForm c = gram_matrix(p);
        EXPECT_EQ(c.matrix(), c.matrix().transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.matrix());
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
        const double scale = 1.0 + c.matrix().cwiseAbs().maxCoeff();
        EXPECT_LE((c.sqrt() * c.sqrt() - c.matrix()).cwiseAbs().maxCoeff(), 1e-10 * scale);
    }
}

TEST(PsdSqrt, Diagonal) {
    const Eigen::MatrixXd s = psd_sqrt(0.5 * Eigen::MatrixXd::Identity(2, 2));
    EXPECT_NEAR((s - Eigen::MatrixXd::Identity(2, 2) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(PsdSqrt, Identity) {
    const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_NEAR((psd_sqrt(i) - i).norm(), 0.0, 1e-15);
}

TEST(PsdSqrt, MultiplyBack) {
    Eigen::MatrixXd c(2, 2);
    c << 2, 1, 1, 2;
    const Eigen::MatrixXd s = psd_sqrt(c);
    EXPECT_LE((s * s - c).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PsdSqrt, ClampsTinyNegative) {
    Eigen::MatrixXd c(2, 2);
    c << 1, 1, 1, 1 - 1e-12;
    const Eigen::MatrixXd s = psd_sqrt(c);
    EXPECT_TRUE(s.allFinite());
}

TEST(PsdSqrt, RejectsIndefinite) {
    Eigen::MatrixXd c(2, 2);
    c << 1, 2, 2, 1;
    try {
        (void)psd_sqrt(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPSD);
    }
}

// ============================================================ average_over_period

TEST(Average, CosSquared) {
    EXPECT_NEAR(average_over_period([](double t) { return std::cos(t) * std::cos(t); }, kTwoPi, 64), 0.5, 1e-15);
}

TEST(Average, CosSin) {
    EXPECT_NEAR(average_over_period([](double t) { return std::cos(t) * std::sin(t); }, kTwoPi, 64), 0.0, 1e-15);
}

TEST(Average, OnePlusCos3) {
    EXPECT_NEAR(average_over_period([](double t) { return 1.0 + std::cos(3 * t); }, kTwoPi, 64), 1.0, 1e-15);
}
