#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "splitsde/convergence.hpp"
#include "splitsde/errors.hpp"
#include "splitsde/presets.hpp"

using namespace splitsde;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n, double shift = 0.0) {
    CounterRng r(seed, 0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = r.normal() + shift;
    }
    return v;
}

EnsembleReport small_ladder(unsigned workers) {
    LadderConfig cfg;
    cfg.epsilons = {0.4, 0.2};
    cfg.n_paths = 400;
    cfg.T = 0.5;
    cfg.dt_limit = 1e-2;
    cfg.min_steps = 20;
    cfg.workers = workers;
    const Preset robot = make_preset("robot");
    FastBuilder fb = [](double eps) {
        PresetParams p;
        p.epsilon = eps;
        const Preset pr = make_preset("robot", p);
        return std::make_pair(pr.fast(), pr.fast_initial());
    };
    return run_ladder(fb, robot.limit.stratonovich(), robot.limit_initial(), 2, cfg);
}

} // namespace

// ============================================================ KS

TEST(Ks, IdenticalSamples) {
    const auto a = normals(1, 100);
    EXPECT_EQ(ks_distance(a, a), 0.0);
}

TEST(Ks, DisjointSupports) { EXPECT_EQ(ks_distance({1, 2, 3}, {4, 5}), 1.0); }

TEST(Ks, EmptyThrows) {
    try {
        (void)ks_distance({}, {1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySample);
    }
}

TEST(Ks, CriticalValueTable) {
    // c(0.01) = 1.6276 in the standard tables.
    EXPECT_NEAR(ks_critical_value(10000, 10000, 0.01), 1.62762 * std::sqrt(2.0 / 10000), 1e-5);
}

TEST(Ks, SameLawBelowCriticalMostSeeds) {
    const double crit = ks_critical_value(10000, 10000, 0.01);
    int below = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        below += ks_distance(normals(2 * s, 10000), normals(2 * s + 1, 10000)) < crit ? 1 : 0;
    }
    EXPECT_GE(below, 95);
}

TEST(Ks, DetectsShift) {
    EXPECT_GT(ks_distance(normals(1, 10000), normals(2, 10000, 0.2)), ks_critical_value(10000, 10000, 0.01));
}

// ============================================================ rate_fit

TEST(RateFit, LinearErrors) {
    const std::vector<double> eps{0.4, 0.2, 0.1};
    const RateFit f = rate_fit(eps, eps);
    EXPECT_NEAR(f.slope, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(RateFit, QuadraticErrors) {
    const std::vector<double> eps{0.4, 0.2, 0.1};
    EXPECT_NEAR(rate_fit({0.16, 0.04, 0.01}, eps).slope, 2.0, 1e-12);
}

TEST(RateFit, ZeroErrorThrows) {
    try {
        (void)rate_fit({0.1, 0.05, 0.0}, {0.4, 0.2, 0.1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateFit);
    }
}

TEST(NonIncreasing, Slack) {
    EXPECT_TRUE(non_increasing_within({0.3, 0.2, 0.1}, {0, 0, 0}, 2.0));
    EXPECT_FALSE(non_increasing_within({0.1, 0.2}, {0.01, 0.01}, 2.0));
    EXPECT_TRUE(non_increasing_within({0.1, 0.12}, {0.01, 0.01}, 2.0));
}

// ============================================================ observables and config

TEST(Observable, Parsing) {
    Vec x(2);
    x << 3.0, 4.0;
    EXPECT_EQ(make_observable("x2", 2).f(x), 4.0);
    EXPECT_EQ(make_observable("radius", 2).f(x), 5.0);
    EXPECT_EQ(make_observable("x1^2", 2).f(x), 9.0);
    EXPECT_EQ(make_observable("x1*x2", 2).f(x), 12.0);
    EXPECT_THROW(make_observable("x3", 2), Error);
    EXPECT_THROW(make_observable("energy", 2), Error);
}

TEST(LadderConfig, Validation) {
    LadderConfig c;
    EXPECT_NO_THROW(c.validate());
    c.epsilons = {0.1, 0.2};
    EXPECT_THROW(c.validate(), Error);
    c.epsilons = {1.5};
    EXPECT_THROW(c.validate(), Error);
}

TEST(LadderConfig, StepsClampedBelow) {
    LadderConfig c;
    EXPECT_EQ(c.steps_for(0.4), 100u);
    EXPECT_EQ(c.steps_for(0.1), 1000u);
}

// ============================================================ run_ladder

TEST(Ladder, ReportShapeAndDeterminism) {
    const EnsembleReport a = small_ladder(1);
    const EnsembleReport b = small_ladder(2);
    ASSERT_EQ(a.rungs.size(), 2u);
    for (const auto& r : a.rungs) {
        EXPECT_EQ(r.obs.size(), 3u);
        for (const auto& o : r.obs) {
            EXPECT_GE(o.ks, 0.0);
            EXPECT_LE(o.ks, 1.0);
            EXPECT_GT(o.mean_se, 0.0);
        }
        EXPECT_EQ(r.cov.rows(), 3);
    }
    std::ostringstream ca;
    std::ostringstream cb;
    a.write_csv(ca);
    b.write_csv(cb);
    EXPECT_EQ(ca.str(), cb.str());
    EXPECT_EQ(ca.str().rfind("epsilon,observable,stat,value,stderr\n", 0), 0u);

    std::ostringstream ja;
    a.write_json(ja);
    const auto j = nlohmann::json::parse(ja.str());
    EXPECT_EQ(j["rungs"].size(), 2u);
    EXPECT_EQ(j["config"]["n_paths"], 400);
}
