// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "splitsde/convergence.hpp"
#include "splitsde/errors.hpp"
#include "splitsde/expressions.hpp"
#include "splitsde/forms.hpp"
#include "splitsde/periodic.hpp"
#include "splitsde/presets.hpp"
#include "splitsde/rng.hpp"
#include "splitsde/sde.hpp"

using namespace splitsde;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const double kTwoPi = 2.0 * std::numbers::pi;

// Sample mean and covariance of the rows of x with standard errors of every entry.
struct Moments {
    Vec mean;
    Vec mean_se;
    Mat cov;
    Mat cov_se;
};

Moments moments(const Mat& x) {
    const auto n = static_cast<double>(x.rows());
    Moments m;
    m.mean = x.colwise().mean().transpose();
    const Mat c = x.rowwise() - m.mean.transpose();
    m.cov = c.transpose() * c / (n - 1.0);
    m.mean_se = (m.cov.diagonal() / n).cwiseSqrt();
    m.cov_se = Mat::Zero(x.cols(), x.cols());
    for (Eigen::Index a = 0; a < x.cols(); ++a) {
        for (Eigen::Index b = 0; b < x.cols(); ++b) {
            const Vec p = c.col(a).cwiseProduct(c.col(b));
            const double pm = p.mean();
            m.cov_se(a, b) = std::sqrt((p.array() - pm).square().sum() / (n - 1.0) / n);
        }
    }
    return m;
}

// ---------------------------------------------------------------- 1

Outcome criterion1() {
    const double closed = std::sqrt(2.0 * std::numbers::e * std::numbers::pi) * std::erf(1.0 / std::sqrt(2.0));
    const Complex v = ou_integrated_form(1, 1);
    const double err = std::abs(v - Complex{closed, 0.0});
    return {err < 1e-10, fmt("series %.15f closed form %.15f |diff| %.2e", v.real(), closed, err)};
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
    const TrigPoly c = TrigPoly::cosine();
    const double series = (0.25 * (ou_integrated_form(1, 1) + ou_integrated_form(-1, -1))).real();

    const ScalarField U = make_potential({"quadratic", 1.0, 1.0}, 1);
    const ScalarField rho = make_expression({"affine", 0.0, 1.0, 1.0, {}, Vec::Ones(1)}, 1);
    const SchrodingerGrid1D grid(U, {-8.0, 8.0, 4000, 1e-5});
    const GkTable table(grid, [&rho](double z) { return rho.value1(z); }, {1});
    const double solved = form_integrated(c, c, table).real();

    SemigroupMcOptions o;
    o.t_max = 20.0;
    o.dt = 1e-3;
    o.n_paths = 10000;
    o.seed = 20241;
    o.periodic = {{0, kTwoPi}};
    const McEstimate mc = semigroup_mc_form([&c](ConstVecRef s) { return c.eval(s(0)); },
                                            [&c](ConstVecRef s) { return c.eval(s(0)); },
                                            integrated_driving(rho, U), integrated_invariant_sampler(grid), o);

    const double rel = std::abs(solved - series) / std::abs(series);
    const double z = std::abs(mc.value - series) / mc.std_error;
    return {rel < 1e-6 && z < 3.0,
            fmt("series %.10f grid %.10f (rel %.2e) mc %.5f +- %.5f (%.2f SE)", series, solved, rel, mc.value,
                mc.std_error, z)};
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
    const std::vector<TrigPoly> p{TrigPoly::cosine(), TrigPoly::sine()};
    const CovarianceForm f = gram_matrix(p);
    const double ec = (f.matrix() - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff();
    const double es = (f.sqrt() - Mat::Identity(2, 2) / std::sqrt(2.0)).cwiseAbs().maxCoeff();
    return {ec < 1e-12 && es < 1e-12, fmt("|C - I/2| %.2e |S - I/sqrt2| %.2e", ec, es)};
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
    const ScalarField U = make_potential({"quadratic", 1.0, 1.0}, 1);
    const SchrodingerGrid1D grid(U, {-8.0, 8.0, 16000, 1e-5});
    const auto id = [](double z) { return z; };
    const double v = form_ergodic_1d(id, id, grid).value;

    const GridSampler1D zs = grid.sampler();
    SemigroupMcOptions o;
    o.t_max = 20.0;
    o.dt = 1e-2;
    o.n_paths = 10000;
    o.seed = 4242;
    const McEstimate mc = semigroup_mc_form([](ConstVecRef s) { return s(0); }, [](ConstVecRef s) { return s(0); },
                                            DiffusionSpec::gradient(U),
                                            [&zs](CounterRng& r, VecRef s) { s(0) = zs.sample(r); }, o);
    const double err = std::abs(v - 0.5);
    const double z = std::abs(mc.value - v) / mc.std_error;
    return {err < 1e-6 && z < 3.0,
            fmt("grid %.10f |diff| %.2e mc %.5f +- %.5f (%.2f SE)", v, err, mc.value, mc.std_error, z)};
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
    PresetParams pp;
    pp.k = 1.0;
    const Preset robot = make_preset("robot", pp);
    const StratonovichSystem strat = robot.limit.stratonovich();
    const ItoSystem ito = strat_to_ito(strat);
    const InitialCondition x0 = robot.limit_initial();

    const PathEnsemble a = simulate_ensemble(strat, x0, 1.0, 1e-3, 10000, 501);
    const PathEnsemble b = simulate_ensemble(ito, x0, 1.0, 1e-3, 10000, 502);
    const Moments ma = moments(a.ok_terminal().leftCols(2));
    const Moments mb = moments(b.ok_terminal().leftCols(2));

    double worst = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i) {
        worst = std::max(worst, std::abs(ma.mean(i) - mb.mean(i)) / std::hypot(ma.mean_se(i), mb.mean_se(i)));
        for (Eigen::Index j = i; j < 2; ++j) {
            worst = std::max(worst, std::abs(ma.cov(i, j) - mb.cov(i, j)) /
                                        std::hypot(ma.cov_se(i, j), mb.cov_se(i, j)));
        }
    }
    const bool ok = worst < 3.0 && a.n_ok() == a.n_paths && b.n_ok() == b.n_paths;
    return {ok, fmt("heun mean (%.4f, %.4f) em mean (%.4f, %.4f) worst %.2f combined SE", ma.mean(0), ma.mean(1),
                    mb.mean(0), mb.mean(1), worst)};
}

// ---------------------------------------------------------------- 6 and 9

LadderConfig ladder_config(unsigned workers) {
    LadderConfig cfg;
    cfg.epsilons = {0.4, 0.2, 0.1};
    cfg.T = 1.0;
    cfg.c_dt = 0.1;
    cfg.n_paths = 10000;
    cfg.seed = 7;
    cfg.workers = workers;
    return cfg;
}

EnsembleReport robot_ladder(unsigned workers) {
    const Preset robot = make_preset("robot");
    FastBuilder fb = [](double eps) {
        PresetParams p;
        p.epsilon = eps;
        const Preset pr = make_preset("robot", p);
        return std::make_pair(pr.fast(), pr.fast_initial(PhaseInit::Uniform));
    };
    return run_ladder(fb, robot.limit.stratonovich(), robot.limit_initial(), robot.dim_x(), ladder_config(workers));
}

Outcome criterion6(const EnsembleReport& r) {
    bool ok = r.rungs.size() == 3;
    std::string worst;
    for (const auto& rg : r.rungs) {
        ok = ok && !rg.aborted;
    }
    if (!ok) {
        return {false, "ladder incomplete"};
    }
    const std::size_t n_obs = r.rungs.front().obs.size();
    for (std::size_t o = 0; o < n_obs; ++o) {
        std::vector<double> dm, sm, dv, sv;
        for (const auto& rg : r.rungs) {
            dm.push_back(rg.obs[o].mean_disc);
            sm.push_back(rg.obs[o].mean_disc_se);
            dv.push_back(rg.obs[o].var_disc);
            sv.push_back(rg.obs[o].var_disc_se);
        }
        if (!non_increasing_within(dm, sm, 2.0)) {
            ok = false;
            worst += " mean(" + r.rungs.front().obs[o].name + ") increases";
        }
        if (!non_increasing_within(dv, sv, 2.0)) {
            ok = false;
            worst += " var(" + r.rungs.front().obs[o].name + ") increases";
        }
    }
    const RungReport& last = r.rungs.back();
    double ks_max = 0.0;
    for (const auto& s : last.obs) {
        ks_max = std::max(ks_max, s.ks);
    }
    const bool cov_ok = last.cov_rel_disc < 0.1;
    const bool ks_ok = ks_max < 1.5 * last.ks_critical;
    ok = ok && cov_ok && ks_ok;
    return {ok, fmt("eps=0.1 cov rel %.4f, max KS %.4f vs 1.5x critical %.4f%s", last.cov_rel_disc, ks_max,
                    1.5 * last.ks_critical, worst.c_str())};
}

std::string serialize(const EnsembleReport& r) {
    std::ostringstream os;
    r.write_csv(os);
    r.write_json(os);
    return os.str();
}

Outcome criterion9(const EnsembleReport& one_worker) {
    const EnsembleReport two = robot_ladder(2);
    const std::string a = serialize(one_worker);
    const std::string b = serialize(two);
    return {a == b, fmt("workers 1 vs 2: %zu vs %zu bytes, %s", a.size(), b.size(), a == b ? "identical" : "differ")};
}

// ---------------------------------------------------------------- 7

Outcome criterion7() {
    const Mat s = psd_sqrt(0.5 * Mat::Identity(2, 2));
    const double dt = 1e-2;
    const std::size_t n = 1000000;
    CounterRng rng(77, 0);
    Mat x(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        x.row(static_cast<Eigen::Index>(i)) = sample_correlated_increments(s, dt, rng).transpose();
    }
    // The increments have known mean zero.
    double worst = 0.0;
    for (Eigen::Index a = 0; a < 2; ++a) {
        for (Eigen::Index b = a; b < 2; ++b) {
            const Vec p = x.col(a).cwiseProduct(x.col(b));
            const double m = p.mean();
            const double se = std::sqrt((p.array() - m).square().sum() / static_cast<double>(n - 1) /
                                        static_cast<double>(n));
            const double target = a == b ? 0.5 * dt : 0.0;
            worst = std::max(worst, std::abs(m - target) / se);
        }
    }
    return {worst < 3.0, fmt("worst entry %.2f SE from I/2 dt", worst)};
}

// ---------------------------------------------------------------- 8

Outcome criterion8() {
    const ScalarField U = make_potential({"quadratic", 1.0, 1.0}, 1);
    const SchrodingerGrid1D grid(U, {-8.0, 8.0, 4000, 1e-5});
    const GkTable table(grid, [](double z) { return z; }, {1, 2, 3, 4, 5});
    double conj_err = 0.0;
    double re_max = -1e300;
    for (int k = 1; k <= 5; ++k) {
        conj_err = std::max(conj_err, std::abs(table.gbar(-k) - std::conj(table.gbar(k))));
        re_max = std::max({re_max, table.gbar(k).real(), table.gbar(-k).real()});
    }

    // Random smooth functions from a fixed dictionary.
    const std::vector<std::function<double(double)>> basis{
        [](double z) { return z; },
        [](double z) { return z * z; },
        [](double z) { return std::sin(z); },
        [](double z) { return std::cos(2.0 * z); },
        [](double z) { return std::tanh(z); },
        [](double z) { return z * z * z * std::exp(-0.25 * z * z); },
        [](double z) { return std::abs(z); },
    };
    std::vector<std::vector<double>> tab;
    for (const auto& f : basis) {
        tab.push_back(grid.tabulate(f));
    }
    CounterRng rng(88, 0);
    auto random_fn = [&]() {
        std::vector<double> g(grid.size(), 0.0);
        for (const auto& t : tab) {
            const double c = rng.normal();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += c * t[i];
            }
        }
        return g;
    };
    double sym_err = 0.0;
    double min_diag = 1e300;
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = random_fn();
        const auto g = random_fn();
        const double fg = form_ergodic_1d(f, g, grid).value;
        const double gf = form_ergodic_1d(g, f, grid).value;
        sym_err = std::max(sym_err, std::abs(fg - gf));
        min_diag = std::min(min_diag, form_ergodic_1d(f, f, grid).value);
    }
    const bool ok = conj_err < 1e-10 && re_max <= 1e-10 && sym_err <= 1e-9 && min_diag >= -1e-9;
    return {ok, fmt("conj %.2e max Re gbar %.2e sym %.2e min <f,f> %.3e", conj_err, re_max, sym_err, min_diag)};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&failures](int id, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    };

    report(1, criterion1);
    report(2, criterion2);
    report(3, criterion3);
    report(4, criterion4);
    report(5, criterion5);
    EnsembleReport ladder;
    bool have_ladder = false;
    report(6, [&] {
        ladder = robot_ladder(1);
        have_ladder = true;
        return criterion6(ladder);
    });
    report(7, criterion7);
    report(8, criterion8);
    report(9, [&] {
        if (!have_ladder) {
            return Outcome{false, "no reference run"};
        }
        return criterion9(ladder);
    });
    return failures == 0 ? 0 : 1;
}
