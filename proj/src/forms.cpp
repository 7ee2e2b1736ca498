#include "splitsde/forms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "splitsde/errors.hpp"

namespace splitsde {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t n) { return static_cast<Index>(n); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------- grid

SchrodingerGrid1D::SchrodingerGrid1D(const ScalarField& U, GridParams params) : params_(params) {
    require(!U.empty() && U.dim() == 1, "grid solves need a one-dimensional potential");
    require(params_.z_max > params_.z_min, "grid needs z_max > z_min");
    require(params_.n >= 16, "grid needs at least 16 nodes");
    const std::size_t n = params_.n;
    h_ = (params_.z_max - params_.z_min) / static_cast<double>(n - 1);
    z_.resize(n);
    u_.resize(n);
    v_.resize(n);
    q_.resize(n);
    w_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        z_[i] = params_.z_min + h_ * static_cast<double>(i);
        u_[i] = U.value1(z_[i]);
        v_[i] = 0.5 * (std::pow(U.d1(z_[i]), 2) - U.d2(z_[i]));
        if (!std::isfinite(u_[i]) || !std::isfinite(v_[i])) {
            fail(ErrorCode::PotentialInvalid, "potential is not finite at z = " + fmt(z_[i]));
        }
    }
    u_shift_ = *std::min_element(u_.begin(), u_.end());
    u_ghost_l_ = U.value1(params_.z_min - h_) - u_shift_;
    u_ghost_r_ = U.value1(params_.z_max + h_) - u_shift_;
    K_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        u_[i] -= u_shift_;
        q_[i] = std::exp(-u_[i]);
        w_[i] = q_[i] * q_[i];
        K_ += w_[i] * h_;
    }
    v_min_ = *std::min_element(v_.begin(), v_.end());

    // e^{-2U} at both ends must be negligible against its peak (1 after the shift).
    if (std::min(u_.front(), u_.back()) < 0.5 * std::log(1e16)) {
        fail(ErrorCode::GridTooCoarse, "domain too short: e^{-2U} at the ends exceeds 1e-16 of its maximum");
    }

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ql = i > 0 ? q_[i - 1] : std::exp(-u_ghost_l_);
        const double qr = i + 1 < n ? q_[i + 1] : std::exp(-u_ghost_r_);
        const double hq = -(qr - 2.0 * q_[i] + ql) / (2.0 * h_ * h_) + v_[i] * q_[i];
        num = std::max(num, std::abs(hq));
        den = std::max(den, q_[i]);
    }
    residual_ = num / den;
    if (residual_ > params_.consistency_tol) {
        fail(ErrorCode::GridTooCoarse, "ground-state residual " + fmt(residual_) + " exceeds " +
                                           fmt(params_.consistency_tol) + "; refine the grid");
    }
}

double SchrodingerGrid1D::expectation(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        s += w_[i] * f(z_[i]);
    }
    return s * h_ / K_;
}

std::vector<double> SchrodingerGrid1D::tabulate(const std::function<double(double)>& f) const {
    std::vector<double> out(z_.size());
    std::transform(z_.begin(), z_.end(), out.begin(), f);
    return out;
}

GridSampler1D SchrodingerGrid1D::sampler() const { return GridSampler1D(z_, w_); }

// ---------------------------------------------------------------- ergodic form

ErgodicForm form_ergodic_1d(const std::vector<double>& phi_in, const std::vector<double>& psi_in,
                            const SchrodingerGrid1D& grid) {
    const std::size_t n = grid.size();
    require(phi_in.size() == n && psi_in.size() == n, "grid functions must match the grid size");
    const auto& q = grid.ground();
    const auto& w = grid.weight();
    const auto& u = grid.u();
    const double h = grid.step();
    const double K = grid.normalization();

    ErgodicForm out;
    for (std::size_t i = 0; i < n; ++i) {
        out.removed_mean_phi += w[i] * phi_in[i];
        out.removed_mean_psi += w[i] * psi_in[i];
    }
    out.removed_mean_phi *= h / K;
    out.removed_mean_psi *= h / K;

    std::vector<double> fphi(n);
    Eigen::VectorXd rhs(idx(n));
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        fphi[i] = q[i] * (phi_in[i] - out.removed_mean_phi);
        rhs(idx(i)) = q[i] * (psi_in[i] - out.removed_mean_psi);
        all_zero = all_zero && fphi[i] == 0.0 && rhs(idx(i)) == 0.0;
    }
    if (all_zero) {
        return out;
    }

    // Central Laplacian with the discrete potential that makes e^{-U} an exact null vector.
    const double c2 = 1.0 / (2.0 * h * h);
    const std::size_t pin = n / 2;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == pin) {
            trip.emplace_back(idx(i), idx(i), 1.0);
            continue;
        }
        const double ul = i > 0 ? u[i - 1] : grid.u_left_ghost();
        const double ur = i + 1 < n ? u[i + 1] : grid.u_right_ghost();
        const double vd = (std::exp(-(ur - u[i])) + std::exp(-(ul - u[i])) - 2.0) * c2;
        trip.emplace_back(idx(i), idx(i), 2.0 * c2 + vd);
        if (i > 0 && i - 1 != pin) {
            trip.emplace_back(idx(i), idx(i - 1), -c2);
        }
        if (i + 1 < n && i + 1 != pin) {
            trip.emplace_back(idx(i), idx(i + 1), -c2);
        }
    }
    Eigen::SparseMatrix<double> A(idx(n), idx(n));
    A.setFromTriplets(trip.begin(), trip.end());
    rhs(idx(pin)) = 0.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        fail(ErrorCode::NotConverged, "sparse LU factorization failed");
    }
    Eigen::VectorXd g = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !g.allFinite()) {
        fail(ErrorCode::NotConverged, "sparse LU solve failed");
    }

    // Remove the ground-state component introduced by the pin.
    double qg = 0.0;
    double qq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        qg += q[i] * g(idx(i));
        qq += q[i] * q[i];
    }
    const double c = qg / qq;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += fphi[i] * (g(idx(i)) - c * q[i]);
    }
    out.value = s * h / K;
    return out;
}

ErgodicForm form_ergodic_1d(const std::function<double(double)>& phi, const std::function<double(double)>& psi,
                            const SchrodingerGrid1D& grid) {
    return form_ergodic_1d(grid.tabulate(phi), grid.tabulate(psi), grid);
}

// ---------------------------------------------------------------- g_k

GkSolution solve_gk(const SchrodingerGrid1D& grid, const std::vector<double>& rho, int k, double period) {
    require(k != 0, "solve_gk needs a nonzero frequency");
    require(period > 0.0, "period must be positive");
    const std::size_t n = grid.size();
    require(rho.size() == n, "rho must be tabulated on the grid");
    const auto& q = grid.ground();
    const auto& v = grid.v();
    const double h = grid.step();
    const double h12 = h * h / 12.0;
    const double kw = 2.0 * std::numbers::pi / period * static_cast<double>(k);

    // φ'' = fφ + s with f = 2(V - ikωρ), s = 2e^{-U}; Numerov couples three nodes.
    std::vector<Complex> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = Complex{2.0 * v[i], -2.0 * kw * rho[i]};
    }
    auto s_at = [&](std::ptrdiff_t i) {
        if (i < 0) {
            return 2.0 * std::exp(-grid.u_left_ghost());
        }
        if (i >= static_cast<std::ptrdiff_t>(n)) {
            return 2.0 * std::exp(-grid.u_right_ghost());
        }
        return 2.0 * q[static_cast<std::size_t>(i)];
    };

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(3 * n);
    Eigen::VectorXcd rhs(idx(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto si = static_cast<std::ptrdiff_t>(i);
        trip.emplace_back(idx(i), idx(i), -2.0 - 10.0 * h12 * f[i]);
        if (i > 0) {
            trip.emplace_back(idx(i), idx(i - 1), 1.0 - h12 * f[i - 1]);
        }
        if (i + 1 < n) {
            trip.emplace_back(idx(i), idx(i + 1), 1.0 - h12 * f[i + 1]);
        }
        rhs(idx(i)) = h12 * (s_at(si - 1) + 10.0 * s_at(si) + s_at(si + 1));
    }
    Eigen::SparseMatrix<Complex> A(idx(n), idx(n));
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        fail(ErrorCode::SolverSingular, "g_k system is singular for k = " + std::to_string(k));
    }
    Eigen::VectorXcd phi = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !phi.allFinite()) {
        fail(ErrorCode::SolverSingular, "g_k solve failed for k = " + std::to_string(k));
    }

    GkSolution out;
    out.k = k;
    out.g.resize(n);
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        acc += q[i] * phi(idx(i));
        // g = e^{U}φ; left at zero where e^{-U} underflows.
        out.g[i] = q[i] > 0.0 ? phi(idx(i)) / q[i] : Complex{0.0, 0.0};
    }
    out.gbar = acc * h / grid.normalization();
    return out;
}

GkTable::GkTable(const SchrodingerGrid1D& grid, const std::function<double(double)>& rho,
                 const std::vector<int>& ks, double period)
    : period_(period) {
    const std::vector<double> r = grid.tabulate(rho);
    std::set<int> all;
    for (int k : ks) {
        if (k != 0) {
            all.insert(k);
            all.insert(-k);
        }
    }
    for (int k : all) {
        insert(solve_gk(grid, r, k, period));
    }
}

Complex GkTable::gbar(int k) const { return solution(k).gbar; }

const GkSolution& GkTable::solution(int k) const {
    auto it = table_.find(k);
    if (it == table_.end()) {
        fail(ErrorCode::MissingFrequency, "no g_k entry for k = " + std::to_string(k));
    }
    return it->second;
}

std::vector<int> GkTable::frequencies() const {
    std::vector<int> out;
    for (const auto& [k, s] : table_) {
        out.push_back(k);
    }
    return out;
}

void GkTable::insert(GkSolution s) {
    const int k = s.k;
    table_[k] = std::move(s);
}

void GkTable::write_csv(std::ostream& os) const {
    os << "k,re,im\n";
    char buf[96];
    for (const auto& [k, s] : table_) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", k, s.gbar.real(), s.gbar.imag());
        os << buf;
    }
}

Complex form_integrated(const TrigPoly& phi1, const TrigPoly& phi2, const GkTable& table) {
    if (phi1.period() != table.period() || phi2.period() != table.period()) {
        fail(ErrorCode::PeriodMismatch, "drivers and g_k table must share one period");
    }
    if (!phi1.is_mean_zero() || !phi2.is_mean_zero()) {
        fail(ErrorCode::NonZeroMean, "integrated-noise forms need mean-zero drivers");
    }
    Complex s{0.0, 0.0};
    for (const auto& [k, c2] : phi2.coeffs()) {
        const Complex c1 = phi1.coeff(-k);
        if (k == 0 || c1 == Complex{0.0, 0.0} || c2 == Complex{0.0, 0.0}) {
            continue;
        }
        s -= c1 * c2 * table.gbar(k);
    }
    return s;
}

// ---------------------------------------------------------------- closed form

Complex ou_integrated_form(int k, int l, std::size_t n_terms) {
    if (k != l || k == 0) {
        return {0.0, 0.0};
    }
    const double a = 0.5 * static_cast<double>(k) * static_cast<double>(k);
    if (n_terms > 0 || std::abs(k) < 5) {
        // e^a Σ (-a)ⁿ / (n! (n + a)).
        double pw = 1.0;
        double sum = 1.0 / a;
        for (std::size_t n = 1; n_terms == 0 || n < n_terms; ++n) {
            pw *= -a / static_cast<double>(n);
            const double term = pw / (static_cast<double>(n) + a);
            sum += term;
            if (n_terms == 0 && static_cast<double>(n) > a && std::abs(term) < 1e-14 * std::abs(sum)) {
                break;
            }
            if (n > 10000) {
                break;
            }
        }
        return {std::exp(a) * sum, 0.0};
    }
    // Same value through the positive series Σ aⁿ / (a (a+1) ... (a+n)),
    // which avoids the cancellation of the alternating form for large |k|.
    double term = 1.0 / a;
    double sum = term;
    for (std::size_t n = 1; n < 100000; ++n) {
        term *= a / (a + static_cast<double>(n));
        sum += term;
        if (term < 1e-17 * sum) {
            break;
        }
    }
    return {sum, 0.0};
}

// ---------------------------------------------------------------- Monte Carlo

McEstimate semigroup_mc_form(const StateFunction& phi, const StateFunction& psi, const DiffusionSpec& m,
                             const StateSampler& invariant_sampler, const SemigroupMcOptions& opts) {
    m.validate();
    require(static_cast<bool>(phi) && static_cast<bool>(psi) && static_cast<bool>(invariant_sampler),
            "semigroup Monte Carlo needs phi, psi and an invariant sampler");
    require(opts.n_paths >= 2, "need at least two paths");
    SdeSystem sys;
    sys.dim = m.dim;
    sys.drift = m.mu;
    sys.columns = m.sigma;
    sys.periodic = opts.periodic;
    sys.validate();

    const std::size_t n_steps = step_count(opts.t_max, opts.dt);
    const double h = opts.t_max / static_cast<double>(n_steps);
    std::vector<double> a(opts.n_paths), integral(opts.n_paths), psi0(opts.n_paths);
    std::vector<char> ok(opts.n_paths, 1);

    parallel_for(opts.n_paths, opts.workers, [&](std::size_t i) {
        CounterRng rng(opts.seed, i);
        Stepper st(sys, Stepper::Scheme::EulerMaruyama);
        Vec x(idx(m.dim));
        invariant_sampler(rng, x);
        a[i] = phi(x);
        psi0[i] = psi(x);
        double acc = 0.5 * psi0[i];
        for (std::size_t s = 1; s <= n_steps; ++s) {
            if (!st.step(x, h, rng)) {
                ok[i] = 0;
                return;
            }
            st.wrap(x);
            const double p = psi(x);
            acc += s == n_steps ? 0.5 * p : p;
        }
        integral[i] = acc * h;
    });

    McEstimate est;
    std::size_t n_ok = 0;
    double mean_psi = 0.0;
    for (std::size_t i = 0; i < opts.n_paths; ++i) {
        if (ok[i] != 0) {
            mean_psi += psi0[i];
            ++n_ok;
        }
    }
    est.n_dropped = opts.n_paths - n_ok;
    est.n_paths = n_ok;
    if (n_ok < 2) {
        fail(ErrorCode::NonFinite, "fewer than two finite Monte Carlo paths");
    }
    mean_psi /= static_cast<double>(n_ok);
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < opts.n_paths; ++i) {
        if (ok[i] == 0) {
            continue;
        }
        const double val = a[i] * (integral[i] - mean_psi * opts.t_max);
        s1 += val;
        s2 += val * val;
    }
    const double nn = static_cast<double>(n_ok);
    est.value = s1 / nn;
    const double var = std::max(0.0, (s2 - nn * est.value * est.value) / (nn - 1.0));
    est.std_error = std::sqrt(var / nn);
    return est;
}

DiffusionSpec integrated_driving(const ScalarField& rho, const ScalarField& U) {
    require(!rho.empty() && !U.empty() && rho.dim() == U.dim(), "rho and U must act on the same space");
    const std::size_t dz = U.dim();
    const std::size_t n = dz + 1;
    DiffusionSpec d;
    d.dim = n;
    d.mu = VectorField(n, n, [rho, U, dz](ConstVecRef s, VecRef out) {
        const auto z = s.tail(idx(dz));
        out(0) = rho(z);
        auto oz = out.tail(idx(dz));
        U.gradient(z, oz);
        oz = -oz;
    });
    for (std::size_t k = 0; k < dz; ++k) {
        d.sigma.push_back(VectorField::constant(n, Vec::Unit(idx(n), idx(k + 1))));
    }
    return d;
}

StateSampler integrated_invariant_sampler(const SchrodingerGrid1D& grid, double period) {
    auto zs = std::make_shared<GridSampler1D>(grid.sampler());
    return [zs, period](CounterRng& rng, VecRef out) {
        out(0) = period * rng.uniform();
        out(1) = zs->sample(rng);
    };
}

CovarianceForm amplitude_wiener_special_case(const std::vector<TrigPoly>& phi) {
    std::vector<TrigPoly> anti;
    anti.reserve(phi.size());
    for (const auto& p : phi) {
        anti.push_back(antiderivative_mean_zero(p));
    }
    return gram_matrix(anti);
}

} // namespace splitsde
