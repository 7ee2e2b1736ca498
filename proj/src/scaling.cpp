#include "splitsde/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "splitsde/errors.hpp"

namespace splitsde {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t n) { return static_cast<Index>(n); }

// Scratch buffer reused across calls on one thread.
Vec& scratch(int slot, Index n) {
    thread_local Vec buf[4];
    Vec& v = buf[slot];
    if (v.size() != n) {
        v.resize(n);
    }
    return v;
}

void require_field(const VectorField& f, std::size_t in, std::size_t out, const std::string& what) {
    require(!f.empty(), what + " is missing");
    require(f.dim_in() == in && f.dim_out() == out, what + " has the wrong dimensions");
}

void check_drivers(const std::vector<TrigPoly>& phi, double period) {
    for (const auto& p : phi) {
        if (p.period() != period) {
            fail(ErrorCode::PeriodMismatch, "all drivers must share one period");
        }
        require(p.real_valued(), "drivers must be real-valued");
        if (!p.is_mean_zero()) {
            fail(ErrorCode::NonZeroMean, "drivers must have zero mean");
        }
    }
}

double kappa_at(const DiffusionSpec& m, const ScalarField& vartheta, ConstVecRef pt) {
    const Vec g = vartheta.gradient(pt);
    Vec& s = scratch(3, idx(m.dim));
    double k2 = 0.0;
    for (const auto& col : m.sigma) {
        col.eval(pt, s);
        const double c = g.dot(s);
        k2 += c * c;
    }
    return std::sqrt(k2);
}

} // namespace

// ---------------------------------------------------------------- specs

void DiffusionSpec::validate() const {
    require(dim > 0, "driving process needs a positive dimension");
    require_field(mu, dim, dim, "driving drift");
    for (const auto& s : sigma) {
        require_field(s, dim, dim, "driving diffusion column");
    }
}

DiffusionSpec DiffusionSpec::wiener(std::size_t dim) {
    DiffusionSpec d;
    d.dim = dim;
    d.mu = VectorField::zero(dim, dim);
    for (std::size_t k = 0; k < dim; ++k) {
        d.sigma.push_back(VectorField::constant(dim, Vec::Unit(idx(dim), idx(k))));
    }
    return d;
}

DiffusionSpec DiffusionSpec::gradient(const ScalarField& U) {
    DiffusionSpec d = wiener(U.dim());
    d.mu = VectorField(
        U.dim(), U.dim(), [U](ConstVecRef m, VecRef out) { out = -U.gradient(m); },
        [U](ConstVecRef m, MatRef j) { j = -U.hessian(m); });
    return d;
}

PeriodicDrift PeriodicDrift::zero(std::size_t dim_x) {
    return PeriodicDrift{dim_x, VectorField::zero(dim_x, dim_x), {}};
}

void PeriodicDrift::validate(double period) const {
    require_field(base, dim_x, dim_x, "drift base");
    for (const auto& t : terms) {
        require_field(t.field, dim_x, dim_x, "drift coefficient field");
        if (t.poly.period() != period) {
            fail(ErrorCode::PeriodMismatch, "drift monomials must share the driver period");
        }
        require(t.poly.real_valued(), "drift monomials must be real-valued");
    }
}

void PeriodicDrift::eval(ConstVecRef x, double theta, VecRef out) const {
    base.eval(x, out);
    Vec& tmp = scratch(0, idx(dim_x));
    for (const auto& t : terms) {
        const double p = t.poly.eval(theta);
        if (p == 0.0) {
            continue;
        }
        t.field.eval(x, tmp);
        out += p * tmp;
    }
}

VectorField PeriodicDrift::averaged() const {
    auto avg = std::make_shared<std::vector<std::pair<VectorField, double>>>();
    for (const auto& t : terms) {
        // Rectangle rule with more nodes than twice the top frequency is exact.
        const std::size_t n = 2 * static_cast<std::size_t>(t.poly.max_frequency()) + 2;
        const double a = average_over_period([&t](double th) { return t.poly.eval(th); }, t.poly.period(), n);
        if (a != 0.0) {
            avg->emplace_back(t.field, a);
        }
    }
    const VectorField b0 = base;
    const std::size_t d = dim_x;
    return VectorField(d, d, [b0, avg, d](ConstVecRef x, VecRef out) {
        b0.eval(x, out);
        Vec& tmp = scratch(0, idx(d));
        for (const auto& [f, a] : *avg) {
            f.eval(x, tmp);
            out += a * tmp;
        }
    });
}

StateDrift StateDrift::zero(std::size_t dim_x) { return StateDrift{dim_x, VectorField::zero(dim_x, dim_x), {}}; }

void StateDrift::eval(ConstVecRef x, ConstVecRef m, VecRef out) const {
    base.eval(x, out);
    Vec& tmp = scratch(0, idx(dim_x));
    for (const auto& t : terms) {
        const double p = t.psi(m);
        if (p == 0.0) {
            continue;
        }
        t.field.eval(x, tmp);
        out += p * tmp;
    }
}

VectorField StateDrift::averaged(const std::vector<double>& means) const {
    require(means.size() == terms.size(), "need one invariant mean per drift term");
    auto avg = std::make_shared<std::vector<std::pair<VectorField, double>>>();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        if (means[j] != 0.0) {
            avg->emplace_back(terms[j].field, means[j]);
        }
    }
    const VectorField b0 = base;
    const std::size_t d = dim_x;
    return VectorField(d, d, [b0, avg, d](ConstVecRef x, VecRef out) {
        b0.eval(x, out);
        Vec& tmp = scratch(0, idx(d));
        for (const auto& [f, a] : *avg) {
            f.eval(x, tmp);
            out += a * tmp;
        }
    });
}

double AmplitudeScalingSpec::period() const {
    return phi.empty() ? 2.0 * std::numbers::pi : phi.front().period();
}

void AmplitudeScalingSpec::validate() const {
    require(dim_x > 0, "slow dimension must be positive");
    require(epsilon > 0.0, "epsilon must be positive");
    require(v.size() == phi.size(), "need one vector field per driver");
    require(b.dim_x == dim_x, "drift dimension mismatch");
    check_drivers(phi, period());
    b.validate(period());
    for (const auto& f : v) {
        require_field(f, dim_x, dim_x, "vector field v");
    }
    m.validate();
    require(!vartheta.empty() && vartheta.dim() == m.dim, "phase function must act on the driving state");
}

void TimeScalingSpec::validate() const {
    require(dim_x > 0, "slow dimension must be positive");
    require(epsilon > 0.0, "epsilon must be positive");
    require(v.size() == phi.size(), "need one vector field per driver");
    require(b.dim_x == dim_x, "drift dimension mismatch");
    require_field(b.base, dim_x, dim_x, "drift base");
    m.validate();
    for (const auto& t : b.terms) {
        require_field(t.field, dim_x, dim_x, "drift coefficient field");
        require(t.psi.dim() == m.dim, "drift driver must act on the driving state");
    }
    for (const auto& f : v) {
        require_field(f, dim_x, dim_x, "vector field v");
    }
    for (const auto& p : phi) {
        require(!p.empty() && p.dim() == m.dim, "driver must act on the driving state");
    }
}

double IntegratedNoiseSpec::period() const {
    return phi.empty() ? 2.0 * std::numbers::pi : phi.front().period();
}

void IntegratedNoiseSpec::validate() const {
    require(dim_x > 0, "slow dimension must be positive");
    require(epsilon > 0.0, "epsilon must be positive");
    require(v.size() == phi.size(), "need one vector field per driver");
    require(b.dim_x == dim_x, "drift dimension mismatch");
    check_drivers(phi, period());
    b.validate(period());
    for (const auto& f : v) {
        require_field(f, dim_x, dim_x, "vector field v");
    }
    require(!U.empty() && U.dim() > 0, "potential is missing");
    require(!rho.empty() && rho.dim() == U.dim(), "rho must act on the auxiliary state");
}

KappaInfo kappa(const AmplitudeScalingSpec& spec, ConstVecRef m) {
    const Vec g = spec.vartheta.gradient(m);
    const Mat h = spec.vartheta.hessian(m);
    KappaInfo out;
    out.varsigma.resize(idx(spec.m.noise_dim()));
    Vec s(idx(spec.m.dim));
    double k2 = 0.0;
    double second = 0.0;
    for (std::size_t k = 0; k < spec.m.sigma.size(); ++k) {
        spec.m.sigma[k].eval(m, s);
        const double c = g.dot(s);
        out.varsigma(idx(k)) = c;
        k2 += c * c;
        second += s.dot(h * s);
    }
    Vec mu(idx(spec.m.dim));
    spec.m.mu.eval(m, mu);
    out.kappa = std::sqrt(k2);
    out.rho = g.dot(mu) + 0.5 * second;
    return out;
}

// ---------------------------------------------------------------- fast systems

FastSystem build_amplitude_fast(const AmplitudeScalingSpec& spec_in) {
    spec_in.validate();
    auto spec = std::make_shared<const AmplitudeScalingSpec>(spec_in);
    const std::size_t dx = spec->dim_x;
    const std::size_t dm = spec->m.dim;
    const std::size_t n = dx + 1 + dm;
    const double inv_eps = 1.0 / spec->epsilon;

    FastSystem fs;
    fs.dim_x = dx;
    fs.sys.dim = n;
    fs.sys.drift = VectorField(n, n, [spec, dx, dm, inv_eps](ConstVecRef s, VecRef out) {
        const auto x = s.head(idx(dx));
        const double th = s(idx(dx));
        const auto m = s.tail(idx(dm));
        auto ox = out.head(idx(dx));
        spec->b.eval(x, th, ox);
        Vec& tmp = scratch(1, idx(dx));
        for (std::size_t a = 0; a < spec->v.size(); ++a) {
            const double p = spec->phi[a].eval(th);
            spec->v[a].eval(x, tmp);
            ox += (inv_eps * p) * tmp;
        }
        const KappaInfo ki = kappa(*spec, m);
        out(idx(dx)) = inv_eps * ki.rho;
        auto om = out.tail(idx(dm));
        spec->m.mu.eval(m, om);
    });
    for (std::size_t k = 0; k < spec->m.sigma.size(); ++k) {
        fs.sys.columns.emplace_back(n, n, [spec, dx, dm, k, inv_eps](ConstVecRef s, VecRef out) {
            const auto m = s.tail(idx(dm));
            out.head(idx(dx)).setZero();
            auto om = out.tail(idx(dm));
            spec->m.sigma[k].eval(m, om);
            out(idx(dx)) = inv_eps * spec->vartheta.gradient(m).dot(om);
        });
    }
    fs.sys.periodic.push_back({dx, spec->period()});
    fs.sys.guard = [spec, dm](ConstVecRef s) {
        return kappa_at(spec->m, spec->vartheta, s.tail(idx(dm))) >= spec->kappa_min;
    };
    std::ostringstream lay;
    for (std::size_t i = 0; i < dx; ++i) {
        lay << 'x' << (i + 1) << ',';
    }
    lay << "theta";
    for (std::size_t i = 0; i < dm; ++i) {
        lay << ",m" << (i + 1);
    }
    fs.layout = lay.str();
    return fs;
}

FastSystem build_time_fast(const TimeScalingSpec& spec_in) {
    spec_in.validate();
    auto spec = std::make_shared<const TimeScalingSpec>(spec_in);
    const std::size_t dx = spec->dim_x;
    const std::size_t dm = spec->m.dim;
    const std::size_t n = dx + dm;
    const double inv_eps = 1.0 / spec->epsilon;

    FastSystem fs;
    fs.dim_x = dx;
    fs.sys.dim = n;
    fs.sys.drift = VectorField(n, n, [spec, dx, dm, inv_eps](ConstVecRef s, VecRef out) {
        const auto x = s.head(idx(dx));
        const auto m = s.tail(idx(dm));
        auto ox = out.head(idx(dx));
        spec->b.eval(x, m, ox);
        Vec& tmp = scratch(1, idx(dx));
        for (std::size_t a = 0; a < spec->v.size(); ++a) {
            const double p = spec->phi[a](m);
            spec->v[a].eval(x, tmp);
            ox += (inv_eps * p) * tmp;
        }
        auto om = out.tail(idx(dm));
        spec->m.mu.eval(m, om);
        om *= inv_eps * inv_eps;
    });
    for (std::size_t k = 0; k < spec->m.sigma.size(); ++k) {
        fs.sys.columns.emplace_back(n, n, [spec, dx, dm, k, inv_eps](ConstVecRef s, VecRef out) {
            out.head(idx(dx)).setZero();
            auto om = out.tail(idx(dm));
            spec->m.sigma[k].eval(s.tail(idx(dm)), om);
            om *= inv_eps;
        });
    }
    std::ostringstream lay;
    for (std::size_t i = 0; i < dx; ++i) {
        lay << 'x' << (i + 1) << ',';
    }
    for (std::size_t i = 0; i < dm; ++i) {
        lay << (i ? "," : "") << 'm' << (i + 1);
    }
    fs.layout = lay.str();
    return fs;
}

FastSystem build_integrated_noise_fast(const IntegratedNoiseSpec& spec_in) {
    spec_in.validate();
    const PotentialReport rep = validate_potential(spec_in.U);
    if (!rep.passed) {
        std::string why = rep.violations.empty() ? "unknown" : rep.violations.front();
        fail(ErrorCode::PotentialInvalid, "potential fails the growth conditions: " + why);
    }
    auto spec = std::make_shared<const IntegratedNoiseSpec>(spec_in);
    const std::size_t dx = spec->dim_x;
    const std::size_t dz = spec->dim_z();
    const std::size_t n = dx + 1 + dz;
    const double inv_eps = 1.0 / spec->epsilon;

    FastSystem fs;
    fs.dim_x = dx;
    fs.sys.dim = n;
    fs.sys.drift = VectorField(n, n, [spec, dx, dz, inv_eps](ConstVecRef s, VecRef out) {
        const auto x = s.head(idx(dx));
        const double m = s(idx(dx));
        const auto z = s.tail(idx(dz));
        auto ox = out.head(idx(dx));
        spec->b.eval(x, m, ox);
        Vec& tmp = scratch(1, idx(dx));
        for (std::size_t a = 0; a < spec->v.size(); ++a) {
            const double p = spec->phi[a].eval(m);
            spec->v[a].eval(x, tmp);
            ox += (inv_eps * p) * tmp;
        }
        out(idx(dx)) = inv_eps * inv_eps * spec->rho(z);
        out.tail(idx(dz)) = -(inv_eps * inv_eps) * spec->U.gradient(z);
    });
    for (std::size_t k = 0; k < dz; ++k) {
        Vec col = Vec::Zero(idx(n));
        col(idx(dx + 1 + k)) = inv_eps;
        fs.sys.columns.push_back(VectorField::constant(n, col));
    }
    fs.sys.periodic.push_back({dx, spec->period()});
    std::ostringstream lay;
    for (std::size_t i = 0; i < dx; ++i) {
        lay << 'x' << (i + 1) << ',';
    }
    lay << 'm';
    for (std::size_t i = 0; i < dz; ++i) {
        lay << ",z" << (i + 1);
    }
    fs.layout = lay.str();
    return fs;
}

InitialCondition amplitude_initial(const AmplitudeScalingSpec& spec, const Vec& x0, const Vec& m0,
                                   PhaseInit phase) {
    require(static_cast<std::size_t>(x0.size()) == spec.dim_x, "x0 has the wrong dimension");
    require(static_cast<std::size_t>(m0.size()) == spec.m.dim, "m0 has the wrong dimension");
    const double P = spec.period();
    Vec s(idx(spec.dim_x + 1 + spec.m.dim));
    s << x0, 0.0, m0;
    if (phase == PhaseInit::FromDriver) {
        double th = std::fmod(spec.vartheta(m0) / spec.epsilon, P);
        if (th < 0.0) {
            th += P;
        }
        s(idx(spec.dim_x)) = th;
        return InitialCondition::at(s);
    }
    const std::size_t dx = spec.dim_x;
    return InitialCondition::sampled(static_cast<std::size_t>(s.size()), [s, dx, P](CounterRng& rng, VecRef out) {
        out = s;
        out(idx(dx)) = P * rng.uniform();
    });
}

InitialCondition integrated_initial(const IntegratedNoiseSpec& spec, const Vec& x0) {
    require(static_cast<std::size_t>(x0.size()) == spec.dim_x, "x0 has the wrong dimension");
    require(spec.dim_z() == 1, "stationary start is implemented for one-dimensional Z only");
    const ScalarField U = spec.U;
    // Truncate where exp(-2U) has fallen far below its peak.
    double L = 1.0;
    const double u0 = U.value1(0.0);
    while (L < 1e3 && std::min(U.value1(L), U.value1(-L)) - u0 < 20.0) {
        L *= 1.5;
    }
    auto sampler = std::make_shared<GridSampler1D>([U, u0](double z) { return std::exp(-2.0 * (U.value1(z) - u0)); },
                                                   -L, L, 20001);
    const double P = spec.period();
    const std::size_t dx = spec.dim_x;
    return InitialCondition::sampled(dx + 2, [x0, dx, P, sampler](CounterRng& rng, VecRef out) {
        out.head(idx(dx)) = x0;
        out(idx(dx)) = P * rng.uniform();
        out(idx(dx + 1)) = sampler->sample(rng);
    });
}

// ---------------------------------------------------------------- limit systems

void LimitSystemSpec::validate() const {
    require(dim_x > 0, "slow dimension must be positive");
    require_field(b_bar, dim_x, dim_x, "averaged drift");
    require(cov.dim() == v.size(), "covariance dimension must match the number of vector fields");
    for (const auto& f : v) {
        require_field(f, dim_x, dim_x, "vector field v");
    }
    if (m) {
        m->validate();
        require(!vartheta.empty() && vartheta.dim() == m->dim, "phase function must act on the driving state");
    }
}

double LimitSystemSpec::gain(ConstVecRef state) const {
    if (!m) {
        return constant_gain;
    }
    return 2.0 / kappa_at(*m, vartheta, state.tail(idx(m->dim)));
}

Mat LimitSystemSpec::effective_x_diffusion(ConstVecRef state) const {
    const auto x = state.head(idx(dim_x));
    Mat vm(idx(dim_x), idx(v.size()));
    for (std::size_t a = 0; a < v.size(); ++a) {
        vm.col(idx(a)) = v[a](x);
    }
    return gain(state) * vm * cov.sqrt();
}

StratonovichSystem LimitSystemSpec::stratonovich() const {
    validate();
    auto spec = std::make_shared<const LimitSystemSpec>(*this);
    const std::size_t dx = dim_x;
    const std::size_t dm = m ? m->dim : 0;
    const std::size_t n = dx + dm;
    const std::size_t db = v.size();

    StratonovichSystem sys;
    sys.dim = n;
    sys.drift = VectorField(n, n, [spec, dx, dm](ConstVecRef s, VecRef out) {
        auto ox = out.head(idx(dx));
        spec->b_bar.eval(s.head(idx(dx)), ox);
        if (dm == 0) {
            return;
        }
        const auto mm = s.tail(idx(dm));
        auto om = out.tail(idx(dm));
        spec->m->mu.eval(mm, om);
        Vec& col = scratch(2, idx(dm));
        for (const auto& sig : spec->m->sigma) {
            sig.eval(mm, col);
            om -= 0.5 * (sig.jacobian(mm) * col);
        }
    });

    for (std::size_t a = 0; a < db; ++a) {
        auto eval = [spec, dx, dm, a](ConstVecRef s, VecRef out) {
            auto ox = out.head(idx(dx));
            spec->v[a].eval(s.head(idx(dx)), ox);
            ox *= spec->gain(s);
            if (dm > 0) {
                out.tail(idx(dm)).setZero();
            }
        };
        auto jac = [spec, dx, dm, a](ConstVecRef s, MatRef j) {
            j.setZero();
            const double g = spec->gain(s);
            const auto x = s.head(idx(dx));
            j.topLeftCorner(idx(dx), idx(dx)) = g * spec->v[a].jacobian(x);
            if (dm == 0) {
                return;
            }
            // m-derivative of the scalar gain, by central differences.
            const Vec vx = spec->v[a](x);
            Vec sp = s;
            for (std::size_t i = 0; i < dm; ++i) {
                const Index c = idx(dx + i);
                const double h = jacobian_step(s(c));
                sp(c) = s(c) + h;
                const double gp = spec->gain(sp);
                sp(c) = s(c) - h;
                const double gm = spec->gain(sp);
                sp(c) = s(c);
                j.block(0, c, idx(dx), 1) = vx * ((gp - gm) / (2.0 * h));
            }
        };
        sys.columns.emplace_back(n, n, eval, jac);
    }
    for (std::size_t k = 0; k < (m ? m->sigma.size() : 0); ++k) {
        auto eval = [spec, dx, dm, k](ConstVecRef s, VecRef out) {
            out.head(idx(dx)).setZero();
            auto om = out.tail(idx(dm));
            spec->m->sigma[k].eval(s.tail(idx(dm)), om);
        };
        auto jac = [spec, dx, dm, k](ConstVecRef s, MatRef j) {
            j.setZero();
            j.bottomRightCorner(idx(dm), idx(dm)) = spec->m->sigma[k].jacobian(s.tail(idx(dm)));
        };
        sys.columns.emplace_back(n, n, eval, jac);
    }

    const std::size_t dw = m ? m->sigma.size() : 0;
    Mat t = Mat::Zero(idx(db + dw), idx(db + dw));
    t.topLeftCorner(idx(db), idx(db)) = cov.sqrt();
    if (dw > 0) {
        t.bottomRightCorner(idx(dw), idx(dw)).setIdentity();
    }
    sys.noise_transform = t;
    if (m) {
        sys.guard = [spec, dx, dm](ConstVecRef s) {
            return kappa_at(*spec->m, spec->vartheta, s.tail(idx(dm))) >= spec->kappa_min;
        };
    }
    return sys;
}

LimitSystemSpec build_amplitude_limit(const AmplitudeScalingSpec& spec) {
    spec.validate();
    LimitSystemSpec lim;
    lim.dim_x = spec.dim_x;
    lim.b_bar = spec.b.averaged();
    lim.v = spec.v;
    std::vector<TrigPoly> anti;
    anti.reserve(spec.phi.size());
    for (const auto& p : spec.phi) {
        anti.push_back(antiderivative_mean_zero(p));
    }
    lim.cov = gram_matrix(anti);
    lim.m = spec.m;
    lim.vartheta = spec.vartheta;
    lim.kappa_min = spec.kappa_min;
    return lim;
}

LimitSystemSpec build_time_limit(const TimeScalingSpec& spec, const CovarianceForm& form_values,
                                 const std::vector<double>& psi_means) {
    spec.validate();
    require(form_values.dim() == spec.v.size(), "form values must be d_B × d_B");
    // Re-run the PSD check on the supplied matrix.
    const CovarianceForm cov(form_values.matrix());
    LimitSystemSpec lim;
    lim.dim_x = spec.dim_x;
    lim.b_bar = spec.b.averaged(psi_means);
    lim.v = spec.v;
    lim.cov = cov;
    return lim;
}

LimitSystemSpec build_time_limit(const IntegratedNoiseSpec& spec, const CovarianceForm& form_values) {
    spec.validate();
    require(form_values.dim() == spec.v.size(), "form values must be d_B × d_B");
    const CovarianceForm cov(form_values.matrix());
    LimitSystemSpec lim;
    lim.dim_x = spec.dim_x;
    lim.b_bar = spec.b.averaged();
    lim.v = spec.v;
    lim.cov = cov;
    return lim;
}

// ---------------------------------------------------------------- potentials

namespace {

std::vector<Vec> grid_points(std::size_t d, double L, std::size_t n) {
    std::vector<Vec> pts;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) {
        total *= n;
    }
    pts.reserve(total);
    const double h = 2.0 * L / static_cast<double>(n - 1);
    for (std::size_t lin = 0; lin < total; ++lin) {
        Vec z(idx(d));
        std::size_t r = lin;
        for (std::size_t i = 0; i < d; ++i) {
            z(idx(i)) = -L + h * static_cast<double>(r % n);
            r /= n;
        }
        pts.push_back(std::move(z));
    }
    return pts;
}

double schrodinger_potential(const ScalarField& U, ConstVecRef z) {
    return 0.5 * (U.gradient(z).squaredNorm() - U.laplacian(z));
}

} // namespace

PotentialReport validate_potential(const ScalarField& U, double L, std::size_t n) {
    require(!U.empty(), "potential is missing");
    require(L > 0.0 && n >= 5, "validation grid needs L > 0 and at least 5 nodes");
    const std::size_t d = U.dim();
    std::size_t per_axis = n;
    if (d > 1) {
        // Keep the full grid near 10^5 points.
        per_axis = std::max<std::size_t>(5, static_cast<std::size_t>(std::pow(1e5, 1.0 / static_cast<double>(d))));
        per_axis = std::min(per_axis, n);
    }
    const auto pts = grid_points(d, L, per_axis);

    PotentialReport rep;
    double u_min = std::numeric_limits<double>::infinity();
    std::vector<double> uv(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        uv[i] = U(pts[i]);
        if (!std::isfinite(uv[i])) {
            rep.violations.push_back("U is not finite on the grid");
            return rep;
        }
        u_min = std::min(u_min, uv[i]);
    }

    // Slope of the linear lower bound, fitted on the outer half of the grid.
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].norm();
        if (r >= 0.5 * L) {
            a = std::min(a, (uv[i] - u_min) / r);
        }
    }
    rep.a = std::isfinite(a) ? a : 0.0;
    double c = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        c = std::max(c, rep.a * pts[i].norm() - uv[i]);
    }
    rep.c = std::max(c, 0.0);
    if (!(rep.a > 1e-12)) {
        rep.violations.push_back("no linear growth U(z) >= a|z| - c with a > 0");
    }

    rep.v_min = std::numeric_limits<double>::infinity();
    for (const auto& z : pts) {
        const double v = schrodinger_potential(U, z);
        if (!std::isfinite(v)) {
            rep.violations.push_back("V is not finite on the grid");
            return rep;
        }
        rep.v_min = std::min(rep.v_min, v);
    }

    // Monotone growth of V along rays through the outer region.
    std::vector<Vec> dirs;
    for (std::size_t i = 0; i < d; ++i) {
        dirs.push_back(Vec::Unit(idx(d), idx(i)));
        dirs.push_back(-Vec::Unit(idx(d), idx(i)));
    }
    if (d > 1) {
        dirs.push_back(Vec::Ones(idx(d)).normalized());
        dirs.push_back(-Vec::Ones(idx(d)).normalized());
    }
    const std::size_t steps = 200;
    for (const auto& dir : dirs) {
        double prev = -std::numeric_limits<double>::infinity();
        double first = 0.0;
        for (std::size_t s = 0; s <= steps; ++s) {
            const double r = 0.5 * L + 0.5 * L * static_cast<double>(s) / static_cast<double>(steps);
            const double v = schrodinger_potential(U, r * dir);
            if (s == 0) {
                first = v;
            }
            if (v < prev - 1e-9 * (1.0 + std::abs(prev))) {
                std::ostringstream os;
                os << "V decreases along a ray at |z| = " << r;
                rep.violations.push_back(os.str());
                break;
            }
            prev = v;
        }
        if (!(prev > first)) {
            rep.violations.push_back("V does not grow toward the grid boundary");
        }
    }
    std::sort(rep.violations.begin(), rep.violations.end());
    rep.violations.erase(std::unique(rep.violations.begin(), rep.violations.end()), rep.violations.end());
    rep.passed = rep.violations.empty();
    return rep;
}

} // namespace splitsde
