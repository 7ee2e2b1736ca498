#include "splitsde/sde.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "splitsde/errors.hpp"

namespace splitsde {

std::size_t SdeSystem::raw_noise_dim() const {
    return noise_transform ? static_cast<std::size_t>(noise_transform->cols()) : columns.size();
}

Mat SdeSystem::transform() const {
    if (noise_transform) {
        return *noise_transform;
    }
    const auto n = static_cast<Eigen::Index>(columns.size());
    return Mat::Identity(n, n);
}

void SdeSystem::validate() const {
    require(dim > 0, "SDE system needs a positive dimension");
    require(drift.dim_in() == dim && drift.dim_out() == dim, "drift must map R^dim to R^dim");
    for (const auto& c : columns) {
        require(c.dim_in() == dim && c.dim_out() == dim, "diffusion columns must map R^dim to R^dim");
    }
    if (noise_transform) {
        require(static_cast<std::size_t>(noise_transform->rows()) == columns.size(),
                "noise transform needs one row per diffusion column");
    }
    for (const auto& p : periodic) {
        require(p.index < dim && p.period > 0.0, "invalid periodic coordinate");
    }
}

namespace {

void check_step_args(const SdeSystem& sys, ConstVecRef x, double dt, ConstVecRef db) {
    require(dt > 0.0, "step size must be positive");
    require(static_cast<std::size_t>(x.size()) == sys.dim, "state has the wrong dimension");
    require(static_cast<std::size_t>(db.size()) == sys.columns.size(),
            "increment needs one entry per diffusion column");
}

PathEnsemble run_ensemble(const SdeSystem& sys, Stepper::Scheme scheme, const InitialCondition& x0, double T,
                          double dt, std::size_t n_paths, std::uint64_t seed, const EnsembleOptions& opts) {
    sys.validate();
    require(T > 0.0 && dt > 0.0, "horizon and step must be positive");
    require(n_paths >= 1, "need at least one path");
    require(opts.record_every >= 1, "record_every must be at least 1");
    if (!x0.sampler) {
        require(static_cast<std::size_t>(x0.fixed.size()) == sys.dim, "initial state has the wrong dimension");
    }

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.n_steps = step_count(T, dt);
    ens.dim = sys.dim;
    ens.dt = T / static_cast<double>(ens.n_steps);
    ens.seed = seed;
    ens.record_every = opts.record_every;
    ens.terminal.setZero(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(sys.dim));
    ens.status.assign(n_paths, PathStatus::Ok);
    if (opts.record_paths) {
        ens.paths.resize(n_paths);
    }

    const double h = ens.dt;
    const std::size_t n_rec = ens.n_steps / opts.record_every + 1;
    const auto n = static_cast<Eigen::Index>(sys.dim);

    parallel_for(n_paths, opts.workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        Stepper stepper(sys, scheme);
        Vec x(n);
        if (x0.sampler) {
            x0.sampler(rng, x);
        } else {
            x = x0.fixed;
        }
        Mat* rec = nullptr;
        if (opts.record_paths) {
            rec = &ens.paths[i];
            rec->setZero(static_cast<Eigen::Index>(n_rec), n);
            rec->row(0) = x.transpose();
        }
        PathStatus st = PathStatus::Ok;
        for (std::size_t s = 0; s < ens.n_steps; ++s) {
            if (!stepper.step(x, h, rng)) {
                st = PathStatus::NonFinite;
                break;
            }
            stepper.wrap(x);
            if (sys.guard && !sys.guard(x)) {
                st = PathStatus::GuardFailed;
                break;
            }
            if (rec != nullptr && (s + 1) % opts.record_every == 0) {
                rec->row(static_cast<Eigen::Index>((s + 1) / opts.record_every)) = x.transpose();
            }
        }
        ens.status[i] = st;
        ens.terminal.row(static_cast<Eigen::Index>(i)) = x.transpose();
    });
    return ens;
}

} // namespace

Stepper::Stepper(const SdeSystem& sys, Scheme scheme)
    : sys_(sys), scheme_(scheme) {
    const auto n = static_cast<Eigen::Index>(sys.dim);
    a_.resize(n);
    a2_.resize(n);
    b_.resize(n);
    xt_.resize(n);
    xn_.resize(n);
    raw_.resize(static_cast<Eigen::Index>(sys.raw_noise_dim()));
    db_.resize(static_cast<Eigen::Index>(sys.columns.size()));
}

bool Stepper::step(VecRef x, double dt, CounterRng& rng) {
    const double sq = std::sqrt(dt);
    for (Eigen::Index j = 0; j < raw_.size(); ++j) {
        raw_(j) = rng.normal() * sq;
    }
    if (sys_.noise_transform) {
        db_.noalias() = (*sys_.noise_transform) * raw_;
    } else {
        db_ = raw_;
    }
    return step_with(x, dt, db_);
}

bool Stepper::step_with(VecRef x, double dt, ConstVecRef db) {
    const auto& cols = sys_.columns;
    sys_.drift.eval(x, a_);
    if (scheme_ == Scheme::EulerMaruyama) {
        xn_ = x + a_ * dt;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double d = db(static_cast<Eigen::Index>(k));
            if (d != 0.0) {
                cols[k].eval(x, b_);
                xn_ += b_ * d;
            }
        }
    } else {
        xt_ = x + a_ * dt;
        xn_ = x;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double d = db(static_cast<Eigen::Index>(k));
            if (d != 0.0) {
                cols[k].eval(x, b_);
                xt_ += b_ * d;
                xn_ += (0.5 * d) * b_;
            }
        }
        sys_.drift.eval(xt_, a2_);
        xn_ += (0.5 * dt) * (a_ + a2_);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double d = db(static_cast<Eigen::Index>(k));
            if (d != 0.0) {
                cols[k].eval(xt_, b_);
                xn_ += (0.5 * d) * b_;
            }
        }
    }
    if (!xn_.allFinite()) {
        return false;
    }
    x = xn_;
    return true;
}

void Stepper::wrap(VecRef x) const {
    for (const auto& p : sys_.periodic) {
        double& v = x(static_cast<Eigen::Index>(p.index));
        v = std::fmod(v, p.period);
        if (v < 0.0) {
            v += p.period;
        }
    }
}

Vec euler_maruyama_step(const ItoSystem& sys, ConstVecRef x, double dt, ConstVecRef dB) {
    check_step_args(sys, x, dt, dB);
    Vec out = x;
    Stepper st(sys, Stepper::Scheme::EulerMaruyama);
    if (!st.step_with(out, dt, dB)) {
        fail(ErrorCode::NonFinite, "Euler-Maruyama step produced a non-finite state");
    }
    return out;
}

Vec heun_stratonovich_step(const StratonovichSystem& sys, ConstVecRef x, double dt, ConstVecRef dB) {
    check_step_args(sys, x, dt, dB);
    Vec out = x;
    Stepper st(sys, Stepper::Scheme::Heun);
    if (!st.step_with(out, dt, dB)) {
        fail(ErrorCode::NonFinite, "Heun step produced a non-finite state");
    }
    return out;
}

Vec stratonovich_correction(const SdeSystem& sys, ConstVecRef x) {
    const Mat t = sys.transform();
    const Mat q = t * t.transpose();
    const auto nc = static_cast<Eigen::Index>(sys.columns.size());
    Vec out = Vec::Zero(static_cast<Eigen::Index>(sys.dim));
    if (nc == 0) {
        return out;
    }
    Mat cols(static_cast<Eigen::Index>(sys.dim), nc);
    for (Eigen::Index k = 0; k < nc; ++k) {
        cols.col(k) = sys.columns[static_cast<std::size_t>(k)](x);
    }
    for (Eigen::Index k = 0; k < nc; ++k) {
        const Vec w = cols * q.col(k);
        if (w.isZero(0.0)) {
            continue;
        }
        out += sys.columns[static_cast<std::size_t>(k)].jacobian(x) * w;
    }
    return 0.5 * out;
}

namespace {

template <class Out>
Out with_corrected_drift(const SdeSystem& sys, double sign) {
    sys.validate();
    Out out;
    static_cast<SdeSystem&>(out) = sys;
    const auto base = std::make_shared<SdeSystem>(sys);
    out.drift = VectorField(sys.dim, sys.dim, [base, sign](ConstVecRef x, VecRef o) {
        base->drift.eval(x, o);
        o += sign * stratonovich_correction(*base, x);
    });
    return out;
}

} // namespace

ItoSystem strat_to_ito(const StratonovichSystem& sys) { return with_corrected_drift<ItoSystem>(sys, 1.0); }

StratonovichSystem ito_to_strat(const ItoSystem& sys) {
    return with_corrected_drift<StratonovichSystem>(sys, -1.0);
}

Vec sample_correlated_increments(const Mat& s, double dt, CounterRng& rng) {
    require(dt > 0.0, "increment step must be positive");
    Vec xi(s.cols());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        xi(i) = rng.normal();
    }
    return s * xi * std::sqrt(dt);
}

std::size_t step_count(double T, double dt) {
    require(T > 0.0 && dt > 0.0, "horizon and step must be positive");
    const double r = T / dt;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r))));
}

PathEnsemble simulate_ensemble(const ItoSystem& sys, const InitialCondition& x0, double T, double dt,
                               std::size_t n_paths, std::uint64_t seed, const EnsembleOptions& opts) {
    return run_ensemble(sys, Stepper::Scheme::EulerMaruyama, x0, T, dt, n_paths, seed, opts);
}

PathEnsemble simulate_ensemble(const StratonovichSystem& sys, const InitialCondition& x0, double T,
                               double dt, std::size_t n_paths, std::uint64_t seed,
                               const EnsembleOptions& opts) {
    return run_ensemble(sys, Stepper::Scheme::Heun, x0, T, dt, n_paths, seed, opts);
}

std::size_t PathEnsemble::n_ok() const {
    return static_cast<std::size_t>(std::count(status.begin(), status.end(), PathStatus::Ok));
}

double PathEnsemble::drop_rate() const {
    return n_paths == 0 ? 0.0 : static_cast<double>(n_flagged()) / static_cast<double>(n_paths);
}

Mat PathEnsemble::ok_terminal() const {
    Mat out(static_cast<Eigen::Index>(n_ok()), static_cast<Eigen::Index>(dim));
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (status[i] == PathStatus::Ok) {
            out.row(r++) = terminal.row(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

namespace {

void put_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

} // namespace

void PathEnsemble::write_csv(std::ostream& os) const {
    os << "path_id";
    for (std::size_t j = 0; j < dim; ++j) {
        os << ",x_" << (j + 1);
    }
    os << '\n';
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (status[i] != PathStatus::Ok) {
            continue;
        }
        os << i;
        for (std::size_t j = 0; j < dim; ++j) {
            os << ',';
            put_double(os, terminal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        os << '\n';
    }
}

void PathEnsemble::write_paths_jsonl(std::ostream& os) const {
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const Mat& p = paths[i];
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const std::size_t step = static_cast<std::size_t>(r) * record_every;
            if (step > n_steps) {
                break;
            }
            os << "{\"path_id\":" << i << ",\"step\":" << step << ",\"t\":";
            put_double(os, dt * static_cast<double>(step));
            os << ",\"x\":[";
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                if (j > 0) {
                    os << ',';
                }
                put_double(os, p(r, j));
            }
            os << "]}\n";
        }
    }
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers == 0 ? 1 : workers, n));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) {
                    err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (err) {
        std::rethrow_exception(err);
    }
}

} // namespace splitsde

namespace splitsde {

GridSampler1D::GridSampler1D(const std::function<double(double)>& weight, double z_min, double z_max,
                             std::size_t n) {
    require(n >= 2 && z_max > z_min, "sampler grid needs n >= 2 and z_max > z_min");
    std::vector<double> z(n), w(n);
    const double h = (z_max - z_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = z_min + h * static_cast<double>(i);
        w[i] = weight(z[i]);
    }
    *this = GridSampler1D(std::move(z), w);
}

GridSampler1D::GridSampler1D(std::vector<double> nodes, const std::vector<double>& weights)
    : z_(std::move(nodes)) {
    require(z_.size() >= 2 && weights.size() == z_.size(), "sampler needs matching nodes and weights");
    cdf_.assign(z_.size(), 0.0);
    for (std::size_t i = 1; i < z_.size(); ++i) {
        require(weights[i] >= 0.0 && std::isfinite(weights[i]), "sampler weights must be finite and >= 0");
        cdf_[i] = cdf_[i - 1] + 0.5 * (weights[i] + weights[i - 1]) * (z_[i] - z_[i - 1]);
    }
    const double total = cdf_.back();
    require(total > 0.0, "sampler weight integrates to zero");
    for (double& c : cdf_) {
        c /= total;
    }
}

double GridSampler1D::quantile(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) {
        return z_.front();
    }
    if (it == cdf_.end()) {
        return z_.back();
    }
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    const double span = cdf_[i] - cdf_[i - 1];
    const double t = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.0;
    return z_[i - 1] + t * (z_[i] - z_[i - 1]);
}

} // namespace splitsde
