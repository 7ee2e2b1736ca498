#include "splitsde/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <regex>

#include "json.hpp"

#include "splitsde/errors.hpp"
#include "splitsde/rng.hpp"

namespace splitsde {

namespace {

using Index = Eigen::Index;

constexpr std::uint64_t kLimitTag = 0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Moments {
    double mean = 0.0;
    double mean_se = 0.0;
    double var = 0.0;
    double var_se = 0.0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) {
        m.mean = x.empty() ? 0.0 : x.front();
        return m;
    }
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    m.mean = s / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d = v - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m.var = m2 / (n - 1.0);
    m.mean_se = std::sqrt(m.var / n);
    const double mu4 = m4 / n;
    const double sig2 = m2 / n;
    // Large-sample variance of the sample variance.
    m.var_se = std::sqrt(std::max(0.0, (mu4 - sig2 * sig2 * (n - 3.0) / (n - 1.0)) / n));
    return m;
}

std::vector<std::vector<double>> evaluate(const PathEnsemble& ens, const std::vector<Observable>& obs,
                                          std::size_t dim_x) {
    std::vector<std::vector<double>> out(obs.size());
    for (auto& o : out) {
        o.reserve(ens.n_ok());
    }
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        if (ens.status[i] != PathStatus::Ok) {
            continue;
        }
        const Vec x = ens.terminal.row(static_cast<Index>(i)).head(static_cast<Index>(dim_x)).transpose();
        for (std::size_t j = 0; j < obs.size(); ++j) {
            out[j].push_back(obs[j].f(x));
        }
    }
    return out;
}

Mat covariance(const std::vector<std::vector<double>>& cols) {
    const auto k = static_cast<Index>(cols.size());
    Mat c = Mat::Zero(k, k);
    if (cols.empty() || cols.front().size() < 2) {
        return c;
    }
    const std::size_t n = cols.front().size();
    std::vector<double> mean(cols.size(), 0.0);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (double v : cols[j]) {
            mean[j] += v;
        }
        mean[j] /= static_cast<double>(n);
    }
    for (Index a = 0; a < k; ++a) {
        for (Index b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += (cols[a][i] - mean[a]) * (cols[b][i] - mean[b]);
            }
            c(a, b) = c(b, a) = s / static_cast<double>(n - 1);
        }
    }
    return c;
}

RungReport summarize(const PathEnsemble& ens, double epsilon, const std::vector<Observable>& obs,
                     const std::vector<std::vector<double>>& values) {
    RungReport r;
    r.epsilon = epsilon;
    r.dt = ens.dt;
    r.n_steps = ens.n_steps;
    r.n_paths = ens.n_paths;
    r.n_ok = ens.n_ok();
    r.blowup_fraction = ens.drop_rate();
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const Moments m = moments(values[j]);
        ObservableStats s;
        s.name = obs[j].name;
        s.mean = m.mean;
        s.mean_se = m.mean_se;
        s.var = m.var;
        s.var_se = m.var_se;
        r.obs.push_back(s);
    }
    r.cov = covariance(values);
    return r;
}

} // namespace

Observable make_observable(const std::string& name, std::size_t dim_x) {
    static const std::regex coord(R"(x([0-9]+))");
    static const std::regex power(R"(x([0-9]+)\^([0-9]+))");
    static const std::regex product(R"(x([0-9]+)\*x([0-9]+))");
    auto index = [&](const std::string& s) {
        const auto i = static_cast<std::size_t>(std::stoul(s));
        require(i >= 1 && i <= dim_x, "observable '" + name + "' refers to a missing coordinate");
        return static_cast<Index>(i - 1);
    };
    std::smatch mt;
    if (name == "radius") {
        return {name, [](ConstVecRef x) { return x.norm(); }};
    }
    if (std::regex_match(name, mt, coord)) {
        const Index i = index(mt[1]);
        return {name, [i](ConstVecRef x) { return x(i); }};
    }
    if (std::regex_match(name, mt, power)) {
        const Index i = index(mt[1]);
        const int p = std::stoi(mt[2]);
        return {name, [i, p](ConstVecRef x) { return std::pow(x(i), p); }};
    }
    if (std::regex_match(name, mt, product)) {
        const Index i = index(mt[1]);
        const Index j = index(mt[2]);
        return {name, [i, j](ConstVecRef x) { return x(i) * x(j); }};
    }
    fail(ErrorCode::InvalidArgument, "unknown observable '" + name + "'");
}

void LadderConfig::validate() const {
    require(!epsilons.empty(), "ladder needs at least one epsilon");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        require(epsilons[i] > 0.0 && epsilons[i] <= 1.0, "epsilons must lie in (0, 1]");
        if (i > 0) {
            require(epsilons[i] < epsilons[i - 1], "epsilons must be strictly decreasing");
        }
    }
    require(T > 0.0 && c_dt > 0.0 && dt_limit > 0.0, "T, c_dt and dt_limit must be positive");
    require(n_paths >= 2, "ladder needs at least two paths");
    require(!observables.empty(), "ladder needs at least one observable");
    require(ks_alpha > 0.0 && ks_alpha < 1.0, "ks_alpha must lie in (0, 1)");
}

std::size_t LadderConfig::steps_for(double epsilon) const {
    const double r = T / (c_dt * epsilon * epsilon);
    const auto n = static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r)));
    return std::max(min_steps, std::max<std::size_t>(n, 1));
}

EnsembleReport run_ladder(const FastBuilder& fast_builder, const StratonovichSystem& limit,
                          const InitialCondition& limit_x0, std::size_t dim_x, const LadderConfig& cfg) {
    cfg.validate();
    require(dim_x >= 1 && dim_x <= limit.dim, "slow dimension exceeds the limit state");
    std::vector<Observable> obs;
    for (const auto& name : cfg.observables) {
        obs.push_back(make_observable(name, dim_x));
    }
    EnsembleReport rep;
    rep.config = cfg;

    EnsembleOptions eo;
    eo.workers = cfg.workers;
    const PathEnsemble lim = simulate_ensemble(limit, limit_x0, cfg.T, cfg.dt_limit, cfg.n_paths,
                                               derive_seed(cfg.seed, kLimitTag), eo);
    const auto lim_values = evaluate(lim, obs, dim_x);
    rep.limit = summarize(lim, 0.0, obs, lim_values);

    for (std::size_t r = 0; r < cfg.epsilons.size(); ++r) {
        const double eps = cfg.epsilons[r];
        auto [fast, x0] = fast_builder(eps);
        require(fast.dim_x == dim_x, "fast and limit systems disagree on the slow dimension");
        const double dt = cfg.T / static_cast<double>(cfg.steps_for(eps));
        const PathEnsemble ens =
            simulate_ensemble(fast.sys, x0, cfg.T, dt, cfg.n_paths, derive_seed(cfg.seed, 1 + r), eo);
        RungReport rr;
        if (ens.drop_rate() > 0.5) {
            rr.epsilon = eps;
            rr.dt = ens.dt;
            rr.n_steps = ens.n_steps;
            rr.n_paths = ens.n_paths;
            rr.n_ok = ens.n_ok();
            rr.blowup_fraction = ens.drop_rate();
            rr.aborted = true;
            rep.rungs.push_back(rr);
            continue;
        }
        const auto values = evaluate(ens, obs, dim_x);
        rr = summarize(ens, eps, obs, values);
        rr.ks_critical = ks_critical_value(values.front().size(), lim_values.front().size(), cfg.ks_alpha);
        for (std::size_t j = 0; j < obs.size(); ++j) {
            ObservableStats& s = rr.obs[j];
            const ObservableStats& l = rep.limit.obs[j];
            s.mean_disc = std::abs(s.mean - l.mean);
            s.mean_disc_se = std::hypot(s.mean_se, l.mean_se);
            s.var_disc = std::abs(s.var - l.var);
            s.var_disc_se = std::hypot(s.var_se, l.var_se);
            s.ks = ks_distance(values[j], lim_values[j]);
        }
        const double ln = rep.limit.cov.norm();
        rr.cov_rel_disc = ln > 0.0 ? (rr.cov - rep.limit.cov).norm() / ln : (rr.cov - rep.limit.cov).norm();
        rep.rungs.push_back(std::move(rr));
    }

    // Descriptive log-log slopes over the completed rungs.
    for (std::size_t j = 0; j < obs.size(); ++j) {
        for (const char* stat : {"mean_discrepancy", "variance_discrepancy"}) {
            ObservableFit of;
            of.observable = obs[j].name;
            of.stat = stat;
            std::vector<double> e, d;
            for (const auto& rr : rep.rungs) {
                if (rr.aborted) {
                    continue;
                }
                e.push_back(rr.epsilon);
                d.push_back(std::string(stat) == "mean_discrepancy" ? rr.obs[j].mean_disc : rr.obs[j].var_disc);
            }
            try {
                of.fit = rate_fit(d, e);
            } catch (const Error& err) {
                of.note = err.code() == ErrorCode::DegenerateFit ? "exact match at some rung" : "fewer than 3 rungs";
            }
            rep.fits.push_back(of);
        }
    }
    return rep;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        fail(ErrorCode::EmptySample, "KS distance needs two nonempty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == t) {
            ++i;
        }
        while (j < b.size() && b[j] == t) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
    require(n > 0 && m > 0, "KS critical value needs positive sample sizes");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    return c * std::sqrt((dn + dm) / (dn * dm));
}

RateFit rate_fit(const std::vector<double>& errors, const std::vector<double>& epsilons) {
    require(errors.size() == epsilons.size(), "rate fit needs one error per epsilon");
    if (errors.size() < 3) {
        fail(ErrorCode::InvalidArgument, "rate fit needs at least 3 rungs");
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        require(epsilons[i] > 0.0, "rate fit needs positive epsilons");
        if (errors[i] == 0.0) {
            fail(ErrorCode::DegenerateFit, "zero error at epsilon " + num(epsilons[i]));
        }
        require(errors[i] > 0.0, "rate fit needs positive errors");
    }
    const double n = static_cast<double>(errors.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const double x = std::log(epsilons[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double vx = sxx - sx * sx / n;
    if (vx <= 0.0) {
        fail(ErrorCode::DegenerateFit, "epsilons are all equal");
    }
    RateFit f;
    f.slope = (sxy - sx * sy / n) / vx;
    f.intercept = (sy - f.slope * sx) / n;
    const double vy = syy - sy * sy / n;
    f.r2 = vy > 0.0 ? (f.slope * (sxy - sx * sy / n)) / vy : 1.0;
    return f;
}

bool non_increasing_within(const std::vector<double>& d, const std::vector<double>& se, double slack) {
    require(d.size() == se.size(), "discrepancies and errors must have equal length");
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if (d[i + 1] > d[i] + slack * std::hypot(se[i], se[i + 1])) {
            return false;
        }
    }
    return true;
}

void EnsembleReport::write_csv(std::ostream& os) const {
    os << "epsilon,observable,stat,value,stderr\n";
    auto row = [&os](double eps, const std::string& o, const char* stat, double v, double se) {
        os << num(eps) << ',' << o << ',' << stat << ',' << num(v) << ',' << num(se) << '\n';
    };
    auto rung_rows = [&](const RungReport& r, bool is_limit) {
        row(r.epsilon, "*", "blowup_fraction", r.blowup_fraction, 0.0);
        if (r.aborted) {
            row(r.epsilon, "*", "aborted", 1.0, 0.0);
            return;
        }
        for (const auto& s : r.obs) {
            row(r.epsilon, s.name, "mean", s.mean, s.mean_se);
            row(r.epsilon, s.name, "variance", s.var, s.var_se);
            if (!is_limit) {
                row(r.epsilon, s.name, "mean_discrepancy", s.mean_disc, s.mean_disc_se);
                row(r.epsilon, s.name, "variance_discrepancy", s.var_disc, s.var_disc_se);
                row(r.epsilon, s.name, "ks", s.ks, 0.0);
            }
        }
        if (!is_limit) {
            row(r.epsilon, "*", "ks_critical", r.ks_critical, 0.0);
            row(r.epsilon, "*", "cov_rel_discrepancy", r.cov_rel_disc, 0.0);
        }
    };
    rung_rows(limit, true);
    for (const auto& r : rungs) {
        rung_rows(r, false);
    }
}

void EnsembleReport::write_json(std::ostream& os) const {
    using nlohmann::ordered_json;
    auto rung_json = [](const RungReport& r) {
        ordered_json j;
        j["epsilon"] = r.epsilon;
        j["dt"] = r.dt;
        j["n_steps"] = r.n_steps;
        j["n_paths"] = r.n_paths;
        j["n_ok"] = r.n_ok;
        j["blowup_fraction"] = r.blowup_fraction;
        j["aborted"] = r.aborted;
        if (r.aborted) {
            return j;
        }
        ordered_json obs = ordered_json::array();
        for (const auto& s : r.obs) {
            ordered_json o;
            o["name"] = s.name;
            o["mean"] = s.mean;
            o["mean_se"] = s.mean_se;
            o["variance"] = s.var;
            o["variance_se"] = s.var_se;
            o["mean_discrepancy"] = s.mean_disc;
            o["mean_discrepancy_se"] = s.mean_disc_se;
            o["variance_discrepancy"] = s.var_disc;
            o["variance_discrepancy_se"] = s.var_disc_se;
            o["ks"] = s.ks;
            obs.push_back(o);
        }
        j["observables"] = obs;
        ordered_json cov = ordered_json::array();
        for (Index a = 0; a < r.cov.rows(); ++a) {
            ordered_json row = ordered_json::array();
            for (Index b = 0; b < r.cov.cols(); ++b) {
                row.push_back(r.cov(a, b));
            }
            cov.push_back(row);
        }
        j["covariance"] = cov;
        j["cov_rel_discrepancy"] = r.cov_rel_disc;
        j["ks_critical"] = r.ks_critical;
        return j;
    };
    ordered_json j;
    ordered_json c;
    c["epsilons"] = config.epsilons;
    c["T"] = config.T;
    c["c_dt"] = config.c_dt;
    c["min_steps"] = config.min_steps;
    c["dt_limit"] = config.dt_limit;
    c["n_paths"] = config.n_paths;
    c["seed"] = config.seed;
    c["observables"] = config.observables;
    c["phase"] = config.phase == PhaseInit::Uniform ? "uniform" : "driver";
    c["ks_alpha"] = config.ks_alpha;
    j["config"] = c;
    j["limit"] = rung_json(limit);
    ordered_json rs = ordered_json::array();
    for (const auto& r : rungs) {
        rs.push_back(rung_json(r));
    }
    j["rungs"] = rs;
    ordered_json fs = ordered_json::array();
    for (const auto& f : fits) {
        ordered_json o;
        o["observable"] = f.observable;
        o["stat"] = f.stat;
        if (f.fit) {
            o["slope"] = f.fit->slope;
            o["intercept"] = f.fit->intercept;
            o["r2"] = f.fit->r2;
        } else {
            o["note"] = f.note;
        }
        fs.push_back(o);
    }
    j["fits"] = fs;
    os << j.dump(2) << '\n';
}

} // namespace splitsde
