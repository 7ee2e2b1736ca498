#include "splitsde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "splitsde/convergence.hpp"
#include "splitsde/errors.hpp"
#include "splitsde/expressions.hpp"
#include "splitsde/forms.hpp"
#include "splitsde/periodic.hpp"
#include "splitsde/presets.hpp"

namespace splitsde::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    fail(ErrorCode::Config, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Strict view of a JSON object: every key must be consumed before finish().
class Fields {
  public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            config_error(path_, "expected an object");
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!j_.contains(key)) {
            return fallback;
        }
        return as<T>(key);
    }

    template <class T>
    T need(const std::string& key) {
        if (!j_.contains(key)) {
            config_error(sub(key), "required field is missing");
        }
        return as<T>(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (seen_.count(it.key()) == 0) {
                config_error(sub(it.key()), "unknown key");
            }
        }
    }

  private:
    template <class T>
    T as(const std::string& key) {
        seen_.insert(key);
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) {
                    throw std::invalid_argument("expected a number");
                }
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) {
                    throw std::invalid_argument("expected true or false");
                }
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) {
                    throw std::invalid_argument("expected an integer");
                }
                if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw std::invalid_argument("expected a non-negative integer");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) {
                    throw std::invalid_argument("expected a string");
                }
            }
            return v.get<T>();
        } catch (const std::exception& e) {
            config_error(sub(key), e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vec to_vec(const json& j, const std::string& path) {
    if (!j.is_array()) {
        config_error(path, "expected an array of numbers");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            config_error(path + "[" + std::to_string(i) + "]", "expected a number");
        }
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

ExpressionSpec parse_expression(const json& j, const std::string& path) {
    Fields f(j, path);
    ExpressionSpec e;
    e.kind = f.need<std::string>("kind");
    e.offset = f.get("offset", e.offset);
    e.amplitude = f.get("amplitude", e.amplitude);
    e.width = f.get("width", e.width);
    if (f.has("center")) {
        e.center = to_vec(f.raw("center"), f.sub("center"));
    }
    if (f.has("coeffs")) {
        e.coeffs = to_vec(f.raw("coeffs"), f.sub("coeffs"));
    }
    f.finish();
    static const std::set<std::string> kinds{"constant", "affine", "gaussian", "radial"};
    if (kinds.count(e.kind) == 0) {
        config_error(path + ".kind", "unknown expression kind '" + e.kind + "'");
    }
    return e;
}

PotentialSpec parse_potential(const json& j, const std::string& path) {
    Fields f(j, path);
    PotentialSpec p;
    p.kind = f.need<std::string>("kind");
    p.scale = f.get("scale", p.scale);
    p.delta = f.get("delta", p.delta);
    f.finish();
    static const std::set<std::string> kinds{"quadratic", "smoothed_abs", "quartic", "zero"};
    if (kinds.count(p.kind) == 0) {
        config_error(path + ".kind", "unknown potential kind '" + p.kind + "'");
    }
    return p;
}

TrigPoly parse_trig(const json& j, const std::string& path) {
    Fields f(j, path);
    const double period = f.get("period", kTwoPi);
    if (!(period > 0.0)) {
        config_error(f.sub("period"), "must be positive");
    }
    if (f.has("coeffs")) {
        const json& c = f.raw("coeffs");
        if (!c.is_array()) {
            config_error(f.sub("coeffs"), "expected a list of [k, re, im] triples");
        }
        std::map<int, Complex> m;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string p = f.sub("coeffs") + "[" + std::to_string(i) + "]";
            if (!c[i].is_array() || c[i].size() != 3 || !c[i][0].is_number_integer() || !c[i][1].is_number() ||
                !c[i][2].is_number()) {
                config_error(p, "expected [k, re, im] with integer k");
            }
            m[c[i][0].get<int>()] += Complex{c[i][1].get<double>(), c[i][2].get<double>()};
        }
        f.finish();
        try {
            return TrigPoly(period, m);
        } catch (const Error& e) {
            config_error(path, e.what());
        }
    }
    const std::string kind = f.need<std::string>("kind");
    const int k = f.get("k", 1);
    const double amp = f.get("amplitude", 1.0);
    f.finish();
    if (kind == "cos") {
        return TrigPoly::cosine(k, period, amp);
    }
    if (kind == "sin") {
        return TrigPoly::sine(k, period, amp);
    }
    config_error(path + ".kind", "expected 'cos', 'sin' or an explicit coeffs list");
}

GridParams parse_grid(const json& j, const std::string& path) {
    Fields f(j, path);
    GridParams g;
    g.z_min = f.get("z_min", g.z_min);
    g.z_max = f.get("z_max", g.z_max);
    g.n = f.get<std::size_t>("n", g.n);
    g.consistency_tol = f.get("consistency_tol", g.consistency_tol);
    f.finish();
    return g;
}

PresetParams parse_params(Fields& top, const std::string& key) {
    PresetParams p;
    if (!top.has(key)) {
        return p;
    }
    Fields f(top.raw(key), top.sub(key));
    p.k = f.get("k", p.k);
    p.kappa_mips = f.get("kappa_mips", p.kappa_mips);
    if (f.has("u")) {
        p.u = parse_expression(f.raw("u"), f.sub("u"));
    }
    if (f.has("w")) {
        p.w = parse_expression(f.raw("w"), f.sub("w"));
    }
    p.mips_literal = f.get("mips_literal", p.mips_literal);
    p.series_terms = f.get("series_terms", p.series_terms);
    f.finish();
    return p;
}

struct Common {
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out_dir = "out";
    bool dry_run = false;
};

// Flags override config values.
struct Flags {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out_dir;
    bool dry_run = false;
};

Common parse_common(Fields& f, const Flags& flags) {
    Common c;
    c.seed = f.get<std::uint64_t>("seed", c.seed);
    c.workers = f.get<unsigned>("workers", c.workers);
    c.out_dir = f.get<std::string>("out_dir", c.out_dir);
    if (flags.seed) {
        c.seed = *flags.seed;
    }
    if (flags.workers) {
        c.workers = *flags.workers;
    }
    if (flags.out_dir) {
        c.out_dir = *flags.out_dir;
    }
    c.dry_run = flags.dry_run;
    if (c.workers == 0) {
        config_error("workers", "must be at least 1");
    }
    return c;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Config, "cannot open config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail(ErrorCode::Config, path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) {
        fail(ErrorCode::InvalidArgument, "cannot write '" + p.string() + "'");
    }
    return os;
}

void save_config(const fs::path& dir, json cfg, const Common& c) {
    cfg["seed"] = c.seed;
    cfg["out_dir"] = c.out_dir;
    cfg.erase("workers");
    auto os = open_out(dir / "config.json");
    os << cfg.dump(2) << '\n';
}

// ---------------------------------------------------------------- subcommands
//
// Each command parses and validates in prepare() (config errors, exit 2) and
// computes in execute() (runtime errors, exit 1).

struct Command {
    virtual ~Command() = default;
    virtual void execute(std::ostream& out) = 0;
};

struct SimulateCmd : Command {
    json cfg;
    Common common;
    Preset preset;
    std::string system = "fast";
    double epsilon = 0.1;
    double T = 1.0;
    double dt = 0.0;
    std::size_t n_paths = 1000;
    bool record = false;
    std::size_t record_every = 1;

    SimulateCmd(const json& j, const Flags& flags) : cfg(j) {
        Fields f(j, "");
        common = parse_common(f, flags);
        const std::string name = f.need<std::string>("preset");
        PresetParams params = parse_params(f, "params");
        epsilon = f.get("epsilon", params.epsilon);
        params.epsilon = epsilon;
        system = f.get<std::string>("system", system);
        if (system != "fast" && system != "limit") {
            config_error("system", "expected 'fast' or 'limit'");
        }
        T = f.get("T", T);
        const bool has_dt = f.has("dt");
        const bool has_cdt = f.has("c_dt");
        if (has_dt && has_cdt) {
            config_error("dt", "give either dt or c_dt, not both");
        }
        if (has_dt) {
            dt = f.need<double>("dt");
        } else {
            const double c_dt = f.get("c_dt", 0.1);
            dt = system == "fast" ? c_dt * epsilon * epsilon : 1e-3;
        }
        n_paths = f.get<std::size_t>("n_paths", n_paths);
        record = f.get("record_paths", record);
        record_every = f.get<std::size_t>("record_every", record_every);
        f.finish();
        if (!(T > 0.0) || !(dt > 0.0)) {
            config_error("T", "T and dt must be positive");
        }
        if (n_paths < 1 || record_every < 1) {
            config_error("n_paths", "n_paths and record_every must be at least 1");
        }
        try {
            preset = make_preset(name, params);
        } catch (const Error& e) {
            config_error("preset", e.what());
        }
    }

    void execute(std::ostream& out) override {
        EnsembleOptions eo;
        eo.workers = common.workers;
        eo.record_paths = record;
        eo.record_every = record_every;
        PathEnsemble ens;
        std::string layout;
        if (system == "fast") {
            const FastSystem fsys = preset.fast();
            layout = fsys.layout;
            ens = simulate_ensemble(fsys.sys, preset.fast_initial(), T, dt, n_paths, common.seed, eo);
        } else {
            ens = simulate_ensemble(preset.limit.stratonovich(), preset.limit_initial(), T, dt, n_paths,
                                    common.seed, eo);
        }
        const fs::path dir(common.out_dir);
        fs::create_directories(dir);
        save_config(dir, cfg, common);
        {
            auto os = open_out(dir / "terminal.csv");
            ens.write_csv(os);
        }
        if (record) {
            auto os = open_out(dir / "paths.jsonl");
            ens.write_paths_jsonl(os);
        }
        out << "simulate: preset=" << preset.name << " system=" << system << " paths=" << ens.n_paths
            << " steps=" << ens.n_steps << " dropped=" << ens.n_flagged() << " (" << num(ens.drop_rate())
            << ") seed=" << common.seed << " out=" << (dir / "terminal.csv").string() << '\n';
        if (ens.drop_rate() > 0.5) {
            fail(ErrorCode::NonFinite, "more than half of the paths were dropped");
        }
    }
};

void write_form_rows(std::ostream& os, const std::vector<std::tuple<int, int, double, std::string, double>>& rows) {
    os << "alpha,beta,value,method,stderr\n";
    for (const auto& [a, b, v, m, se] : rows) {
        os << a << ',' << b << ',' << num(v) << ',' << m << ',' << num(se) << '\n';
    }
}

struct CovarianceCmd : Command {
    json cfg;
    Common common;
    std::vector<TrigPoly> drivers;

    CovarianceCmd(const json& j, const Flags& flags) : cfg(j) {
        Fields f(j, "");
        common = parse_common(f, flags);
        const json& d = f.raw("drivers");
        if (!d.is_array() || d.empty()) {
            config_error("drivers", "expected a nonempty list of drivers");
        }
        for (std::size_t i = 0; i < d.size(); ++i) {
            drivers.push_back(parse_trig(d[i], "drivers[" + std::to_string(i) + "]"));
        }
        f.finish();
        for (std::size_t i = 0; i < drivers.size(); ++i) {
            if (!drivers[i].is_mean_zero()) {
                config_error("drivers[" + std::to_string(i) + "]", "driver must have zero mean");
            }
            if (drivers[i].period() != drivers[0].period()) {
                config_error("drivers[" + std::to_string(i) + "]", "all drivers must share one period");
            }
        }
    }

    void execute(std::ostream& out) override {
        const CovarianceForm c = amplitude_wiener_special_case(drivers);
        std::vector<std::tuple<int, int, double, std::string, double>> rows;
        for (Eigen::Index a = 0; a < c.matrix().rows(); ++a) {
            for (Eigen::Index b = 0; b < c.matrix().cols(); ++b) {
                rows.emplace_back(a + 1, b + 1, c.matrix()(a, b), "gram", 0.0);
            }
        }
        for (Eigen::Index a = 0; a < c.sqrt().rows(); ++a) {
            for (Eigen::Index b = 0; b < c.sqrt().cols(); ++b) {
                rows.emplace_back(a + 1, b + 1, c.sqrt()(a, b), "sqrt", 0.0);
            }
        }
        const fs::path dir(common.out_dir);
        fs::create_directories(dir);
        save_config(dir, cfg, common);
        {
            auto os = open_out(dir / "covariance.csv");
            write_form_rows(os, rows);
        }
        write_form_rows(out, rows);
        out << "covariance: drivers=" << drivers.size() << " seed=" << common.seed
            << " out=" << (dir / "covariance.csv").string() << '\n';
    }
};

struct FormCmd : Command {
    json cfg;
    Common common;
    bool has_config = false;
    std::string method = "all";
    std::string driving = "integrated";
    int k = 1;
    int l = 1;
    std::size_t n_terms = 0;
    std::vector<TrigPoly> trig;
    std::vector<ExpressionSpec> exprs;
    PotentialSpec potential;
    ExpressionSpec rho{"affine", 0.0, 1.0, 1.0, {}, Vec::Ones(1)};
    GridParams grid;
    SemigroupMcOptions mc;

    FormCmd(const json& j, const Flags& flags, bool from_file, const std::optional<std::string>& m_flag,
            std::optional<int> k_flag, std::optional<int> l_flag)
        : cfg(j), has_config(from_file) {
        Fields f(j, "");
        common = parse_common(f, flags);
        method = f.get<std::string>("method", method);
        driving = f.get<std::string>("driving", driving);
        k = f.get("k", k);
        l = f.get("l", l);
        n_terms = f.get<std::size_t>("n_terms", n_terms);
        if (f.has("drivers")) {
            const json& d = f.raw("drivers");
            if (!d.is_array()) {
                config_error("drivers", "expected a list");
            }
            for (std::size_t i = 0; i < d.size(); ++i) {
                const std::string p = "drivers[" + std::to_string(i) + "]";
                if (driving == "integrated") {
                    trig.push_back(parse_trig(d[i], p));
                } else {
                    exprs.push_back(parse_expression(d[i], p));
                }
            }
        }
        if (f.has("potential")) {
            potential = parse_potential(f.raw("potential"), "potential");
        }
        if (f.has("rho")) {
            rho = parse_expression(f.raw("rho"), "rho");
        }
        if (f.has("grid")) {
            grid = parse_grid(f.raw("grid"), "grid");
        }
        if (f.has("mc")) {
            Fields m(f.raw("mc"), "mc");
            mc.t_max = m.get("t_max", mc.t_max);
            mc.dt = m.get("dt", mc.dt);
            mc.n_paths = m.get<std::size_t>("n_paths", mc.n_paths);
            m.finish();
        }
        f.finish();
        if (m_flag) {
            method = *m_flag;
        }
        if (k_flag) {
            k = *k_flag;
        }
        if (l_flag) {
            l = *l_flag;
        }
        static const std::set<std::string> methods{"all", "ou-series", "grid", "mc"};
        if (methods.count(method) == 0) {
            config_error("method", "expected one of all, ou-series, grid, mc");
        }
        if (driving != "integrated" && driving != "ergodic") {
            config_error("driving", "expected 'integrated' or 'ergodic'");
        }
        if (method != "ou-series" && trig.empty() && exprs.empty()) {
            if (driving == "integrated") {
                trig.push_back(TrigPoly::cosine());
            } else {
                ExpressionSpec z{"affine", 0.0, 1.0, 1.0, {}, Vec::Ones(1)};
                exprs.push_back(z);
            }
        }
        for (std::size_t i = 0; i < trig.size(); ++i) {
            if (!trig[i].is_mean_zero()) {
                config_error("drivers[" + std::to_string(i) + "]", "driver must have zero mean");
            }
        }
        if (mc.n_paths < 2 || !(mc.dt > 0.0) || !(mc.t_max > 0.0)) {
            config_error("mc", "need n_paths >= 2 and positive dt, t_max");
        }
        mc.seed = common.seed;
        mc.workers = common.workers;
    }

    void execute(std::ostream& out) override {
        using Row = std::tuple<int, int, double, std::string, double>;
        std::vector<Row> rows;
        const bool want_series = method == "ou-series" || method == "all";
        const bool want_grid = method == "grid" || method == "all";
        const bool want_mc = method == "mc" || method == "all";

        if (method == "ou-series" && trig.empty() && exprs.empty()) {
            rows.emplace_back(k, l, ou_integrated_form(k, l, n_terms).real(), "ou-series", 0.0);
        }
        const std::size_t nd = driving == "integrated" ? trig.size() : exprs.size();
        if (nd > 0) {
            const ScalarField U = make_potential(potential, 1);
            const SchrodingerGrid1D g(U, grid);
            const ScalarField r = make_expression(rho, 1);
            std::optional<GkTable> table;
            if (driving == "integrated" && want_grid) {
                std::set<int> ks;
                for (const auto& p : trig) {
                    for (const auto& [kk, c] : p.coeffs()) {
                        if (kk != 0) {
                            ks.insert(std::abs(kk));
                        }
                    }
                }
                table.emplace(g, [&r](double z) { return r.value1(z); }, std::vector<int>(ks.begin(), ks.end()),
                              trig.front().period());
            }
            const bool is_ou = potential.kind == "quadratic" && potential.scale == 1.0 && rho.kind == "affine" &&
                               rho.offset == 0.0 && rho.coeffs.size() == 1 && rho.coeffs(0) == 1.0;
            for (std::size_t a = 0; a < nd; ++a) {
                for (std::size_t b = 0; b < nd; ++b) {
                    const int ia = static_cast<int>(a + 1);
                    const int ib = static_cast<int>(b + 1);
                    if (driving == "integrated") {
                        if (want_series && is_ou && trig[a].period() == kTwoPi && trig[b].period() == kTwoPi) {
                            Complex s{0.0, 0.0};
                            for (const auto& [kk, c2] : trig[b].coeffs()) {
                                s += trig[a].coeff(-kk) * c2 * ou_integrated_form(kk, kk, n_terms);
                            }
                            rows.emplace_back(ia, ib, s.real(), "ou-series", 0.0);
                        }
                        if (table) {
                            rows.emplace_back(ia, ib, form_integrated(trig[a], trig[b], *table).real(), "grid", 0.0);
                        }
                        if (want_mc) {
                            const TrigPoly pa = trig[a];
                            const TrigPoly pb = trig[b];
                            SemigroupMcOptions o = mc;
                            o.periodic = {{0, pa.period()}};
                            const McEstimate e = semigroup_mc_form([pa](ConstVecRef s) { return pa.eval(s(0)); },
                                                                   [pb](ConstVecRef s) { return pb.eval(s(0)); },
                                                                   integrated_driving(r, U),
                                                                   integrated_invariant_sampler(g, pa.period()), o);
                            rows.emplace_back(ia, ib, e.value, "mc", e.std_error);
                        }
                    } else {
                        const ScalarField fa = make_expression(exprs[a], 1);
                        const ScalarField fb = make_expression(exprs[b], 1);
                        if (want_grid) {
                            const ErgodicForm ef = form_ergodic_1d([&fa](double z) { return fa.value1(z); },
                                                                   [&fb](double z) { return fb.value1(z); }, g);
                            rows.emplace_back(ia, ib, ef.value, "grid", 0.0);
                        }
                        if (want_mc) {
                            auto zs = std::make_shared<GridSampler1D>(g.sampler());
                            const McEstimate e = semigroup_mc_form(
                                [fa](ConstVecRef s) { return fa(s); }, [fb](ConstVecRef s) { return fb(s); },
                                DiffusionSpec::gradient(U), [zs](CounterRng& rng, VecRef s) { s(0) = zs->sample(rng); },
                                mc);
                            rows.emplace_back(ia, ib, e.value, "mc", e.std_error);
                        }
                    }
                }
            }
        }
        write_form_rows(out, rows);
        if (has_config) {
            const fs::path dir(common.out_dir);
            fs::create_directories(dir);
            save_config(dir, cfg, common);
            auto os = open_out(dir / "forms.csv");
            write_form_rows(os, rows);
        }
        out << "form: method=" << method << " rows=" << rows.size() << " seed=" << common.seed << '\n';
    }
};

struct ConvergeCmd : Command {
    json cfg;
    Common common;
    std::string name;
    PresetParams params;
    LadderConfig ladder;
    Preset preset;

    ConvergeCmd(const json& j, const Flags& flags) : cfg(j) {
        Fields f(j, "");
        common = parse_common(f, flags);
        name = f.need<std::string>("preset");
        params = parse_params(f, "params");
        if (f.has("ladder")) {
            Fields l(f.raw("ladder"), "ladder");
            if (l.has("epsilons")) {
                const Vec e = to_vec(l.raw("epsilons"), "ladder.epsilons");
                ladder.epsilons.assign(e.data(), e.data() + e.size());
            }
            ladder.T = l.get("T", ladder.T);
            ladder.c_dt = l.get("c_dt", ladder.c_dt);
            ladder.min_steps = l.get<std::size_t>("min_steps", ladder.min_steps);
            ladder.dt_limit = l.get("dt_limit", ladder.dt_limit);
            ladder.n_paths = l.get<std::size_t>("n_paths", ladder.n_paths);
            if (l.has("observables")) {
                const json& o = l.raw("observables");
                if (!o.is_array()) {
                    config_error("ladder.observables", "expected a list of names");
                }
                ladder.observables.clear();
                for (const auto& s : o) {
                    if (!s.is_string()) {
                        config_error("ladder.observables", "expected a list of names");
                    }
                    ladder.observables.push_back(s.get<std::string>());
                }
            }
            const std::string phase = l.get<std::string>("phase", "uniform");
            if (phase == "uniform") {
                ladder.phase = PhaseInit::Uniform;
            } else if (phase == "driver") {
                ladder.phase = PhaseInit::FromDriver;
            } else {
                config_error("ladder.phase", "expected 'uniform' or 'driver'");
            }
            ladder.ks_alpha = l.get("ks_alpha", ladder.ks_alpha);
            l.finish();
        }
        f.finish();
        ladder.seed = common.seed;
        ladder.workers = common.workers;
        try {
            ladder.validate();
            preset = make_preset(name, params);
            for (const auto& o : ladder.observables) {
                make_observable(o, preset.dim_x());
            }
        } catch (const Error& e) {
            config_error("", e.what());
        }
    }

    void execute(std::ostream& out) override {
        const PresetParams base = params;
        const std::string nm = name;
        const PhaseInit phase = ladder.phase;
        FastBuilder builder = [nm, base, phase](double eps) {
            PresetParams p = base;
            p.epsilon = eps;
            const Preset pr = make_preset(nm, p);
            return std::make_pair(pr.fast(), pr.fast_initial(phase));
        };
        const EnsembleReport rep =
            run_ladder(builder, preset.limit.stratonovich(), preset.limit_initial(), preset.dim_x(), ladder);
        const fs::path dir(common.out_dir);
        fs::create_directories(dir);
        save_config(dir, cfg, common);
        {
            auto os = open_out(dir / "report.csv");
            rep.write_csv(os);
        }
        {
            auto os = open_out(dir / "report.json");
            rep.write_json(os);
        }
        out << "converge: preset=" << name << " rungs=" << rep.rungs.size() << " paths=" << ladder.n_paths
            << " seed=" << common.seed << " out=" << (dir / "report.csv").string() << '\n';
        for (const auto& r : rep.rungs) {
            if (r.aborted) {
                fail(ErrorCode::NonFinite, "rung eps=" + num(r.epsilon) + " lost more than half of its paths");
            }
        }
    }
};

int dispatch(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Flags flags;
    std::string config_path;
    std::string preset_name;
    bool describe = false;
    std::optional<std::string> method;
    std::optional<int> k_flag;
    std::optional<int> l_flag;

    auto add_common = [&](CLI::App* s) {
        s->add_option("--seed", flags.seed, "master seed");
        s->add_option("--out-dir", flags.out_dir, "output directory");
        s->add_option("--workers", flags.workers, "worker threads");
        s->add_flag("--dry-run", flags.dry_run, "validate the config and exit");
    };
    auto* sim = app.add_subcommand("simulate", "simulate a fast or limit ensemble");
    sim->add_option("config", config_path, "config file")->required();
    add_common(sim);
    auto* cov = app.add_subcommand("covariance", "Gram matrix of driver antiderivatives");
    cov->add_option("config", config_path, "config file")->required();
    add_common(cov);
    auto* form = app.add_subcommand("form", "limit covariance forms side by side");
    form->add_option("config", config_path, "config file");
    form->add_option("--method", method, "all, ou-series, grid or mc");
    form->add_option("--k", k_flag, "frequency k");
    form->add_option("--l", l_flag, "frequency l");
    add_common(form);
    auto* conv = app.add_subcommand("converge", "convergence ladder report");
    conv->add_option("config", config_path, "config file")->required();
    add_common(conv);
    auto* pre = app.add_subcommand("preset", "list or describe presets");
    pre->add_option("name", preset_name, "preset name, or 'list'");
    pre->add_flag("--describe", describe, "print the fast and limit equations");
    app.require_subcommand(1);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    std::unique_ptr<Command> cmd;
    try {
        if (pre->parsed()) {
            if (preset_name.empty() || preset_name == "list") {
                for (const auto& n : preset_names()) {
                    out << n << '\n';
                }
                return 0;
            }
            if (describe) {
                out << describe_preset(preset_name);
            } else {
                (void)make_preset(preset_name);
                out << preset_name << '\n';
            }
            return 0;
        }
        json cfg = json::object();
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        }
        if (sim->parsed()) {
            cmd = std::make_unique<SimulateCmd>(cfg, flags);
        } else if (cov->parsed()) {
            cmd = std::make_unique<CovarianceCmd>(cfg, flags);
        } else if (form->parsed()) {
            cmd = std::make_unique<FormCmd>(cfg, flags, !config_path.empty(), method, k_flag, l_flag);
        } else {
            cmd = std::make_unique<ConvergeCmd>(cfg, flags);
        }
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    if (flags.dry_run) {
        out << "dry-run: config ok\n";
        return 0;
    }
    try {
        cmd->execute(out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"splitsde: fast-oscillation SDE limits, covariance forms and convergence checks"};
    app.name("splitsde");
    return dispatch(app, args, out, err);
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace splitsde::cli
