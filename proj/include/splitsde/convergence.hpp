#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splitsde/scaling.hpp"
#include "splitsde/sde.hpp"

namespace splitsde {

/// Named scalar functional of the slow coordinates X.
struct Observable {
    std::string name;
    std::function<double(ConstVecRef)> f;
};

/// "x<i>" (1-based coordinate), "radius" (|X|), "x<i>^<p>" (integer moment),
/// "x<i>*x<j>" (product).
Observable make_observable(const std::string& name, std::size_t dim_x);

struct LadderConfig {
    /// Strictly decreasing, all in (0, 1].
    std::vector<double> epsilons{0.4, 0.2, 0.1};
    double T = 1.0;
    double c_dt = 0.1;
    /// Lower bound on the steps of every rung.
    std::size_t min_steps = 100;
    double dt_limit = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    std::vector<std::string> observables{"x1", "x2", "radius"};
    unsigned workers = 1;
    PhaseInit phase = PhaseInit::Uniform;
    /// Significance level of the two-sample KS critical value.
    double ks_alpha = 0.01;

    void validate() const;
    /// Steps for a rung: max(min_steps, ceil(T / (c_dt ε²))).
    [[nodiscard]] std::size_t steps_for(double epsilon) const;
};

struct ObservableStats {
    std::string name;
    double mean = 0.0;
    double mean_se = 0.0;
    double var = 0.0;
    double var_se = 0.0;
    /// |mean - mean_limit| with the combined standard error.
    double mean_disc = 0.0;
    double mean_disc_se = 0.0;
    double var_disc = 0.0;
    double var_disc_se = 0.0;
    double ks = 0.0;
};

struct RungReport {
    double epsilon = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::size_t n_ok = 0;
    double blowup_fraction = 0.0;
    bool aborted = false;
    std::vector<ObservableStats> obs;
    /// Covariance matrix of the observables.
    Mat cov;
    /// ‖Cov - Cov_limit‖_F / ‖Cov_limit‖_F.
    double cov_rel_disc = 0.0;
    double ks_critical = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

struct ObservableFit {
    std::string observable;
    std::string stat;
    std::optional<RateFit> fit;
    /// Why no fit was produced.
    std::string note;
};

struct EnsembleReport {
    LadderConfig config;
    RungReport limit;
    std::vector<RungReport> rungs;
    std::vector<ObservableFit> fits;

    /// Rows `epsilon,observable,stat,value,stderr`; the limit ensemble has epsilon 0.
    void write_csv(std::ostream& os) const;
    void write_json(std::ostream& os) const;
};

/// Builds the fast system and its initial condition at a given ε.
using FastBuilder = std::function<std::pair<FastSystem, InitialCondition>(double epsilon)>;

/// Simulates the limit once (Heun on the Stratonovich form at dt_limit) and
/// each fast rung (Euler-Maruyama), then compares terminal observables.
EnsembleReport run_ladder(const FastBuilder& fast_builder, const StratonovichSystem& limit,
                          const InitialCondition& limit_x0, std::size_t dim_x, const LadderConfig& cfg);

/// Two-sample Kolmogorov-Smirnov statistic. Throws EmptySample.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// c(α)·sqrt((n+m)/(nm)) with c(α) = sqrt(-½ ln(α/2)).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

/// Least squares on (log ε, log error). Throws DegenerateFit when an error is 0.
RateFit rate_fit(const std::vector<double>& errors, const std::vector<double>& epsilons);

/// Non-increasing within slack: d[i+1] <= d[i] + slack·sqrt(se[i]² + se[i+1]²).
bool non_increasing_within(const std::vector<double>& d, const std::vector<double>& se, double slack);

} // namespace splitsde
