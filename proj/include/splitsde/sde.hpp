#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "splitsde/rng.hpp"
#include "splitsde/vector_field.hpp"

namespace splitsde {

struct PeriodicCoord {
    std::size_t index = 0;
    double period = 0.0;
};

/// Path-level check; returning false flags the path (GuardFailed) and stops it.
using PathGuard = std::function<bool(ConstVecRef)>;

/// dX = a(X)dt + Σ_k b_k(X) dB_k with dB = T·dW, dW ~ N(0, I dt).
///
/// `columns` holds the b_k; `noise_transform` is T (columns.size() rows,
/// raw noise dimension columns). Without T the raw increments feed the
/// columns directly.
struct SdeSystem {
    std::size_t dim = 0;
    VectorField drift;
    std::vector<VectorField> columns;
    std::optional<Mat> noise_transform;
    std::vector<PeriodicCoord> periodic;
    PathGuard guard;

    [[nodiscard]] std::size_t raw_noise_dim() const;
    /// T, or the identity when absent.
    [[nodiscard]] Mat transform() const;
    /// Throws InvalidArgument on inconsistent dimensions.
    void validate() const;
};

struct ItoSystem : SdeSystem {};
struct StratonovichSystem : SdeSystem {};

/// x + a(x)dt + Σ b_k(x) dB_k. `dB` is already transformed (one entry per column).
/// Throws NonFinite. Periodic coordinates are not wrapped.
Vec euler_maruyama_step(const ItoSystem& sys, ConstVecRef x, double dt, ConstVecRef dB);

/// Stochastic Heun (predictor-corrector), consistent with the Stratonovich integral.
Vec heun_stratonovich_step(const StratonovichSystem& sys, ConstVecRef x, double dt, ConstVecRef dB);

/// Adds ½ Σ_γ (∇b_γ) b_γ over the effective columns b_γ = Σ_k T_{kγ} b_k.
ItoSystem strat_to_ito(const StratonovichSystem& sys);
/// Inverse of strat_to_ito.
StratonovichSystem ito_to_strat(const ItoSystem& sys);

/// The correction drift ½ Σ_{kl} (T Tᵀ)_{kl} (∇b_k) b_l at x.
Vec stratonovich_correction(const SdeSystem& sys, ConstVecRef x);

/// S·ξ·√dt with ξ standard normal drawn from `rng`.
Vec sample_correlated_increments(const Mat& s, double dt, CounterRng& rng);

/// Allocation-free stepping for one path at a time; not thread-safe.
class Stepper {
  public:
    enum class Scheme { EulerMaruyama, Heun };

    Stepper(const SdeSystem& sys, Scheme scheme);

    /// Draws the raw normals from `rng`, applies the noise transform and
    /// advances x by dt in place. Returns false (x untouched) on a non-finite result.
    bool step(VecRef x, double dt, CounterRng& rng);
    /// Advances with a given transformed increment.
    bool step_with(VecRef x, double dt, ConstVecRef dB);
    /// Wraps periodic coordinates into [0, P).
    void wrap(VecRef x) const;

  private:
    const SdeSystem& sys_;
    Scheme scheme_;
    Vec a_, a2_, b_, xt_, xn_, raw_, db_;
};

/// Fixed start or a sampler drawing from the path's own stream.
struct InitialCondition {
    Vec fixed;
    std::function<void(CounterRng&, VecRef)> sampler;

    static InitialCondition at(Vec x) { return {std::move(x), {}}; }
    static InitialCondition sampled(std::size_t dim, std::function<void(CounterRng&, VecRef)> f) {
        return {Vec::Zero(static_cast<Eigen::Index>(dim)), std::move(f)};
    }
};

struct EnsembleOptions {
    unsigned workers = 1;
    bool record_paths = false;
    std::size_t record_every = 1;
};

enum class PathStatus { Ok, NonFinite, GuardFailed };

/// Terminal states of an ensemble, one row per path.
struct PathEnsemble {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::size_t dim = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    Mat terminal;
    std::vector<PathStatus> status;
    /// Per path, one row per recorded step (only when record_paths is set).
    std::vector<Mat> paths;
    std::size_t record_every = 1;

    [[nodiscard]] std::size_t n_ok() const;
    [[nodiscard]] std::size_t n_flagged() const { return n_paths - n_ok(); }
    [[nodiscard]] double drop_rate() const;
    /// Terminal rows of Ok paths, in path order.
    [[nodiscard]] Mat ok_terminal() const;

    void write_csv(std::ostream& os) const;
    void write_paths_jsonl(std::ostream& os) const;
};

/// Number of steps for horizon T: ceil(T/dt) up to rounding; the used step is T/n.
std::size_t step_count(double T, double dt);

/// Path i draws from CounterRng(seed, i) only, so results do not depend on workers.
PathEnsemble simulate_ensemble(const ItoSystem& sys, const InitialCondition& x0, double T, double dt,
                               std::size_t n_paths, std::uint64_t seed, const EnsembleOptions& opts = {});
PathEnsemble simulate_ensemble(const StratonovichSystem& sys, const InitialCondition& x0, double T,
                               double dt, std::size_t n_paths, std::uint64_t seed,
                               const EnsembleOptions& opts = {});

/// Inverse-CDF sampler for a density proportional to w(z) on [z_min, z_max],
/// tabulated at n nodes with the CDF interpolated linearly.
class GridSampler1D {
  public:
    GridSampler1D() = default;
    GridSampler1D(const std::function<double(double)>& weight, double z_min, double z_max, std::size_t n);
    GridSampler1D(std::vector<double> nodes, const std::vector<double>& weights);

    [[nodiscard]] double sample(CounterRng& rng) const { return quantile(rng.uniform()); }
    [[nodiscard]] double quantile(double u) const;

  private:
    std::vector<double> z_;
    std::vector<double> cdf_;
};

/// Runs body(i) for i in [0, n) on `workers` threads in contiguous chunks.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

} // namespace splitsde
