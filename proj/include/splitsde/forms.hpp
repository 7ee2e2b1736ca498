#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <vector>

#include "splitsde/periodic.hpp"
#include "splitsde/scaling.hpp"
#include "splitsde/sde.hpp"
#include "splitsde/vector_field.hpp"

namespace splitsde {

struct GridParams {
    double z_min = -8.0;
    double z_max = 8.0;
    std::size_t n = 4000;
    /// Relative bound on ‖H e^{-U}‖_∞ / ‖e^{-U}‖_∞ for the central-difference H.
    double consistency_tol = 1e-5;
};

/// Uniform grid for H = -½ d²/dz² + V, V = ½(U'² - U''), on [z_min, z_max]
/// with homogeneous Dirichlet ends. The ground state e^{-U} is used analytically.
class SchrodingerGrid1D {
  public:
    /// Throws GridTooCoarse when the domain is too short for the weight or the
    /// consistency residual exceeds the tolerance.
    explicit SchrodingerGrid1D(const ScalarField& U, GridParams params = {});

    [[nodiscard]] std::size_t size() const noexcept { return z_.size(); }
    [[nodiscard]] double step() const noexcept { return h_; }
    [[nodiscard]] const GridParams& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<double>& z() const noexcept { return z_; }
    [[nodiscard]] const std::vector<double>& u() const noexcept { return u_; }
    [[nodiscard]] const std::vector<double>& v() const noexcept { return v_; }
    /// e^{-U}, shifted so that max U on the grid does not overflow.
    [[nodiscard]] const std::vector<double>& ground() const noexcept { return q_; }
    /// e^{-2U}.
    [[nodiscard]] const std::vector<double>& weight() const noexcept { return w_; }
    /// K = Σ w Δz.
    [[nodiscard]] double normalization() const noexcept { return K_; }
    [[nodiscard]] double v_min() const noexcept { return v_min_; }
    [[nodiscard]] double consistency_residual() const noexcept { return residual_; }

    /// ∫ f e^{-2U} dz / K on the grid.
    [[nodiscard]] double expectation(const std::function<double(double)>& f) const;
    [[nodiscard]] std::vector<double> tabulate(const std::function<double(double)>& f) const;
    /// Draws from e^{-2U}/K by inverse CDF.
    [[nodiscard]] GridSampler1D sampler() const;

    /// U at the ghost nodes z_min - h and z_max + h.
    [[nodiscard]] double u_left_ghost() const noexcept { return u_ghost_l_; }
    [[nodiscard]] double u_right_ghost() const noexcept { return u_ghost_r_; }

  private:
    GridParams params_;
    double h_ = 0.0;
    std::vector<double> z_, u_, v_, q_, w_;
    double u_shift_ = 0.0;
    double u_ghost_l_ = 0.0;
    double u_ghost_r_ = 0.0;
    double K_ = 0.0;
    double v_min_ = 0.0;
    double residual_ = 0.0;
};

struct ErgodicForm {
    double value = 0.0;
    /// Means removed from φ and ψ before the solve.
    double removed_mean_phi = 0.0;
    double removed_mean_psi = 0.0;
};

/// (1/K) ∫ (e^{-U}φ) H⁻¹ (e^{-U}ψ) dz, with the form taken on mean-zero parts.
ErgodicForm form_ergodic_1d(const std::vector<double>& phi, const std::vector<double>& psi,
                            const SchrodingerGrid1D& grid);
ErgodicForm form_ergodic_1d(const std::function<double(double)>& phi, const std::function<double(double)>& psi,
                            const SchrodingerGrid1D& grid);

struct GkSolution {
    int k = 0;
    Complex gbar;
    /// g_k on the grid nodes.
    std::vector<Complex> g;
};

/// Solves (½∂² - U'∂ + ikωρ) g = 1, ω = 2π/P, through φ = e^{-U} g and a
/// fourth-order Numerov discretization of (H - ikωρ)φ = -e^{-U}.
/// ḡ_k = ∫ g e^{-2U} / K. Throws SolverSingular.
GkSolution solve_gk(const SchrodingerGrid1D& grid, const std::vector<double>& rho, int k,
                    double period = 2.0 * std::numbers::pi);

class GkTable {
  public:
    GkTable() = default;
    /// Solves for every k in `ks` and its negative.
    GkTable(const SchrodingerGrid1D& grid, const std::function<double(double)>& rho, const std::vector<int>& ks,
            double period = 2.0 * std::numbers::pi);

    [[nodiscard]] bool has(int k) const { return table_.count(k) > 0; }
    /// Throws MissingFrequency.
    [[nodiscard]] Complex gbar(int k) const;
    [[nodiscard]] const GkSolution& solution(int k) const;
    [[nodiscard]] std::vector<int> frequencies() const;
    [[nodiscard]] double period() const noexcept { return period_; }

    void insert(GkSolution s);
    void write_csv(std::ostream& os) const;

  private:
    std::map<int, GkSolution> table_;
    double period_ = 2.0 * std::numbers::pi;
};

/// -Σ_k φ̂₁(-k) φ̂₂(k) ḡ_k. Throws NonZeroMean, PeriodMismatch, MissingFrequency.
Complex form_integrated(const TrigPoly& phi1, const TrigPoly& phi2, const GkTable& table);

/// ⟨e^{iℓm}, e^{ikm}⟩ for dM = Z dt, dZ = -Z dt + dW:
/// δ_{kℓ} e^{k²/2} Σ_n (-1)ⁿ k^{2n} / ((n + k²/2) 2ⁿ n!).
/// n_terms = 0 sums until the next term is below 1e-14 of the partial sum.
Complex ou_integrated_form(int k, int l, std::size_t n_terms = 0);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_dropped = 0;
};

using StateFunction = std::function<double(ConstVecRef)>;
using StateSampler = std::function<void(CounterRng&, VecRef)>;

struct SemigroupMcOptions {
    double t_max = 20.0;
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    /// Coordinates kept modulo a period during the Euler steps.
    std::vector<PeriodicCoord> periodic;
};

/// ∫₀^{t_max} E[φ(M₀) (ψ(M_t) - ψ̄)] dt with M₀ drawn from the invariant sampler,
/// Euler-Maruyama paths and trapezoid time quadrature. ψ̄ is the sample mean of
/// ψ(M₀). This equals the generator-inverse form -∫φ A⁻¹ψ dμ for mean-zero ψ.
McEstimate semigroup_mc_form(const StateFunction& phi, const StateFunction& psi, const DiffusionSpec& m,
                             const StateSampler& invariant_sampler, const SemigroupMcOptions& opts);

/// The pair (M, Z) with dM = ρ(Z)dt, dZ = -∇U(Z)dt + dW as one diffusion, state (m, z).
DiffusionSpec integrated_driving(const ScalarField& rho, const ScalarField& U);

/// Samples (m, z) with m uniform on [0, P) and z from the grid's invariant density.
StateSampler integrated_invariant_sampler(const SchrodingerGrid1D& grid, double period = 2.0 * std::numbers::pi);

/// Gram matrix of the mean-zero antiderivatives of the drivers.
CovarianceForm amplitude_wiener_special_case(const std::vector<TrigPoly>& phi);

} // namespace splitsde
