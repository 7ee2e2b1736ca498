#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "splitsde/periodic.hpp"
#include "splitsde/sde.hpp"
#include "splitsde/vector_field.hpp"

namespace splitsde {

/// dM = μ(M)dt + Σ_k σ_k(M) dW_k.
struct DiffusionSpec {
    std::size_t dim = 0;
    VectorField mu;
    std::vector<VectorField> sigma;

    [[nodiscard]] std::size_t noise_dim() const noexcept { return sigma.size(); }
    void validate() const;

    /// Standard Wiener process in R^dim.
    static DiffusionSpec wiener(std::size_t dim = 1);
    /// dM = -∇U(M)dt + dW; invariant density proportional to exp(-2U).
    static DiffusionSpec gradient(const ScalarField& U);
};

/// One x-dependent coefficient times a trigonometric polynomial in the phase.
struct DriftTerm {
    VectorField field;
    TrigPoly poly;
};

/// b(x, θ) = base(x) + Σ_j field_j(x)·poly_j(θ).
struct PeriodicDrift {
    std::size_t dim_x = 0;
    VectorField base;
    std::vector<DriftTerm> terms;

    static PeriodicDrift zero(std::size_t dim_x);
    void validate(double period) const;
    void eval(ConstVecRef x, double theta, VecRef out) const;
    /// b̄(x) = (1/P)∫b(x,θ)dθ, using average_over_period on each monomial.
    [[nodiscard]] VectorField averaged() const;
};

/// b(x, m) = base(x) + Σ_j field_j(x)·psi_j(m) for a non-periodic driver m.
struct StateDriftTerm {
    VectorField field;
    ScalarField psi;
};

struct StateDrift {
    std::size_t dim_x = 0;
    VectorField base;
    std::vector<StateDriftTerm> terms;

    static StateDrift zero(std::size_t dim_x);
    void eval(ConstVecRef x, ConstVecRef m, VecRef out) const;
    /// base + Σ field_j·means[j].
    [[nodiscard]] VectorField averaged(const std::vector<double>& means) const;
};

struct AmplitudeScalingSpec {
    std::size_t dim_x = 0;
    PeriodicDrift b;
    std::vector<VectorField> v;
    std::vector<TrigPoly> phi;
    ScalarField vartheta;
    DiffusionSpec m;
    double epsilon = 1.0;
    double kappa_min = 1e-8;

    [[nodiscard]] double period() const;
    void validate() const;
};

struct TimeScalingSpec {
    std::size_t dim_x = 0;
    StateDrift b;
    std::vector<VectorField> v;
    std::vector<ScalarField> phi;
    DiffusionSpec m;
    double epsilon = 1.0;

    void validate() const;
};

/// Driving pair dM = ρ(Z)dt, dZ = -∇U(Z)dt + dW, time-scaled by ε.
struct IntegratedNoiseSpec {
    std::size_t dim_x = 0;
    PeriodicDrift b;
    std::vector<VectorField> v;
    std::vector<TrigPoly> phi;
    ScalarField rho;
    ScalarField U;
    double epsilon = 1.0;

    [[nodiscard]] std::size_t dim_z() const { return U.dim(); }
    [[nodiscard]] double period() const;
    void validate() const;
};

struct KappaInfo {
    double kappa = 0.0;
    /// ς_k = ∇ϑ·σ_k.
    Vec varsigma;
    /// ∇ϑ·μ + ½ Σ_k σ_kᵀ (∇∇ϑ) σ_k.
    double rho = 0.0;
};

KappaInfo kappa(const AmplitudeScalingSpec& spec, ConstVecRef m);

/// A fast system with the slow coordinates X stored first.
struct FastSystem {
    ItoSystem sys;
    std::size_t dim_x = 0;
    /// Human-readable state layout, e.g. "x1,x2,theta,m1".
    std::string layout;
};

/// State (X, Θ, M); Θ is kept modulo P. Paths with κ(M) < kappa_min are flagged.
FastSystem build_amplitude_fast(const AmplitudeScalingSpec& spec);
/// State (X, M^ε) with M^ε(t) = M(t/ε²).
FastSystem build_time_fast(const TimeScalingSpec& spec);
/// State (X, M, Z); M is kept modulo P. Throws PotentialInvalid.
FastSystem build_integrated_noise_fast(const IntegratedNoiseSpec& spec);

enum class PhaseInit { FromDriver, Uniform };

/// Initial state for the amplitude fast system: Θ₀ = ϑ(m₀)/ε mod P, or uniform on [0, P).
InitialCondition amplitude_initial(const AmplitudeScalingSpec& spec, const Vec& x0, const Vec& m0,
                                   PhaseInit phase = PhaseInit::Uniform);
/// M₀ uniform on [0, P), Z₀ from the invariant density of Z (one-dimensional Z only).
InitialCondition integrated_initial(const IntegratedNoiseSpec& spec, const Vec& x0);

/// Limiting Stratonovich system for the slow coordinates.
///
/// Time scaling: dX = b̄ dt + gain Σ v_α ∘ dB_α with constant gain √2.
/// Amplitude scaling: gain 2/κ(M) and the state is (X, M).
struct LimitSystemSpec {
    std::size_t dim_x = 0;
    VectorField b_bar;
    std::vector<VectorField> v;
    CovarianceForm cov;
    double constant_gain = 1.4142135623730951;

    std::optional<DiffusionSpec> m;
    ScalarField vartheta;
    double kappa_min = 1e-8;

    [[nodiscard]] bool coupled() const { return m.has_value(); }
    [[nodiscard]] std::size_t state_dim() const { return dim_x + (m ? m->dim : 0); }
    void validate() const;

    /// Columns: gain·v_α for each α, then (coupled) the M columns σ_k;
    /// noise transform blockdiag(S, I). M's drift is stored in Stratonovich
    /// form so that ito() reproduces μ.
    [[nodiscard]] StratonovichSystem stratonovich() const;
    [[nodiscard]] ItoSystem ito() const { return strat_to_ito(stratonovich()); }
    /// gain·V(x)·S, the dim_x × d_B diffusion seen by X.
    [[nodiscard]] Mat effective_x_diffusion(ConstVecRef state) const;
    [[nodiscard]] double gain(ConstVecRef state) const;
};

LimitSystemSpec build_amplitude_limit(const AmplitudeScalingSpec& spec);
/// psi_means[j] = ∫ψ_j dμ under the invariant law of M.
LimitSystemSpec build_time_limit(const TimeScalingSpec& spec, const CovarianceForm& form_values,
                                 const std::vector<double>& psi_means);
/// Drift b₀ + Σ b_j ψ̂_j(0); M is uniform on the circle under the invariant law.
LimitSystemSpec build_time_limit(const IntegratedNoiseSpec& spec, const CovarianceForm& form_values);

struct PotentialReport {
    bool passed = false;
    double a = 0.0;
    double c = 0.0;
    double v_min = 0.0;
    std::vector<std::string> violations;
};

/// Checks U(z) ≥ a|z| - c with a > 0 and V = ½(|∇U|² - ΔU) bounded below and
/// increasing toward the boundary, on a grid of [-L, L]^d with n nodes per axis.
PotentialReport validate_potential(const ScalarField& U, double L = 10.0, std::size_t n = 401);

} // namespace splitsde
