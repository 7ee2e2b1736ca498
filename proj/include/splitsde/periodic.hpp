#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace splitsde {

using Complex = std::complex<double>;

/// P-periodic trigonometric polynomial  f(θ) = Σ_k c_k exp(i k ω θ),  ω = 2π/P.
///
/// Real-valued polynomials carry conjugate-symmetric coefficients
/// (c_{-k} = conj(c_k)); the constructor completes a missing partner and
/// rejects an inconsistent one.
class TrigPoly {
  public:
    TrigPoly() = default;
    TrigPoly(double period, std::map<int, Complex> coeffs, bool real_valued = true);

    static TrigPoly cosine(int k = 1, double period = 2.0 * std::numbers::pi, double amplitude = 1.0);
    static TrigPoly sine(int k = 1, double period = 2.0 * std::numbers::pi, double amplitude = 1.0);
    static TrigPoly constant(double value, double period = 2.0 * std::numbers::pi);
    static TrigPoly zero(double period = 2.0 * std::numbers::pi) { return constant(0.0, period); }

    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] double base_frequency() const noexcept { return 2.0 * std::numbers::pi / period_; }
    [[nodiscard]] bool real_valued() const noexcept { return real_valued_; }
    [[nodiscard]] const std::map<int, Complex>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] Complex coeff(int k) const;
    [[nodiscard]] int max_frequency() const;
    [[nodiscard]] double l1_norm() const;

    /// φ̂(0); the mean over one period.
    [[nodiscard]] Complex mean() const { return coeff(0); }
    [[nodiscard]] bool is_mean_zero() const { return coeff(0) == Complex{0.0, 0.0}; }
    [[nodiscard]] bool is_zero() const;

    [[nodiscard]] Complex eval_complex(double theta) const;
    /// Real value; requires a real-valued polynomial.
    [[nodiscard]] double eval(double theta) const;
    double operator()(double theta) const { return eval(theta); }
    [[nodiscard]] double derivative(double theta) const;

    TrigPoly& operator+=(const TrigPoly& other);
    TrigPoly& operator*=(double s);
    friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
    friend TrigPoly operator*(double s, TrigPoly a) { return a *= s; }

  private:
    double period_ = 2.0 * std::numbers::pi;
    std::map<int, Complex> coeffs_;
    bool real_valued_ = true;
};

/// Covariance matrix C of a multivariate Wiener driver with its symmetric PSD root S.
class CovarianceForm {
  public:
    CovarianceForm() = default;
    /// Symmetrizes C and computes S = psd_sqrt(C); throws NotPSD.
    explicit CovarianceForm(const Eigen::MatrixXd& c);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(c_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return c_; }
    [[nodiscard]] const Eigen::MatrixXd& sqrt() const noexcept { return s_; }

  private:
    Eigen::MatrixXd c_;
    Eigen::MatrixXd s_;
};

/// Tolerance for negative eigenvalues in psd_sqrt: 1e-10 (1 + ‖C‖_max).
double psd_tolerance(const Eigen::MatrixXd& c);

/// Symmetric PSD square root by eigendecomposition; eigenvalues in
/// [-psd_tolerance, 0) are clamped to zero, smaller ones throw NotPSD.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& c);

/// Mean-zero antiderivative: Φ̂(k) = φ̂(k) / (i k ω), Φ̂(0) = 0. Throws NonZeroMean.
TrigPoly antiderivative_mean_zero(const TrigPoly& f);

/// c_{αβ} = Σ_k Φ̂_α(-k) Φ̂_β(k) = (1/P) ∫ Φ_α Φ_β. Throws PeriodMismatch.
CovarianceForm gram_matrix(std::span<const TrigPoly> polys);

/// Periodic rectangle rule (1/n) Σ_j g(jP/n); spectrally accurate for smooth g.
double average_over_period(const std::function<double(double)>& g, double period, std::size_t n);

} // namespace splitsde
