#include "splitsde/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "splitsde/errors.hpp"

namespace splitsde {

namespace {

constexpr double kConjugateTol = 1e-12;

double reduce_phase(double theta, double period) {
    double r = std::fmod(theta, period);
    if (r < 0.0) {
        r += period;
    }
    return r;
}

} // namespace

TrigPoly::TrigPoly(double period, std::map<int, Complex> coeffs, bool real_valued)
    : period_(period), coeffs_(std::move(coeffs)), real_valued_(real_valued) {
    require(period_ > 0.0 && std::isfinite(period_), "TrigPoly period must be positive and finite");
    for (const auto& [k, c] : coeffs_) {
        require(std::isfinite(c.real()) && std::isfinite(c.imag()), "TrigPoly coefficient is not finite");
    }
    if (!real_valued_) {
        return;
    }
    std::map<int, Complex> completed = coeffs_;
    for (const auto& [k, c] : coeffs_) {
        if (k == 0) {
            require(c.imag() == 0.0, "real TrigPoly needs a real constant coefficient");
            continue;
        }
        auto it = coeffs_.find(-k);
        if (it == coeffs_.end()) {
            completed[-k] = std::conj(c);
        } else if (std::abs(it->second - std::conj(c)) > kConjugateTol * (1.0 + std::abs(c))) {
            fail(ErrorCode::InvalidArgument,
                 "coefficients at k=" + std::to_string(k) + " and k=" + std::to_string(-k) +
                     " are not conjugate for a real-valued TrigPoly");
        }
    }
    // Store exact conjugates so eval is real by construction.
    for (auto& [k, c] : completed) {
        if (k < 0) {
            c = std::conj(completed.at(-k));
        }
    }
    coeffs_ = std::move(completed);
}

TrigPoly TrigPoly::cosine(int k, double period, double amplitude) {
    if (k == 0) {
        return constant(amplitude, period);
    }
    return TrigPoly(period, {{k, Complex{amplitude / 2.0, 0.0}}, {-k, Complex{amplitude / 2.0, 0.0}}});
}

TrigPoly TrigPoly::sine(int k, double period, double amplitude) {
    if (k == 0) {
        return zero(period);
    }
    // sin(x) = (e^{ix} - e^{-ix}) / (2i)
    return TrigPoly(period, {{k, Complex{0.0, -amplitude / 2.0}}, {-k, Complex{0.0, amplitude / 2.0}}});
}

TrigPoly TrigPoly::constant(double value, double period) {
    std::map<int, Complex> c;
    if (value != 0.0) {
        c[0] = Complex{value, 0.0};
    }
    return TrigPoly(period, std::move(c));
}

Complex TrigPoly::coeff(int k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? Complex{0.0, 0.0} : it->second;
}

int TrigPoly::max_frequency() const {
    int m = 0;
    for (const auto& [k, c] : coeffs_) {
        if (c != Complex{0.0, 0.0}) {
            m = std::max(m, std::abs(k));
        }
    }
    return m;
}

double TrigPoly::l1_norm() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs_) {
        s += std::abs(c);
    }
    return s;
}

bool TrigPoly::is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const auto& kv) { return kv.second == Complex{0.0, 0.0}; });
}

Complex TrigPoly::eval_complex(double theta) const {
    const double t = reduce_phase(theta, period_);
    const double w = base_frequency();
    Complex s{0.0, 0.0};
    for (const auto& [k, c] : coeffs_) {
        s += c * std::polar(1.0, w * k * t);
    }
    return s;
}

double TrigPoly::eval(double theta) const {
    require(real_valued_, "TrigPoly::eval on a complex-valued polynomial; use eval_complex");
    const double t = reduce_phase(theta, period_);
    const double w = base_frequency();
    // Conjugate pairs sum to 2 Re(c_k e^{ikωt}); the imaginary residue is exactly zero.
    double s = coeff(0).real();
    for (auto it = coeffs_.upper_bound(0); it != coeffs_.end(); ++it) {
        const double a = w * it->first * t;
        s += 2.0 * (it->second.real() * std::cos(a) - it->second.imag() * std::sin(a));
    }
    return s;
}

double TrigPoly::derivative(double theta) const {
    const double t = reduce_phase(theta, period_);
    const double w = base_frequency();
    Complex s{0.0, 0.0};
    for (const auto& [k, c] : coeffs_) {
        s += Complex{0.0, w * k} * c * std::polar(1.0, w * k * t);
    }
    return s.real();
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& other) {
    if (period_ != other.period_) {
        fail(ErrorCode::PeriodMismatch, "cannot add TrigPolys with different periods");
    }
    for (const auto& [k, c] : other.coeffs_) {
        coeffs_[k] += c;
    }
    real_valued_ = real_valued_ && other.real_valued_;
    return *this;
}

TrigPoly& TrigPoly::operator*=(double s) {
    for (auto& [k, c] : coeffs_) {
        c *= s;
    }
    return *this;
}

double psd_tolerance(const Eigen::MatrixXd& c) {
    const double cmax = c.size() == 0 ? 0.0 : c.cwiseAbs().maxCoeff();
    return 1e-10 * (1.0 + cmax);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& c) {
    require(c.rows() == c.cols(), "psd_sqrt needs a square matrix");
    if (c.size() == 0) {
        return Eigen::MatrixXd(0, 0);
    }
    const Eigen::MatrixXd sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
        fail(ErrorCode::NotConverged, "symmetric eigendecomposition failed");
    }
    const double tol = psd_tolerance(sym);
    Eigen::VectorXd lam = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) < -tol) {
            fail(ErrorCode::NotPSD, "eigenvalue " + std::to_string(lam(i)) + " below -" + std::to_string(tol));
        }
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    Eigen::MatrixXd s = v * lam.asDiagonal() * v.transpose();
    return 0.5 * (s + s.transpose());
}

CovarianceForm::CovarianceForm(const Eigen::MatrixXd& c) {
    require(c.rows() == c.cols(), "covariance matrix must be square");
    c_ = 0.5 * (c + c.transpose());
    s_ = psd_sqrt(c_);
}

TrigPoly antiderivative_mean_zero(const TrigPoly& f) {
    if (!f.is_mean_zero()) {
        fail(ErrorCode::NonZeroMean, "antiderivative requires a mean-zero polynomial");
    }
    const double w = f.base_frequency();
    std::map<int, Complex> out;
    for (const auto& [k, c] : f.coeffs()) {
        if (k != 0) {
            out[k] = c / Complex{0.0, w * k};
        }
    }
    return TrigPoly(f.period(), std::move(out), f.real_valued());
}

CovarianceForm gram_matrix(std::span<const TrigPoly> polys) {
    const auto n = static_cast<Eigen::Index>(polys.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        if (polys[a].period() != polys[0].period()) {
            fail(ErrorCode::PeriodMismatch, "Gram matrix inputs must share one period");
        }
    }
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            Complex s{0.0, 0.0};
            for (const auto& [k, cb] : polys[b].coeffs()) {
                s += polys[a].coeff(-k) * cb;
            }
            c(a, b) = s.real();
            c(b, a) = s.real();
        }
    }
    return CovarianceForm(c);
}

double average_over_period(const std::function<double(double)>& g, double period, std::size_t n) {
    require(n >= 2, "average_over_period needs at least two nodes");
    require(period > 0.0, "average_over_period needs a positive period");
    double s = 0.0;
    const double h = period / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        s += g(h * static_cast<double>(j));
    }
    return s / static_cast<double>(n);
}

} // namespace splitsde
