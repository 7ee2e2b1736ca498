#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace splitsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecRef = Eigen::Ref<Eigen::VectorXd>;
using MatRef = Eigen::Ref<Eigen::MatrixXd>;

/// Central-difference step used when no analytic Jacobian is supplied.
inline double jacobian_step(double xi) { return 1e-5 * (1.0 + (xi < 0 ? -xi : xi)); }

/// Map R^{dim_in} -> R^{dim_out} with an optional analytic Jacobian.
class VectorField {
  public:
    using EvalFn = std::function<void(ConstVecRef, VecRef)>;
    using JacFn = std::function<void(ConstVecRef, MatRef)>;

    VectorField() = default;
    VectorField(std::size_t dim_in, std::size_t dim_out, EvalFn f, JacFn jac = {});

    static VectorField zero(std::size_t dim_in, std::size_t dim_out);
    static VectorField constant(std::size_t dim_in, const Vec& value);

    [[nodiscard]] std::size_t dim_in() const noexcept { return dim_in_; }
    [[nodiscard]] std::size_t dim_out() const noexcept { return dim_out_; }
    [[nodiscard]] bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jac_); }
    [[nodiscard]] bool empty() const noexcept { return !static_cast<bool>(f_); }

    void eval(ConstVecRef x, VecRef out) const { f_(x, out); }
    [[nodiscard]] Vec operator()(ConstVecRef x) const;

    /// dim_out x dim_in; analytic if available, central differences otherwise.
    [[nodiscard]] Mat jacobian(ConstVecRef x) const;
    [[nodiscard]] Mat fd_jacobian(ConstVecRef x) const;

  private:
    std::size_t dim_in_ = 0;
    std::size_t dim_out_ = 0;
    EvalFn f_;
    JacFn jac_;
};

/// Scalar function of a point with gradient and Hessian.
/// Missing derivative handles fall back to central differences.
class ScalarField {
  public:
    using ValueFn = std::function<double(ConstVecRef)>;
    using GradFn = std::function<void(ConstVecRef, VecRef)>;
    using HessFn = std::function<void(ConstVecRef, MatRef)>;

    ScalarField() = default;
    ScalarField(std::size_t dim, ValueFn f, GradFn grad = {}, HessFn hess = {});

    /// a·x + c.
    static ScalarField linear(const Vec& a, double c = 0.0);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool empty() const noexcept { return !static_cast<bool>(f_); }
    [[nodiscard]] double value(ConstVecRef x) const { return f_(x); }
    double operator()(ConstVecRef x) const { return f_(x); }
    [[nodiscard]] Vec gradient(ConstVecRef x) const;
    void gradient(ConstVecRef x, VecRef g) const;
    [[nodiscard]] Mat hessian(ConstVecRef x) const;
    [[nodiscard]] double laplacian(ConstVecRef x) const { return hessian(x).trace(); }

    /// Convenience for one-dimensional fields.
    [[nodiscard]] double value1(double z) const;
    [[nodiscard]] double d1(double z) const;
    [[nodiscard]] double d2(double z) const;

  private:
    std::size_t dim_ = 0;
    ValueFn f_;
    GradFn grad_;
    HessFn hess_;
};

} // namespace splitsde
