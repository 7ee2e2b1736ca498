#include "splitsde/vector_field.hpp"

#include "splitsde/errors.hpp"

namespace splitsde {

VectorField::VectorField(std::size_t dim_in, std::size_t dim_out, EvalFn f, JacFn jac)
    : dim_in_(dim_in), dim_out_(dim_out), f_(std::move(f)), jac_(std::move(jac)) {
    require(static_cast<bool>(f_), "VectorField needs an evaluation handle");
}

VectorField VectorField::zero(std::size_t dim_in, std::size_t dim_out) {
    return VectorField(
        dim_in, dim_out, [](ConstVecRef, VecRef out) { out.setZero(); },
        [](ConstVecRef, MatRef j) { j.setZero(); });
}

VectorField VectorField::constant(std::size_t dim_in, const Vec& value) {
    return VectorField(
        dim_in, static_cast<std::size_t>(value.size()), [value](ConstVecRef, VecRef out) { out = value; },
        [](ConstVecRef, MatRef j) { j.setZero(); });
}

Vec VectorField::operator()(ConstVecRef x) const {
    Vec out(static_cast<Eigen::Index>(dim_out_));
    f_(x, out);
    return out;
}

Mat VectorField::jacobian(ConstVecRef x) const {
    if (!jac_) {
        return fd_jacobian(x);
    }
    Mat j(static_cast<Eigen::Index>(dim_out_), static_cast<Eigen::Index>(dim_in_));
    jac_(x, j);
    return j;
}

Mat VectorField::fd_jacobian(ConstVecRef x) const {
    const auto n = static_cast<Eigen::Index>(dim_in_);
    const auto m = static_cast<Eigen::Index>(dim_out_);
    Mat j(m, n);
    Vec xp = x;
    Vec fp(m), fm(m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = jacobian_step(x(i));
        xp(i) = x(i) + h;
        f_(xp, fp);
        xp(i) = x(i) - h;
        f_(xp, fm);
        xp(i) = x(i);
        j.col(i) = (fp - fm) / (2.0 * h);
    }
    return j;
}

ScalarField::ScalarField(std::size_t dim, ValueFn f, GradFn grad, HessFn hess)
    : dim_(dim), f_(std::move(f)), grad_(std::move(grad)), hess_(std::move(hess)) {
    require(static_cast<bool>(f_), "ScalarField needs a value handle");
}

ScalarField ScalarField::linear(const Vec& a, double c) {
    const auto n = static_cast<std::size_t>(a.size());
    return ScalarField(
        n, [a, c](ConstVecRef x) { return a.dot(x) + c; }, [a](ConstVecRef, VecRef g) { g = a; },
        [](ConstVecRef, MatRef h) { h.setZero(); });
}

Vec ScalarField::gradient(ConstVecRef x) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Vec g(n);
    if (grad_) {
        grad_(x, g);
        return g;
    }
    Vec xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = jacobian_step(x(i));
        xp(i) = x(i) + h;
        const double fp = f_(xp);
        xp(i) = x(i) - h;
        const double fm = f_(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

void ScalarField::gradient(ConstVecRef x, VecRef g) const {
    if (grad_) {
        grad_(x, g);
    } else {
        g = gradient(x);
    }
}

Mat ScalarField::hessian(ConstVecRef x) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Mat h(n, n);
    if (hess_) {
        hess_(x, h);
        return h;
    }
    // Differentiate the gradient; symmetrize the result.
    Vec xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = jacobian_step(x(i));
        xp(i) = x(i) + s;
        const Vec gp = gradient(xp);
        xp(i) = x(i) - s;
        const Vec gm = gradient(xp);
        xp(i) = x(i);
        h.col(i) = (gp - gm) / (2.0 * s);
    }
    return 0.5 * (h + h.transpose());
}

double ScalarField::value1(double z) const {
    Vec x(1);
    x(0) = z;
    return f_(x);
}

double ScalarField::d1(double z) const {
    Vec x(1);
    x(0) = z;
    return gradient(x)(0);
}

double ScalarField::d2(double z) const {
    Vec x(1);
    x(0) = z;
    return hessian(x)(0, 0);
}

} // namespace splitsde
