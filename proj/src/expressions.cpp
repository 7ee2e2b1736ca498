#include "splitsde/expressions.hpp"

#include <cmath>
#include <sstream>

#include "splitsde/errors.hpp"

namespace splitsde {

namespace {

Vec sized_or_zero(const Vec& v, std::size_t dim, const char* what) {
    if (v.size() == 0) {
        return Vec::Zero(static_cast<Eigen::Index>(dim));
    }
    require(static_cast<std::size_t>(v.size()) == dim, std::string(what) + " has the wrong dimension");
    return v;
}

std::string vec_str(const Vec& v) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v(i);
    }
    os << ')';
    return os.str();
}

} // namespace

std::string ExpressionSpec::describe() const {
    std::ostringstream os;
    if (kind == "constant") {
        os << offset;
    } else if (kind == "affine") {
        os << offset << " + " << vec_str(coeffs) << "·x";
    } else if (kind == "gaussian") {
        os << offset << " + " << amplitude << "·exp(-|x - " << vec_str(center) << "|²/(2·" << width << "²))";
    } else if (kind == "radial") {
        os << offset << " + " << amplitude << "·|x - " << vec_str(center) << "|²";
    } else {
        os << kind << "(?)";
    }
    return os.str();
}

ScalarField make_expression(const ExpressionSpec& spec, std::size_t dim) {
    require(dim > 0, "expression dimension must be positive");
    const double off = spec.offset;
    const double amp = spec.amplitude;
    if (spec.kind == "constant") {
        return ScalarField(
            dim, [off](ConstVecRef) { return off; }, [](ConstVecRef, VecRef g) { g.setZero(); },
            [](ConstVecRef, MatRef h) { h.setZero(); });
    }
    if (spec.kind == "affine") {
        return ScalarField::linear(sized_or_zero(spec.coeffs, dim, "affine coeffs"), off);
    }
    const Vec c = sized_or_zero(spec.center, dim, "expression center");
    if (spec.kind == "gaussian") {
        require(spec.width > 0.0, "gaussian width must be positive");
        const double s2 = spec.width * spec.width;
        return ScalarField(
            dim, [=](ConstVecRef x) { return off + amp * std::exp(-(x - c).squaredNorm() / (2.0 * s2)); },
            [=](ConstVecRef x, VecRef g) {
                const Vec d = x - c;
                g = -(amp * std::exp(-d.squaredNorm() / (2.0 * s2)) / s2) * d;
            },
            [=](ConstVecRef x, MatRef h) {
                const Vec d = x - c;
                const double e = amp * std::exp(-d.squaredNorm() / (2.0 * s2));
                h = (e / (s2 * s2)) * (d * d.transpose());
                h.diagonal().array() -= e / s2;
            });
    }
    if (spec.kind == "radial") {
        return ScalarField(
            dim, [=](ConstVecRef x) { return off + amp * (x - c).squaredNorm(); },
            [=](ConstVecRef x, VecRef g) { g = 2.0 * amp * (x - c); },
            [=](ConstVecRef, MatRef h) {
                h.setZero();
                h.diagonal().setConstant(2.0 * amp);
            });
    }
    fail(ErrorCode::InvalidArgument, "unknown expression kind '" + spec.kind + "'");
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    if (kind == "quadratic") {
        os << "½·" << scale << "·|z|²";
    } else if (kind == "smoothed_abs") {
        os << scale << "·(sqrt(|z|² + " << delta << "²) - " << delta << ")";
    } else if (kind == "quartic") {
        os << "¼·" << scale << "·|z|⁴ + ½·" << delta << "·|z|²";
    } else if (kind == "zero") {
        os << "0";
    } else {
        os << kind << "(?)";
    }
    return os.str();
}

ScalarField make_potential(const PotentialSpec& spec, std::size_t dim) {
    require(dim > 0, "potential dimension must be positive");
    const double s = spec.scale;
    const double d = spec.delta;
    if (spec.kind == "quadratic") {
        ExpressionSpec e;
        e.kind = "radial";
        e.amplitude = 0.5 * s;
        return make_expression(e, dim);
    }
    if (spec.kind == "zero") {
        return make_expression(ExpressionSpec{}, dim);
    }
    if (spec.kind == "smoothed_abs") {
        require(d > 0.0, "smoothed_abs needs delta > 0");
        return ScalarField(
            dim, [=](ConstVecRef z) { return s * (std::sqrt(z.squaredNorm() + d * d) - d); },
            [=](ConstVecRef z, VecRef g) { g = (s / std::sqrt(z.squaredNorm() + d * d)) * z; },
            [=](ConstVecRef z, MatRef h) {
                const double r = std::sqrt(z.squaredNorm() + d * d);
                h = -(s / (r * r * r)) * (z * z.transpose());
                h.diagonal().array() += s / r;
            });
    }
    if (spec.kind == "quartic") {
        return ScalarField(
            dim,
            [=](ConstVecRef z) {
                const double r2 = z.squaredNorm();
                return 0.25 * s * r2 * r2 + 0.5 * d * r2;
            },
            [=](ConstVecRef z, VecRef g) { g = (s * z.squaredNorm() + d) * z; },
            [=](ConstVecRef z, MatRef h) {
                h = (2.0 * s) * (z * z.transpose());
                h.diagonal().array() += s * z.squaredNorm() + d;
            });
    }
    fail(ErrorCode::InvalidArgument, "unknown potential kind '" + spec.kind + "'");
}

} // namespace splitsde
