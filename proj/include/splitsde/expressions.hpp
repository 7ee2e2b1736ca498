#pragma once

#include <cstddef>
#include <string>

#include "splitsde/vector_field.hpp"

namespace splitsde {

/// Built-in scalar fields with analytic gradient and Hessian.
///
///   constant  value = offset
///   affine    value = offset + coeffs·x
///   gaussian  value = offset + amplitude·exp(-|x-center|² / (2 width²))
///   radial    value = offset + amplitude·|x-center|²
///
/// Empty `center`/`coeffs` mean zero vectors of the field dimension.
struct ExpressionSpec {
    std::string kind = "constant";
    double offset = 0.0;
    double amplitude = 1.0;
    double width = 1.0;
    Vec center;
    Vec coeffs;

    [[nodiscard]] std::string describe() const;
};

ScalarField make_expression(const ExpressionSpec& spec, std::size_t dim);

/// Potentials U(z) for gradient diffusions.
///
///   quadratic     U = ½ scale |z|²
///   smoothed_abs  U = scale·(sqrt(|z|² + delta²) - delta)
///   quartic       U = ¼ scale |z|⁴ + ½ delta |z|²
///   zero          U = 0
struct PotentialSpec {
    std::string kind = "quadratic";
    double scale = 1.0;
    double delta = 1.0;

    [[nodiscard]] std::string describe() const;
};

ScalarField make_potential(const PotentialSpec& spec, std::size_t dim);

} // namespace splitsde
