#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitsde/expressions.hpp"
#include "splitsde/scaling.hpp"

namespace splitsde {

struct PresetParams {
    /// Robot feedback gain k.
    double k = 1.0;
    /// MIPS coefficient κ.
    double kappa_mips = 1.0;
    /// Robot speed u(x).
    ExpressionSpec u{"gaussian", 0.5, 1.0, 1.0, {}, {}};
    /// MIPS speed w(x).
    ExpressionSpec w{"gaussian", 0.5, 1.0, 1.0, {}, {}};
    /// Drop the x₂ sin² term of the MIPS drift (it carries no w factor as printed).
    bool mips_literal = false;
    double epsilon = 0.1;
    /// Series truncation for the ou_integrated covariance; 0 picks it automatically.
    int series_terms = 0;
};

/// A named model: the fast system specification and its limit.
struct Preset {
    std::string name;
    std::optional<AmplitudeScalingSpec> amplitude;
    std::optional<IntegratedNoiseSpec> integrated;
    LimitSystemSpec limit;
    Vec x0;
    std::string description;

    [[nodiscard]] FastSystem fast() const;
    [[nodiscard]] std::size_t dim_x() const { return limit.dim_x; }
    /// Initial state for the fast system (phase/driver randomized per path).
    [[nodiscard]] InitialCondition fast_initial(PhaseInit phase = PhaseInit::Uniform) const;
    /// Initial state for the limit system (X at x0, M at 0 when coupled).
    [[nodiscard]] InitialCondition limit_initial() const;
};

std::vector<std::string> preset_names();

/// Throws UnknownPreset.
Preset make_preset(const std::string& name, const PresetParams& params = {});

/// Symbolic fast and limit equations for a preset.
std::string describe_preset(const std::string& name, const PresetParams& params = {});

} // namespace splitsde
