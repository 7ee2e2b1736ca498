#include "splitsde/presets.hpp"

#include <cmath>
#include <sstream>

#include "splitsde/errors.hpp"
#include "splitsde/forms.hpp"

namespace splitsde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Real polynomials for cos²θ, cosθ·sinθ and sin²θ.
TrigPoly cos_sq() { return TrigPoly(kTwoPi, {{0, {0.5, 0.0}}, {2, {0.25, 0.0}}}); }
TrigPoly cos_sin() { return TrigPoly::sine(2, kTwoPi, 0.5); }
TrigPoly sin_sq() { return TrigPoly(kTwoPi, {{0, {0.5, 0.0}}, {2, {-0.25, 0.0}}}); }

// v(x) = f(x)·e_axis on R^2.
VectorField scaled_axis(const ScalarField& f, int axis) {
    return VectorField(
        2, 2,
        [f, axis](ConstVecRef x, VecRef out) {
            out.setZero();
            out(axis) = f(x);
        },
        [f, axis](ConstVecRef x, MatRef j) {
            j.setZero();
            j.row(axis) = f.gradient(x).transpose();
        });
}

// Field (c1·f ∂_{i1} f, c2·f ∂_{i2} f) with indices < 0 meaning a zero entry.
VectorField grad_product(const ScalarField& f, double c1, int i1, double c2, int i2) {
    return VectorField(2, 2, [f, c1, i1, c2, i2](ConstVecRef x, VecRef out) {
        const double val = f(x);
        const Vec g = f.gradient(x);
        out(0) = i1 < 0 ? 0.0 : c1 * val * g(i1);
        out(1) = i2 < 0 ? 0.0 : c2 * val * g(i2);
    });
}

// Field (c1 ∂_{i1} f, c2 ∂_{i2} f).
VectorField grad_only(const ScalarField& f, double c1, int i1, double c2, int i2) {
    return VectorField(2, 2, [f, c1, i1, c2, i2](ConstVecRef x, VecRef out) {
        const Vec g = f.gradient(x);
        out(0) = i1 < 0 ? 0.0 : c1 * g(i1);
        out(1) = i2 < 0 ? 0.0 : c2 * g(i2);
    });
}

AmplitudeScalingSpec planar_base(const ScalarField& speed, double epsilon) {
    AmplitudeScalingSpec s;
    s.dim_x = 2;
    s.b = PeriodicDrift::zero(2);
    s.v = {scaled_axis(speed, 0), scaled_axis(speed, 1)};
    s.phi = {TrigPoly::cosine(1, kTwoPi), TrigPoly::sine(1, kTwoPi)};
    s.vartheta = ScalarField::linear(Vec::Ones(1));
    s.m = DiffusionSpec::wiener(1);
    s.epsilon = epsilon;
    return s;
}

Preset robot(const PresetParams& p) {
    const ScalarField u = make_expression(p.u, 2);
    AmplitudeScalingSpec s = planar_base(u, p.epsilon);
    const double k = p.k;
    // x₁: -k u∂₁u cos² - k u∂₂u cos·sin ; x₂: -k u∂₁u cos·sin - k u∂₂u sin².
    s.b.terms = {
        {grad_product(u, -k, 0, 0.0, -1), cos_sq()},
        {grad_product(u, -k, 1, -k, 0), cos_sin()},
        {grad_product(u, 0.0, -1, -k, 1), sin_sq()},
    };
    Preset out;
    out.name = "robot";
    out.amplitude = s;
    out.limit = build_amplitude_limit(s);
    out.x0 = Vec::Zero(2);
    out.x0(0) = 0.5;
    return out;
}

Preset mips(const PresetParams& p) {
    const ScalarField w = make_expression(p.w, 2);
    AmplitudeScalingSpec s = planar_base(w, p.epsilon);
    const double kap = p.kappa_mips;
    // x₁: κ∂₁w cos² + κ∂₂w cos·sin ; x₂: κ∂₁w cos·sin + κ∂₂w sin².
    s.b.terms = {
        {grad_only(w, kap, 0, 0.0, -1), cos_sq()},
        {grad_only(w, kap, 1, kap, 0), cos_sin()},
    };
    if (!p.mips_literal) {
        s.b.terms.push_back({grad_only(w, 0.0, -1, kap, 1), sin_sq()});
    }
    Preset out;
    out.name = "mips";
    out.amplitude = s;
    out.limit = build_amplitude_limit(s);
    out.x0 = Vec::Zero(2);
    out.x0(0) = 0.5;
    return out;
}

Preset ou_integrated(const PresetParams& p) {
    IntegratedNoiseSpec s;
    s.dim_x = 1;
    s.b = PeriodicDrift::zero(1);
    s.v = {VectorField::constant(1, Vec::Ones(1))};
    s.phi = {TrigPoly::cosine(1, kTwoPi)};
    s.rho = ScalarField::linear(Vec::Ones(1));
    s.U = make_potential(PotentialSpec{"quadratic", 1.0, 1.0}, 1);
    s.epsilon = p.epsilon;
    // cos m = (e^{im} + e^{-im})/2 and the form is diagonal in e^{ikm}.
    const std::size_t nt = p.series_terms > 0 ? static_cast<std::size_t>(p.series_terms) : 0;
    const double c11 = 0.25 * (ou_integrated_form(1, 1, nt).real() + ou_integrated_form(-1, -1, nt).real());
    Mat c(1, 1);
    c(0, 0) = c11;
    Preset out;
    out.name = "ou_integrated";
    out.integrated = s;
    out.limit = build_time_limit(s, CovarianceForm(c));
    out.x0 = Vec::Zero(1);
    return out;
}

} // namespace

FastSystem Preset::fast() const {
    if (amplitude) {
        return build_amplitude_fast(*amplitude);
    }
    return build_integrated_noise_fast(*integrated);
}

InitialCondition Preset::fast_initial(PhaseInit phase) const {
    if (amplitude) {
        return amplitude_initial(*amplitude, x0, Vec::Zero(static_cast<Eigen::Index>(amplitude->m.dim)), phase);
    }
    return integrated_initial(*integrated, x0);
}

InitialCondition Preset::limit_initial() const {
    Vec s = Vec::Zero(static_cast<Eigen::Index>(limit.state_dim()));
    s.head(x0.size()) = x0;
    return InitialCondition::at(s);
}

std::vector<std::string> preset_names() { return {"robot", "mips", "ou_integrated"}; }

Preset make_preset(const std::string& name, const PresetParams& params) {
    require(params.epsilon > 0.0, "epsilon must be positive");
    Preset p;
    if (name == "robot") {
        p = robot(params);
    } else if (name == "mips") {
        p = mips(params);
    } else if (name == "ou_integrated") {
        p = ou_integrated(params);
    } else {
        fail(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
    }
    p.description = describe_preset(name, params);
    return p;
}

std::string describe_preset(const std::string& name, const PresetParams& p) {
    std::ostringstream os;
    if (name == "robot") {
        os << "robot: phototactic robot, k = " << p.k << ", eps = " << p.epsilon << "\n"
           << "  u(x) = " << p.u.describe() << "\n"
           << "  fast (theta = W_t/eps):\n"
           << "    dx1/dt = -k u d1u cos^2(theta) - k u d2u cos(theta) sin(theta) + (1/eps) u cos(theta)\n"
           << "    dx2/dt = -k u d1u cos(theta) sin(theta) - k u d2u sin^2(theta) + (1/eps) u sin(theta)\n"
           << "  limit (Stratonovich):\n"
           << "    dx1 = -(1/2) k u d1u dt + sqrt(2) u o dW1\n"
           << "    dx2 = -(1/2) k u d2u dt + sqrt(2) u o dW2\n"
           << "  limit (Ito):\n"
           << "    dxi = (-(1/2) k u diu + u diu) dt + sqrt(2) u dWi\n";
    } else if (name == "mips") {
        os << "mips: motility-induced phase separation, kappa = " << p.kappa_mips << ", eps = " << p.epsilon
           << (p.mips_literal ? ", literal x2 sin^2 term (dropped)" : ", corrected x2 sin^2 term") << "\n"
           << "  w(x) = " << p.w.describe() << "\n"
           << "  fast (theta = W_t/eps):\n"
           << "    dx1/dt = kappa d1w cos^2(theta) + kappa d2w cos(theta) sin(theta) + (1/eps) w cos(theta)\n"
           << "    dx2/dt = kappa d1w cos(theta) sin(theta) + "
           << (p.mips_literal ? "kappa d2[sin^2(theta)]" : "kappa d2w sin^2(theta)") << " + (1/eps) w sin(theta)\n"
           << "  limit (Stratonovich):\n"
           << "    dx1 = (1/2) kappa d1w dt + sqrt(2) w o dW1\n"
           << "    dx2 = " << (p.mips_literal ? "0" : "(1/2) kappa d2w") << " dt + sqrt(2) w o dW2\n"
           << "  limit (Ito):\n"
           << "    dxi = ((1/2) kappa diw + w diw) dt + sqrt(2) w dWi\n";
    } else if (name == "ou_integrated") {
        os << "ou_integrated: integrated Ornstein-Uhlenbeck driver, eps = " << p.epsilon << "\n"
           << "  fast:\n"
           << "    dX = (1/eps) cos(M) dt\n"
           << "    dM = (1/eps^2) Z dt\n"
           << "    dZ = -(1/eps^2) Z dt + (1/eps) dW\n"
           << "  limit:\n"
           << "    dX = sqrt(2) o dB,  E[B(t)^2] = <cos, cos> t,  <cos, cos> = (1/2) sqrt(2 e pi) erf(1/sqrt(2))\n";
    } else {
        fail(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
    }
    return os.str();
}

} // namespace splitsde
