#include "sllg/noise.hpp"

#include "sllg/errors.hpp"

namespace sllg {

NoiseTerm constant_term(const Vec3& g, std::string name) {
    return NoiseTerm{std::move(name), [g](const Vec3&) { return g; }, [](const Vec3&) { return Mat3::Zero().eval(); }};
}

NoiseTerm linear_gradient_term(double alpha, int axis) {
    if (axis < 0 || axis > 2) throw InvalidArgument("gradient axis must be 0, 1 or 2");
    Mat3 jac = Mat3::Zero();
    jac(axis, axis) = alpha;
    jac(2, axis) -= alpha;
    return NoiseTerm{
        "linear-gradient-" + std::to_string(axis),
        [alpha, axis](const Vec3& x) {
            Vec3 g = Vec3::Zero();
            g[axis] += alpha * x[axis];
            g[2] += alpha * (1.0 - x[axis]);
            return g;
        },
        [jac](const Vec3&) { return jac; }};
}

const std::vector<std::string>& noise_preset_names() {
    static const std::vector<std::string> names{"zero",           "constant-z",      "constant-x",
                                                "pair-noncommuting", "linear-gradient", "gradient-pair"};
    return names;
}

NoiseCoefficients make_noise_preset(const std::string& name, double amplitude) {
    NoiseCoefficients c;
    if (name == "zero") {
        c.terms.push_back(constant_term(Vec3::Zero(), "zero"));
    } else if (name == "constant-z") {
        c.terms.push_back(constant_term(amplitude * Vec3::UnitZ(), "constant-z"));
    } else if (name == "constant-x") {
        c.terms.push_back(constant_term(amplitude * Vec3::UnitX(), "constant-x"));
    } else if (name == "pair-noncommuting") {
        c.terms.push_back(constant_term(amplitude * Vec3::UnitZ(), "constant-z"));
        c.terms.push_back(constant_term(amplitude * Vec3::UnitX(), "constant-x"));
    } else if (name == "linear-gradient") {
        c.terms.push_back(linear_gradient_term(amplitude, 0));
    } else if (name == "gradient-pair") {
        c.terms.push_back(linear_gradient_term(amplitude, 0));
        c.terms.push_back(linear_gradient_term(amplitude, 1));
    } else {
        throw InvalidArgument("unknown noise preset '" + name + "'");
    }
    return c;
}

}  // namespace sllg
