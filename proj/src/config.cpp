#include "sllg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "sllg/errors.hpp"

namespace sllg {

namespace {

struct Cursor {
    int line;
    int column;
};

std::string trim(const std::string& s, std::size_t& offset) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        offset = s.size();
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    offset = b;
    return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string& msg, const std::string& field, Cursor at) {
    throw ConfigError("line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + msg, field,
                      at.line, at.column);
}

double parse_double(const std::string& v, const std::string& field, Cursor at) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) parse_fail("'" + v + "' is not a number", field, at);
    return out;
}

long long parse_int(const std::string& v, const std::string& field, Cursor at) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) parse_fail("'" + v + "' is not an integer", field, at);
    return out;
}

int parse_int32(const std::string& v, const std::string& field, Cursor at) {
    const long long x = parse_int(v, field, at);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        parse_fail("'" + v + "' is out of integer range", field, at);
    }
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& v, const std::string& field, Cursor at) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        parse_fail("'" + v + "' is not a non-negative integer", field, at);
    }
    return out;
}

bool parse_bool(const std::string& v, const std::string& field, Cursor at) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    parse_fail("'" + v + "' is not a boolean (true/false)", field, at);
}

Vec3 parse_vec3(const std::string& v, const std::string& field, Cursor at) {
    std::string s = v;
    for (char& ch : s) {
        if (ch == ',') ch = ' ';
    }
    std::istringstream is(s);
    std::string tok;
    std::vector<double> xs;
    while (is >> tok) xs.push_back(parse_double(tok, field, at));
    if (xs.size() != 3) parse_fail("expected three components, got " + std::to_string(xs.size()), field, at);
    return {xs[0], xs[1], xs[2]};
}

StudyMode parse_mode(const std::string& v, const std::string& field, Cursor at) {
    if (v == "single") return StudyMode::single;
    if (v == "monte-carlo") return StudyMode::monte_carlo;
    if (v == "refinement") return StudyMode::refinement;
    parse_fail("unknown mode '" + v + "' (single, monte-carlo, refinement)", field, at);
}

using Setter = std::function<void(SimulationConfig&, const std::string&, const std::string&, Cursor)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"mesh.dim", [](auto& c, auto& v, auto& f, Cursor a) { c.mesh.dim = parse_int32(v, f, a); }},
        {"mesh.divisions", [](auto& c, auto& v, auto& f, Cursor a) { c.mesh.divisions = parse_int32(v, f, a); }},
        {"mesh.file", [](auto& c, auto& v, auto&, Cursor) { c.mesh.file = v; }},
        {"scheme.lambda1", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.lambda1 = parse_double(v, f, a); }},
        {"scheme.lambda2", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.lambda2 = parse_double(v, f, a); }},
        {"scheme.theta", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.theta = parse_double(v, f, a); }},
        {"scheme.T", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.horizon = parse_double(v, f, a); }},
        {"scheme.J", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.steps = parse_int32(v, f, a); }},
        {"scheme.solver_tol", [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.solver_tol = parse_double(v, f, a); }},
        {"scheme.max_iterations",
         [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.max_iterations = parse_int32(v, f, a); }},
        {"scheme.dense_threshold",
         [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.dense_threshold = parse_int32(v, f, a); }},
        {"scheme.guard_constant",
         [](auto& c, auto& v, auto& f, Cursor a) { c.scheme.guard_constant = parse_double(v, f, a); }},
        {"noise.preset", [](auto& c, auto& v, auto&, Cursor) { c.noise.preset = v; }},
        {"noise.amplitude", [](auto& c, auto& v, auto& f, Cursor a) { c.noise.amplitude = parse_double(v, f, a); }},
        {"noise.constant",
         [](auto& c, auto& v, auto& f, Cursor a) { c.noise.constants.push_back(parse_vec3(v, f, a)); }},
        {"initial.preset", [](auto& c, auto& v, auto&, Cursor) { c.initial.preset = v; }},
        {"initial.beta", [](auto& c, auto& v, auto& f, Cursor a) { c.initial.beta = parse_double(v, f, a); }},
        {"initial.direction",
         [](auto& c, auto& v, auto& f, Cursor a) { c.initial.direction = parse_vec3(v, f, a); }},
        {"run.mode", [](auto& c, auto& v, auto& f, Cursor a) { c.run.mode = parse_mode(v, f, a); }},
        {"run.seed", [](auto& c, auto& v, auto& f, Cursor a) { c.run.seed = parse_u64(v, f, a); }},
        {"run.samples", [](auto& c, auto& v, auto& f, Cursor a) { c.run.samples = parse_int32(v, f, a); }},
        {"run.levels", [](auto& c, auto& v, auto& f, Cursor a) { c.run.levels = parse_int32(v, f, a); }},
        {"output.dir", [](auto& c, auto& v, auto&, Cursor) { c.output.dir = v; }},
        {"output.snapshots", [](auto& c, auto& v, auto& f, Cursor a) { c.output.snapshots = parse_int32(v, f, a); }},
        {"output.diagnostics",
         [](auto& c, auto& v, auto& f, Cursor a) { c.output.diagnostics = parse_bool(v, f, a); }},
        {"output.path_csv", [](auto& c, auto& v, auto& f, Cursor a) { c.output.path_csv = parse_bool(v, f, a); }},
    };
    return table;
}

[[noreturn]] void range_fail(const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg, field);
}

double mesh_h(const MeshSpec& spec) {
    if (!spec.file.empty()) return make_mesh(spec).max_edge_length();
    // longest edge of the structured split is the cell diagonal
    return std::sqrt(static_cast<double>(spec.dim)) / spec.divisions;
}

}  // namespace

std::string to_string(StudyMode mode) {
    switch (mode) {
        case StudyMode::single: return "single";
        case StudyMode::monte_carlo: return "monte-carlo";
        case StudyMode::refinement: return "refinement";
    }
    return "?";
}

SimulationConfig parse_config(const std::string& text) {
    SimulationConfig cfg;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::size_t off = 0;
        const std::string line = trim(body, off);
        if (line.empty()) continue;
        const int col = static_cast<int>(off) + 1;
        if (line.front() == '[') {
            if (line.back() != ']') parse_fail("unterminated section header", "", {line_no, col});
            section = line.substr(1, line.size() - 2);
            static const std::set<std::string> known{"mesh", "scheme", "noise", "initial", "run", "output"};
            if (!known.count(section)) parse_fail("unknown section [" + section + "]", section, {line_no, col + 1});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail("expected 'key = value'", "", {line_no, col});
        if (section.empty()) parse_fail("key outside of any section", "", {line_no, col});
        std::size_t koff = 0, voff = 0;
        const std::string key = trim(line.substr(0, eq), koff);
        const std::string value = trim(line.substr(eq + 1), voff);
        const std::string field = section + "." + key;
        const Cursor key_at{line_no, col + static_cast<int>(koff)};
        const Cursor value_at{line_no, col + static_cast<int>(eq + 1 + voff)};
        if (key.empty()) parse_fail("missing key before '='", "", key_at);
        const auto it = setters().find(field);
        if (it == setters().end()) parse_fail("unknown key '" + field + "'", field, key_at);
        if (value.empty()) parse_fail("missing value for '" + field + "'", field, value_at);
        if (cfg.explicit_keys.count(field) && field != "noise.constant") {
            parse_fail("duplicate key '" + field + "'", field, key_at);
        }
        it->second(cfg, value, field, value_at);
        cfg.explicit_keys.insert(field);
    }
    return cfg;
}

void validate_config(const SimulationConfig& c) {
    if (c.mesh.dim != 2 && c.mesh.dim != 3) range_fail("mesh.dim", "must be 2 or 3");
    if (c.mesh.file.empty() && (c.mesh.divisions < 1 || c.mesh.divisions > 1024)) {
        range_fail("mesh.divisions", "must lie in [1, 1024]");
    }
    const SchemeParams& s = c.scheme;
    if (!std::isfinite(s.lambda1) || s.lambda1 == 0.0) range_fail("scheme.lambda1", "must be finite and nonzero");
    if (!(s.lambda2 > 0.0) || !std::isfinite(s.lambda2)) range_fail("scheme.lambda2", "must be positive");
    if (!(s.theta >= 0.0 && s.theta <= 1.0)) range_fail("scheme.theta", "must lie in [0, 1]");
    if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) range_fail("scheme.T", "must be positive");
    if (s.steps < 1) range_fail("scheme.J", "must be >= 1");
    if (!(s.solver_tol > 0.0 && s.solver_tol < 1.0)) range_fail("scheme.solver_tol", "must lie in (0, 1)");
    if (s.max_iterations < 1) range_fail("scheme.max_iterations", "must be >= 1");
    if (s.dense_threshold < 0) range_fail("scheme.dense_threshold", "must be >= 0");
    if (!(s.guard_constant > 0.0) || !std::isfinite(s.guard_constant)) {
        range_fail("scheme.guard_constant", "must be positive");
    }

    if (c.noise.constants.empty()) {
        const auto& names = noise_preset_names();
        if (std::find(names.begin(), names.end(), c.noise.preset) == names.end()) {
            range_fail("noise.preset", "unknown preset '" + c.noise.preset + "'");
        }
    }
    for (const Vec3& g : c.noise.constants) {
        if (!g.allFinite()) range_fail("noise.constant", "components must be finite");
    }
    if (!std::isfinite(c.noise.amplitude)) range_fail("noise.amplitude", "must be finite");

    const auto& inits = initial_preset_names();
    if (std::find(inits.begin(), inits.end(), c.initial.preset) == inits.end()) {
        range_fail("initial.preset", "unknown preset '" + c.initial.preset + "'");
    }
    if (!std::isfinite(c.initial.beta)) range_fail("initial.beta", "must be finite");
    if (!c.initial.direction.allFinite() || c.initial.direction.norm() == 0.0) {
        range_fail("initial.direction", "must be a finite nonzero vector");
    }

    if (c.run.mode == StudyMode::monte_carlo && c.run.samples < 2) range_fail("run.samples", "must be >= 2");
    if (c.run.samples < 1) range_fail("run.samples", "must be >= 1");
    if (c.run.levels < 1 || c.run.levels > 12) range_fail("run.levels", "must lie in [1, 12]");
    if (c.run.mode == StudyMode::refinement) {
        if (c.run.levels < 3) range_fail("run.levels", "refinement studies need at least 3 levels");
        if (!c.mesh.file.empty()) range_fail("mesh.file", "refinement studies need a structured mesh");
        const int factor = 1 << (c.run.levels - 1);
        if (c.mesh.divisions % factor != 0) {
            range_fail("mesh.divisions", "must be divisible by 2^(levels-1) = " + std::to_string(factor));
        }
        if (s.steps % factor != 0) range_fail("scheme.J", "must be divisible by 2^(levels-1) = " + std::to_string(factor));
    }
    if (c.output.snapshots < 0) range_fail("output.snapshots", "must be >= 0");
    if (c.output.dir.empty()) range_fail("output.dir", "must not be empty");

    // θ guard, on every mesh the study will use
    const int levels = c.run.mode == StudyMode::refinement ? c.run.levels : 1;
    for (int l = 0; l < levels; ++l) {
        SchemeParams p = s;
        MeshSpec m = c.mesh;
        if (c.run.mode == StudyMode::refinement) {
            const int factor = 1 << (levels - 1 - l);
            p.steps = s.steps / factor;
            m = level_mesh(c.mesh, l, levels);
        }
        double h = 0.0;
        try {
            h = mesh_h(m);
        } catch (const std::exception& e) {
            range_fail("mesh.file", e.what());
        }
        const GuardCheck g = check_theta_guard(p, h);
        if (!g.ok) range_fail("scheme.theta", "step-size guard violated: " + g.reason);
    }
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", "");
    std::stringstream ss;
    ss << in.rdbuf();
    SimulationConfig cfg = parse_config(ss.str());
    validate_config(cfg);
    return cfg;
}

namespace {

// Shortest text that reads back to the same double.
std::string shortest(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string echo_config(const SimulationConfig& c) {
    std::ostringstream os;
    auto line = [&](const std::string& field, const auto& value) {
        const auto dot = field.find('.');
        os << field.substr(dot + 1) << " = ";
        if constexpr (std::is_same_v<std::decay_t<decltype(value)>, double>) {
            os << shortest(value);
        } else {
            os << value;
        }
        if (!c.explicit_keys.count(field)) os << "  # default";
        os << '\n';
    };
    auto vec = [](const Vec3& v) {
        return shortest(v[0]) + ' ' + shortest(v[1]) + ' ' + shortest(v[2]);
    };
    os << "[mesh]\n";
    line("mesh.dim", c.mesh.dim);
    line("mesh.divisions", c.mesh.divisions);
    if (!c.mesh.file.empty()) line("mesh.file", c.mesh.file);
    os << "\n[scheme]\n";
    line("scheme.lambda1", c.scheme.lambda1);
    line("scheme.lambda2", c.scheme.lambda2);
    line("scheme.theta", c.scheme.theta);
    line("scheme.T", c.scheme.horizon);
    line("scheme.J", c.scheme.steps);
    line("scheme.solver_tol", c.scheme.solver_tol);
    line("scheme.max_iterations", c.scheme.max_iterations);
    line("scheme.dense_threshold", c.scheme.dense_threshold);
    line("scheme.guard_constant", c.scheme.guard_constant);
    os << "\n[noise]\n";
    if (c.noise.constants.empty()) {
        line("noise.preset", c.noise.preset);
    } else {
        for (const Vec3& g : c.noise.constants) line("noise.constant", vec(g));
    }
    line("noise.amplitude", c.noise.amplitude);
    os << "\n[initial]\n";
    line("initial.preset", c.initial.preset);
    line("initial.beta", c.initial.beta);
    line("initial.direction", vec(c.initial.direction));
    os << "\n[run]\n";
    line("run.mode", to_string(c.run.mode));
    line("run.seed", c.run.seed);
    line("run.samples", c.run.samples);
    line("run.levels", c.run.levels);
    os << "\n[output]\n";
    line("output.dir", c.output.dir);
    line("output.snapshots", c.output.snapshots);
    line("output.diagnostics", c.output.diagnostics ? "true" : "false");
    line("output.path_csv", c.output.path_csv ? "true" : "false");
    return os.str();
}

Mesh make_mesh(const MeshSpec& spec) {
    if (!spec.file.empty()) {
        Mesh m = read_mesh_file(spec.file);
        if (m.dim != spec.dim) throw InvalidArgument("mesh file dimension does not match mesh.dim");
        return m;
    }
    return build_structured_mesh(spec.dim, spec.divisions);
}

MeshSpec level_mesh(const MeshSpec& finest, int level, int levels) {
    if (level < 0 || level >= levels) throw InvalidArgument("refinement level out of range");
    const int factor = 1 << (levels - 1 - level);
    if (finest.divisions % factor != 0) throw InvalidArgument("divisions not divisible for this level");
    MeshSpec out = finest;
    out.divisions = finest.divisions / factor;
    return out;
}

NoiseCoefficients make_noise(const NoiseSpec& spec) {
    if (spec.constants.empty()) return make_noise_preset(spec.preset, spec.amplitude);
    NoiseCoefficients c;
    for (std::size_t i = 0; i < spec.constants.size(); ++i) {
        c.terms.push_back(constant_term(spec.amplitude * spec.constants[i], "constant-" + std::to_string(i + 1)));
    }
    return c;
}

const std::vector<std::string>& initial_preset_names() {
    static const std::vector<std::string> names{"uniform", "rotating", "twisted", "compatible"};
    return names;
}

FieldFunction make_initial(const InitialSpec& spec) {
    const double bp = spec.beta * std::numbers::pi;
    if (spec.preset == "uniform") {
        const Vec3 d = spec.direction.normalized();
        return [d](const Vec3&) { return d; };
    }
    if (spec.preset == "rotating") {
        return [bp](const Vec3& x) { return Vec3(std::sin(bp * x[0]), 0.0, std::cos(bp * x[0])); };
    }
    if (spec.preset == "twisted") {
        return [bp](const Vec3& x) {
            const double a = bp * x[0];
            const double f = 2.0 * std::numbers::pi * x[1];
            return Vec3(std::sin(a) * std::cos(f), std::sin(a) * std::sin(f), std::cos(a));
        };
    }
    if (spec.preset == "compatible") {
        return [bp](const Vec3& x) {
            const double a = 0.5 * bp * (1.0 - std::cos(std::numbers::pi * x[0]));
            const double f = 0.5 * std::numbers::pi * (1.0 - std::cos(std::numbers::pi * x[1]));
            return Vec3(std::sin(a) * std::cos(f), std::sin(a) * std::sin(f), std::cos(a));
        };
    }
    throw InvalidArgument("unknown initial preset '" + spec.preset + "'");
}

}  // namespace sllg
