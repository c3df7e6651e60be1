#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sllg/fem.hpp"
#include "sllg/mesh.hpp"
#include "sllg/noise.hpp"
#include "sllg/tangent_scheme.hpp"

namespace sllg {

enum class StudyMode { single, monte_carlo, refinement };

struct MeshSpec {
    int dim = 2;
    int divisions = 8;
    /// Mesh file; when non-empty it replaces the structured mesh.
    std::string file;
};

struct NoiseSpec {
    std::string preset = "constant-z";
    double amplitude = 1.0;
    /// Constant vectors g_i; when non-empty they replace the preset.
    std::vector<Vec3> constants;
};

struct InitialSpec {
    /// uniform | rotating | twisted | compatible
    std::string preset = "rotating";
    double beta = 1.0;
    Vec3 direction = Vec3::UnitZ();
};

struct RunSpec {
    StudyMode mode = StudyMode::single;
    std::uint64_t seed = 1;
    int samples = 4;
    int levels = 3;
};

struct OutputSpec {
    std::string dir = "out";
    /// VTK snapshot stride in steps; 0 disables snapshots.
    int snapshots = 0;
    bool diagnostics = true;
    bool path_csv = false;
};

struct SimulationConfig {
    MeshSpec mesh;
    SchemeParams scheme;
    NoiseSpec noise;
    InitialSpec initial;
    RunSpec run;
    OutputSpec output;
    /// "section.key" of every field given explicitly in the source text.
    std::set<std::string> explicit_keys;
};

/// Parses the INI-style format described in docs/config.md. Throws
/// ConfigError with a 1-based line and column on syntax errors, unknown keys
/// and malformed values. Does not range-check.
SimulationConfig parse_config(const std::string& text);

/// Range checks and the θ step-size guard; throws ConfigError naming the field.
void validate_config(const SimulationConfig& config);

/// parse_config + validate_config on a file.
SimulationConfig load_config(const std::string& path);

/// Resolved configuration in the input format; defaulted fields are marked
/// with a trailing "# default" comment.
std::string echo_config(const SimulationConfig& config);

std::string to_string(StudyMode mode);

/// Mesh for the config (structured or read from file).
Mesh make_mesh(const MeshSpec& spec);
/// Structured mesh at refinement level `level` of `levels` (finest is levels − 1).
MeshSpec level_mesh(const MeshSpec& finest, int level, int levels);
NoiseCoefficients make_noise(const NoiseSpec& spec);

/// Initial magnetization presets:
///   uniform   m = direction/|direction|
///   rotating  m = (sin βπx₁, 0, cos βπx₁)
///   twisted   m = (sin α cos φ, sin α sin φ, cos α), α = βπx₁, φ = 2πx₂
///   compatible  same form with α = ½βπ(1 − cos πx₁), φ = ½π(1 − cos πx₂),
///               so that ∂_n m = 0 on the boundary of the unit square
FieldFunction make_initial(const InitialSpec& spec);
const std::vector<std::string>& initial_preset_names();

}  // namespace sllg
