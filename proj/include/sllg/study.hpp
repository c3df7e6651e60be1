#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sllg/config.hpp"
#include "sllg/diagnostics.hpp"
#include "sllg/tangent_scheme.hpp"
#include "sllg/wiener.hpp"

namespace sllg {

struct ReportRow {
    std::string kind;
    double h = 0.0;
    double k = 0.0;
    double theta = 0.0;
    std::uint64_t seed = 0;
    std::string quantity;
    double value = 0.0;
};

struct StudyReport {
    std::vector<ReportRow> rows;
    bool invariants_ok = true;
    std::vector<std::string> failures;

    void add(std::string kind, double h, double k, double theta, std::uint64_t seed, std::string quantity,
             double value);
    /// Value of the first row matching kind and quantity (and seed, if given).
    /// Throws InvalidArgument if there is none.
    [[nodiscard]] double find(const std::string& kind, const std::string& quantity) const;
    [[nodiscard]] double find(const std::string& kind, const std::string& quantity, std::uint64_t seed) const;
};

/// CSV with columns kind,h,k,theta,seed,quantity,value.
void write_report_csv(std::ostream& os, const StudyReport& report);

/// Tolerances of the per-run invariant suite.
struct InvariantTolerances {
    double sphere = 1e-12;
    double tangency = 1e-9;
    double orthogonality = 1e-12;
    double energy_slack = 1e-9;
};

/// Descriptions of every violated invariant; empty when all hold. The energy
/// inequality is only required for θ ≥ ½ on meshes with nonpositive
/// off-diagonal stiffness entries.
std::vector<std::string> check_invariants(const Trajectory& traj, const InvariantTolerances& tol = {});

/// Worker threads for Monte Carlo studies: SLLG_WORKERS if set, else 1.
int worker_count();

/// Per-run summary rows (kind "run") for one trajectory.
void add_run_rows(StudyReport& report, const Trajectory& traj, double h, std::uint64_t seed);

/// Results of one refinement level.
struct RefinementLevel {
    int level = 0;
    double h = 0.0;
    double k = 0.0;
    InterpolantErrors errors;
    std::vector<WeakResidual> residuals;
    Trajectory trajectory;
};

/// Runs level `level` of `config.run.levels` on the path obtained by
/// coarsening `fine` (sampled with config.scheme.steps steps).
RefinementLevel run_refinement_level(const SimulationConfig& config, const WienerPath& fine, int level,
                                     const std::vector<TestField>& fields);

/// When `write_files` is set, artifacts go to config.output.dir.
StudyReport run_single(const SimulationConfig& config, bool write_files = true);
StudyReport run_monte_carlo(const SimulationConfig& config, bool write_files = true);
StudyReport run_refinement_study(const SimulationConfig& config, bool write_files = true);

/// Process exit codes.
enum ExitCode : int { kExitPass = 0, kExitError = 1, kExitInvariant = 2, kExitSolver = 3, kExitConfig = 4 };

/// Runs the configured study, writes its artifacts and returns the exit code.
int run_study(const SimulationConfig& config, std::ostream& out, std::ostream& err);

/// `simulate <config> [--theta x] [--seed n] [--samples n] [--levels n]
/// [--out dir] [--snapshots stride]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sllg
