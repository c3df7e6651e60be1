#include "sllg/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sllg/errors.hpp"

namespace sllg {

namespace fs = std::filesystem;

void StudyReport::add(std::string kind, double h, double k, double theta, std::uint64_t seed, std::string quantity,
                      double value) {
    rows.push_back(ReportRow{std::move(kind), h, k, theta, seed, std::move(quantity), value});
}

double StudyReport::find(const std::string& kind, const std::string& quantity) const {
    for (const auto& r : rows) {
        if (r.kind == kind && r.quantity == quantity) return r.value;
    }
    throw InvalidArgument("report has no row " + kind + "/" + quantity);
}

double StudyReport::find(const std::string& kind, const std::string& quantity, std::uint64_t seed) const {
    for (const auto& r : rows) {
        if (r.kind == kind && r.quantity == quantity && r.seed == seed) return r.value;
    }
    throw InvalidArgument("report has no row " + kind + "/" + quantity + " for seed " + std::to_string(seed));
}

void write_report_csv(std::ostream& os, const StudyReport& report) {
    os << "kind,h,k,theta,seed,quantity,value\n" << std::setprecision(17);
    for (const auto& r : report.rows) {
        os << r.kind << ',' << r.h << ',' << r.k << ',' << r.theta << ',' << r.seed << ',' << r.quantity << ','
           << r.value << '\n';
    }
}

std::vector<std::string> check_invariants(const Trajectory& traj, const InvariantTolerances& tol) {
    std::vector<std::string> out;
    auto fmt = [](double x) {
        std::ostringstream s;
        s << std::setprecision(3) << x;
        return s.str();
    };
    if (traj.max_sphere_defect() > tol.sphere) out.push_back("unit nodal norm violated: " + fmt(traj.max_sphere_defect()));
    if (traj.max_tangency() > tol.tangency) out.push_back("nodal tangency violated: " + fmt(traj.max_tangency()));
    if (traj.max_orthogonality_defect() > tol.orthogonality) {
        out.push_back("rotation orthogonality violated: " + fmt(traj.max_orthogonality_defect()));
    }
    if (traj.params.theta >= 0.5 && traj.offdiag_holds && !traj.steps.empty() &&
        traj.min_energy_slack() < -tol.energy_slack) {
        out.push_back("per-step energy inequality violated: slack " + fmt(traj.min_energy_slack()));
    }
    return out;
}

int worker_count() {
    if (const char* env = std::getenv("SLLG_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

void add_run_rows(StudyReport& report, const Trajectory& traj, double h, std::uint64_t seed) {
    const SchemeParams& p = traj.params;
    const double k = p.k();
    auto add = [&](const char* q, double v) { report.add("run", h, k, p.theta, seed, q, v); };
    double sup_energy = traj.final_state.energy, v_sum = 0.0;
    double mean_sphere = 0.0, mean_tangency = 0.0, mean_orth = 0.0;
    for (const auto& s : traj.steps) {
        sup_energy = std::max(sup_energy, s.energy);
        v_sum += k * s.v_norm_sq;
        mean_sphere += s.sphere_defect;
        mean_tangency += s.tangency;
        mean_orth += s.orthogonality_defect;
    }
    const double n = std::max<double>(1.0, static_cast<double>(traj.steps.size()));
    add("final_energy", traj.final_state.energy);
    add("sup_energy", sup_energy);
    add("k_sum_v_sq", v_sum);
    add("max_sphere_defect", traj.max_sphere_defect());
    add("mean_sphere_defect", mean_sphere / n);
    add("max_tangency", traj.max_tangency());
    add("mean_tangency", mean_tangency / n);
    add("max_orthogonality_defect", traj.max_orthogonality_defect());
    add("mean_orthogonality_defect", mean_orth / n);
    add("min_energy_slack", traj.steps.empty() ? 0.0 : traj.min_energy_slack());
    add("initial_renormalized", traj.initial_renormalized ? 1.0 : 0.0);
}

namespace {

bool noise_is_zero(const NoiseCoefficients& coeffs, const Mesh& mesh) {
    for (const auto& term : coeffs.terms) {
        for (const Vec3& x : mesh.vertices) {
            if (!term.value(x).isZero(0.0) || !term.jacobian(x).isZero(0.0)) return false;
        }
    }
    return true;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

std::string report_csv(const StudyReport& r) {
    std::ostringstream os;
    write_report_csv(os, r);
    return os.str();
}

std::string diagnostics_csv(const Trajectory& t) {
    std::ostringstream os;
    write_diagnostics_csv(os, t);
    return os.str();
}

void prepare_dir(const SimulationConfig& config) {
    fs::create_directories(config.output.dir);
    fs::remove(fs::path(config.output.dir) / "INCOMPLETE");
    write_text(fs::path(config.output.dir) / "resolved_config.ini", echo_config(config));
}

std::string snapshot_name(int j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06d.vtk", j);
    return buf;
}

}  // namespace

StudyReport run_single(const SimulationConfig& config, bool write_files) {
    const P1Space space(make_mesh(config.mesh));
    const NoiseCoefficients coeffs = make_noise(config.noise);
    const WienerPath path = sample_path(config.run.seed, coeffs.q(), config.scheme.steps, config.scheme.horizon);
    const NodalField3 m0 = interpolate_nodal(make_initial(config.initial), space);
    if (write_files) prepare_dir(config);
    const fs::path dir(config.output.dir);

    RunOptions opts;
    opts.keep_states = false;
    const int stride = config.output.snapshots;
    if (write_files && stride > 0) {
        opts.observer = [&](const NodalState& s, const RotationField& rot) {
            if (s.j % stride != 0 && s.j != config.scheme.steps) return;
            std::ofstream os(dir / snapshot_name(s.j));
            write_vtk(os, space.mesh(), {{"m", s.m}, {"M", reconstruct_M(s, rot)}},
                      "t = " + std::to_string(s.t));
        };
    }
    const Trajectory traj = run(m0, config.scheme, path, coeffs, space, opts);

    StudyReport report;
    add_run_rows(report, traj, space.h(), config.run.seed);
    report.failures = check_invariants(traj);
    if (noise_is_zero(coeffs, space.mesh())) {
        // trajectory must not depend on the path when there is no noise
        const WienerPath other = sample_path(derive_seed(config.run.seed, 1), coeffs.q(), config.scheme.steps,
                                             config.scheme.horizon);
        RunOptions quiet;
        quiet.keep_states = false;
        const Trajectory again = run(m0, config.scheme, other, coeffs, space, quiet);
        const bool same = again.final_state.m == traj.final_state.m && diagnostics_csv(again) == diagnostics_csv(traj);
        report.add("invariant", space.h(), config.scheme.k(), config.scheme.theta, config.run.seed,
                   "deterministic_reduction", same ? 1.0 : 0.0);
        if (!same) report.failures.push_back("zero-noise trajectory depends on the Wiener path");
    }
    report.invariants_ok = report.failures.empty();

    if (write_files) {
        if (config.output.diagnostics) write_text(dir / "diagnostics.csv", diagnostics_csv(traj));
        if (config.output.path_csv) {
            std::ofstream os(dir / "path.csv");
            write_path_csv(os, path);
        }
        write_text(dir / "report.csv", report_csv(report));
    }
    return report;
}

StudyReport run_monte_carlo(const SimulationConfig& config, bool write_files) {
    if (config.run.samples < 2) throw InvalidArgument("Monte Carlo studies need at least 2 samples");
    const P1Space space(make_mesh(config.mesh));
    const NoiseCoefficients coeffs = make_noise(config.noise);
    const NodalField3 m0 = interpolate_nodal(make_initial(config.initial), space);
    if (write_files) prepare_dir(config);
    const fs::path dir(config.output.dir);

    const int n = config.run.samples;
    std::vector<std::optional<Trajectory>> results(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < n; r = next++) {
            try {
                const std::uint64_t seed = derive_seed(config.run.seed, static_cast<std::uint64_t>(r));
                const WienerPath path = sample_path(seed, coeffs.q(), config.scheme.steps, config.scheme.horizon);
                RunOptions opts;
                opts.keep_states = false;
                results[r] = run(m0, config.scheme, path, coeffs, space, opts);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    const int workers = std::min(worker_count(), n);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (int r = 0; r < n; ++r) {
        if (!errors[r]) continue;
        const std::uint64_t seed = derive_seed(config.run.seed, static_cast<std::uint64_t>(r));
        try {
            std::rethrow_exception(errors[r]);
        } catch (const SolverFailure& e) {
            throw SolverFailure("sample " + std::to_string(r) + " (seed " + std::to_string(seed) + "): " + e.what(),
                                e.residual(), e.iterations());
        } catch (const std::exception& e) {
            throw std::runtime_error("sample " + std::to_string(r) + " (seed " + std::to_string(seed) +
                                     ") failed: " + e.what());
        }
    }

    StudyReport report;
    const double h = space.h(), k = config.scheme.k(), theta = config.scheme.theta;
    for (int r = 0; r < n; ++r) {
        const std::uint64_t seed = derive_seed(config.run.seed, static_cast<std::uint64_t>(r));
        add_run_rows(report, *results[r], h, seed);
        for (const auto& f : check_invariants(*results[r])) {
            report.failures.push_back("seed " + std::to_string(seed) + ": " + f);
        }
        if (write_files && config.output.diagnostics) {
            write_text(dir / ("diagnostics_" + std::to_string(r) + ".csv"), diagnostics_csv(*results[r]));
        }
    }
    for (const char* q : {"sup_energy", "k_sum_v_sq", "final_energy"}) {
        double sum = 0.0;
        std::vector<double> xs;
        for (const auto& row : report.rows) {
            if (row.kind == "run" && row.quantity == q) xs.push_back(row.value);
        }
        for (double x : xs) sum += x;
        const double mean = sum / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double stderr_ = std::sqrt(ss / (n - 1) / n);
        report.add("aggregate", h, k, theta, config.run.seed, std::string("mean_") + q, mean);
        report.add("aggregate", h, k, theta, config.run.seed, std::string("stderr_") + q, stderr_);
    }
    report.invariants_ok = report.failures.empty();
    if (write_files) write_text(dir / "report.csv", report_csv(report));
    return report;
}

RefinementLevel run_refinement_level(const SimulationConfig& config, const WienerPath& fine, int level,
                                     const std::vector<TestField>& fields) {
    const int levels = config.run.levels;
    if (level < 0 || level >= levels) throw InvalidArgument("refinement level out of range");
    if (fine.steps != config.scheme.steps) throw InvalidArgument("fine path does not have the finest step count");
    const int factor = 1 << (levels - 1 - level);
    const P1Space space(make_mesh(level_mesh(config.mesh, level, levels)));
    const NoiseCoefficients coeffs = make_noise(config.noise);
    const WienerPath path = coarsen(fine, factor);
    SchemeParams params = config.scheme;
    params.steps = path.steps;
    const NodalField3 m0 = interpolate_nodal(make_initial(config.initial), space);

    RefinementLevel out;
    out.level = level;
    out.h = space.h();
    out.k = params.k();
    out.trajectory = run(m0, params, path, coeffs, space);
    const TrajectoryInterpolants interp(out.trajectory);
    out.errors = interpolant_errors(interp, space);
    out.residuals = weak_residuals(interp, space, coeffs, path, fields);
    return out;
}

StudyReport run_refinement_study(const SimulationConfig& config, bool write_files) {
    const int levels = config.run.levels;
    if (levels < 3) throw InvalidArgument("refinement studies need at least 3 levels");
    const NoiseCoefficients coeffs = make_noise(config.noise);
    const WienerPath fine = sample_path(config.run.seed, coeffs.q(), config.scheme.steps, config.scheme.horizon);
    const std::vector<TestField> fields = default_test_fields(config.scheme.horizon);
    if (write_files) prepare_dir(config);
    const fs::path dir(config.output.dir);

    StudyReport report;
    const double theta = config.scheme.theta;
    const std::uint64_t seed = config.run.seed;
    std::vector<std::vector<double>> table;
    const std::vector<std::string> names{"sphere_l2", "m_minus_l2", "v_dt_l1", "weak_residual_abs"};
    for (int l = 0; l < levels; ++l) {
        const RefinementLevel lev = run_refinement_level(config, fine, l, fields);
        add_run_rows(report, lev.trajectory, lev.h, seed);
        for (const auto& f : check_invariants(lev.trajectory)) {
            report.failures.push_back("level " + std::to_string(l) + ": " + f);
        }
        double res = 0.0;
        for (std::size_t i = 0; i < lev.residuals.size(); ++i) {
            report.add("level", lev.h, lev.k, theta, seed, "weak_residual_" + std::to_string(i + 1),
                       lev.residuals[i].value);
            res += std::abs(lev.residuals[i].value) / static_cast<double>(lev.residuals.size());
        }
        const std::vector<double> vals{std::sqrt(lev.errors.sphere_sq), std::sqrt(lev.errors.m_minus_sq),
                                       lev.errors.v_dt_l1, res};
        for (std::size_t q = 0; q < names.size(); ++q) report.add("level", lev.h, lev.k, theta, seed, names[q], vals[q]);
        if (!table.empty()) {
            for (std::size_t q = 0; q < names.size(); ++q) {
                report.add("order", lev.h, lev.k, theta, seed, names[q], std::log2(table.back()[q] / vals[q]));
            }
        }
        table.push_back(vals);
        if (write_files && config.output.diagnostics) {
            write_text(dir / ("diagnostics_level" + std::to_string(l) + ".csv"), diagnostics_csv(lev.trajectory));
        }
    }
    report.invariants_ok = report.failures.empty();
    if (write_files) write_text(dir / "report.csv", report_csv(report));
    return report;
}

int run_study(const SimulationConfig& config, std::ostream& out, std::ostream& err) {
    auto mark_incomplete = [&](const std::string& why) {
        std::error_code ec;
        fs::create_directories(config.output.dir, ec);
        std::ofstream os(fs::path(config.output.dir) / "INCOMPLETE");
        os << why << '\n';
    };
    try {
        StudyReport report;
        switch (config.run.mode) {
            case StudyMode::single: report = run_single(config); break;
            case StudyMode::monte_carlo: report = run_monte_carlo(config); break;
            case StudyMode::refinement: report = run_refinement_study(config); break;
        }
        out << to_string(config.run.mode) << " study finished, " << report.rows.size() << " report rows in "
            << config.output.dir << '\n';
        if (!report.invariants_ok) {
            for (const auto& f : report.failures) err << "invariant failure: " << f << '\n';
            return kExitInvariant;
        }
        return kExitPass;
    } catch (const SolverFailure& e) {
        err << "solver failure: " << e.what() << '\n';
        mark_incomplete(e.what());
        return kExitSolver;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const GuardViolation& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        mark_incomplete(e.what());
        return kExitError;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tangent-plane finite element solver for the stochastic LLG equation"};
    std::string config_path;
    std::optional<double> theta;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples, levels, snapshots;
    std::optional<std::string> out_dir;
    app.add_option("config", config_path, "configuration file")->required();
    app.add_option("--theta", theta, "override scheme.theta");
    app.add_option("--seed", seed, "override run.seed");
    app.add_option("--samples", samples, "override run.samples");
    app.add_option("--levels", levels, "override run.levels");
    app.add_option("--out", out_dir, "override output.dir");
    app.add_option("--snapshots", snapshots, "override output.snapshots (VTK stride, 0 = off)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "command line: " << e.what() << '\n';
        return kExitConfig;
    }

    SimulationConfig config;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file '" + config_path + "'", "");
        std::stringstream ss;
        ss << in.rdbuf();
        config = parse_config(ss.str());
        if (theta) {
            config.scheme.theta = *theta;
            config.explicit_keys.insert("scheme.theta");
        }
        if (seed) {
            config.run.seed = *seed;
            config.explicit_keys.insert("run.seed");
        }
        if (samples) {
            config.run.samples = *samples;
            config.explicit_keys.insert("run.samples");
        }
        if (levels) {
            config.run.levels = *levels;
            config.explicit_keys.insert("run.levels");
        }
        if (out_dir) {
            config.output.dir = *out_dir;
            config.explicit_keys.insert("output.dir");
        }
        if (snapshots) {
            config.output.snapshots = *snapshots;
            config.explicit_keys.insert("output.snapshots");
        }
        validate_config(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    out << echo_config(config) << '\n';
    return run_study(config, out, err);
}

}  // namespace sllg
