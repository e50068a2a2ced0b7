// Command-line front end: convergence studies, scenario runs, norms of saved
// states and the property suite.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "memflow/io.hpp"
#include "memflow/norms.hpp"
#include "memflow/properties.hpp"
#include "memflow/scenarios.hpp"
#include "memflow/solver.hpp"
#include "memflow/verification.hpp"

namespace fs = std::filesystem;
using namespace memflow;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kNonConvergence = 3, kIo = 4 };

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config;
  std::optional<std::string> scheme;
  std::optional<int> k;
  std::optional<double> alpha0;
  std::optional<int> delta;
  std::optional<int> lambda_degree;
  std::vector<int> levels;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::string> case_name;

  [[nodiscard]] bool selects_study() const {
    return !config.empty() || scheme || k || alpha0 || delta || lambda_degree || !levels.empty();
  }
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--scheme", o.scheme, "bdm, th or cr");
  cmd->add_option("--k", o.k, "polynomial degree k");
  cmd->add_option("--alpha0", o.alpha0, "penalty (bdm, cr) or multiplier stabilization (th)");
  cmd->add_option("--delta", o.delta, "stabilization variant -1, 0 or 1 (th)");
  cmd->add_option("--lambda-degree", o.lambda_degree, "multiplier degree for th (0 or 1)");
  cmd->add_option("--levels", o.levels, "cells per side, e.g. --levels 10,20,30,40")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--jobs", o.jobs, "threads for independent levels");
}

RunConfig load(const Overrides& o, CaseKind fallback) {
  RunConfig cfg = o.config.empty() ? default_config(o.case_name ? parse_case(*o.case_name) : fallback)
                                   : parse_config(o.config);
  if (o.case_name && !o.config.empty() && parse_case(*o.case_name) != cfg.kind)
    throw ConfigurationError("--case disagrees with the configuration's case");
  if (o.scheme) cfg.disc.scheme = parse_scheme(*o.scheme);
  if (o.k) cfg.disc.k = *o.k;
  if (o.alpha0) {
    cfg.disc.alpha0 = *o.alpha0;
    cfg.alpha0_given = true;
  }
  if (o.delta) cfg.disc.delta = *o.delta;
  if (o.lambda_degree) cfg.disc.lambda_degree = *o.lambda_degree;
  if (!o.levels.empty()) cfg.levels = o.levels;
  if (o.out) cfg.output = *o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.finalize();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string rate_text(const ConvergenceReport& r, std::size_t i, ErrorField f) {
  const auto v = r.rate(i, f);
  if (!v) return i == 0 ? "*" : "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

void print_report(const std::string& name, const ConvergenceReport& r) {
  std::printf("%s\n", name.c_str());
  std::printf("%8s %9s %9s %6s %9s %6s %9s %6s %9s %6s %3s\n", "DoF", "h", "e(u)", "r(u)", "e(p)", "r(p)", "e(l)",
              "r(l)", "e(t)", "r(t)", "it");
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    if (!row.failure.empty()) {
      std::printf("%8s %9.3f  failed: %s\n", "-", row.h, row.failure.c_str());
      continue;
    }
    std::printf("%8d %9.3e %9.2e %6s %9.2e %6s %9.2e %6s %9.2e %6s %3d\n", row.dof, row.h, row.errors.e_u,
                rate_text(r, i, ErrorField::U).c_str(), row.errors.e_p, rate_text(r, i, ErrorField::P).c_str(),
                row.errors.e_lambda, rate_text(r, i, ErrorField::Lambda).c_str(), row.errors.e_theta,
                rate_text(r, i, ErrorField::Theta).c_str(), row.iterations);
  }
  std::fflush(stdout);
}

bool all_converged(const ConvergenceReport& r) {
  for (const auto& row : r.rows)
    if (!row.failure.empty() || !row.converged) return false;
  return true;
}

int cmd_convergence(const Overrides& o) {
  std::vector<NamedStudy> studies;
  RunConfig cfg;
  if (o.selects_study()) {
    cfg = load(o, CaseKind::Manufactured);
    if (cfg.kind != CaseKind::Manufactured) throw ConfigurationError("convergence needs a manufactured configuration");
    StudyOptions s;
    s.disc = cfg.disc;
    s.levels = cfg.levels;
    s.diagonal = cfg.diagonal;
    s.newton = cfg.newton;
    std::ostringstream name;
    name << to_string(cfg.disc.scheme) << "_k" << cfg.disc.k;
    if (cfg.disc.scheme == Scheme::ConformingStabilized)
      name << "_l" << cfg.disc.multiplier_degree() << "_a" << cfg.disc.alpha0 << "_d" << cfg.disc.delta;
    studies.push_back({name.str(), "", s});
  } else {
    cfg = load(o, CaseKind::Manufactured);
    studies = standard_studies();
  }
  ensure_dir(cfg.output);
  const ManufacturedCase mc = manufactured_case(cfg.physics);
  bool ok = true;
  for (auto& st : studies) {
    st.options.jobs = cfg.jobs;
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceReport rep = convergence_study(mc, st.options);
    rep.label = st.name;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_report(st.name + (st.description.empty() ? "" : " (" + st.description + ")"), rep);
    std::printf("  %.1f s, written to %s\n\n", secs, (cfg.output / (st.name + ".csv")).string().c_str());
    write_convergence_csv(rep, cfg.output / (st.name + ".csv"));
    ok = ok && all_converged(rep);
  }
  if (!ok) throw NonConvergence("at least one level did not converge");
  return kOk;
}

// Manufactured runs solve the finest configured level; channel cases solve
// the configured scenario.
int cmd_run(const Overrides& o) {
  const RunConfig cfg = load(o, CaseKind::Channel);
  ensure_dir(cfg.output);
  SystemState state;
  std::shared_ptr<Discretization> disc;
  NewtonReport rep;
  int level = 0;
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.kind == CaseKind::Manufactured) {
    level = cfg.levels.back();
    StudyOptions s;
    s.disc = cfg.disc;
    s.diagonal = cfg.diagonal;
    s.newton = cfg.newton;
    const ConvergenceRow row = solve_level(manufactured_case(cfg.physics), level, s, &state, &disc);
    if (!row.failure.empty()) throw NonConvergence(row.failure);
    rep.converged = row.converged;
    rep.iterations = row.iterations;
  } else {
    disc = std::make_shared<Discretization>(discretize(build_case_problem(cfg)));
    std::printf("%s: %d unknowns\n", disc->problem.name.c_str(), disc->layout.total_dim);
    std::fflush(stdout);
    state = solve_scenario(*disc, cfg.newton, &rep);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("newton: %s after %d iterations (%.1f s)\n", rep.converged ? "converged" : "not converged",
              rep.iterations, secs);

  nlohmann::json summary;
  summary["case"] = to_string(cfg.kind);
  summary["unknowns"] = disc->layout.total_dim;
  summary["newton"] = {{"converged", rep.converged}, {"iterations", rep.iterations},
                       {"residuals", rep.residual_history}};
  if (!rep.converged) {
    std::ofstream(cfg.output / "summary.json") << summary.dump(2) << '\n';
    throw NonConvergence("Newton did not converge: " + rep.message);
  }
  write_vtk(*disc, state, cfg.output / "fields.vtk");
  write_membrane_vtk(*disc, state, cfg.output / "multiplier.vtk");
  save_state({config_to_json(cfg), level, disc->layout.sizes, state.x}, cfg.output / "state.json");
  if (cfg.kind != CaseKind::Manufactured) {
    const MembraneProfile prof = membrane_profile_extract(*disc, state);
    write_profile_csv(prof, cfg.output / "profile.csv");
    const MassBalance mb = mass_balance(*disc, state);
    summary["mass_balance"] = {{"inlet", mb.inlet},       {"outlet", mb.outlet},
                               {"membrane", mb.membrane}, {"wall", mb.wall},
                               {"permeate_law", mb.permeate_law}, {"relative_defect", mb.relative_defect()}};
    std::printf("mass balance: inlet %.6e outlet %.6e membrane %.6e (relative defect %.2e)\n", mb.inlet,
                mb.outlet, mb.membrane, mb.relative_defect());
  }
  std::ofstream sum(cfg.output / "summary.json");
  sum << summary.dump(2) << '\n';
  if (!sum) throw IoError("failed writing " + (cfg.output / "summary.json").string());
  std::printf("wrote fields.vtk, multiplier.vtk, state.json%s to %s\n",
              cfg.kind == CaseKind::Manufactured ? "" : ", profile.csv", cfg.output.string().c_str());
  return kOk;
}

int cmd_norms(const std::string& path) {
  const SavedState saved = load_state(path);
  RunConfig cfg = parse_config_string(saved.config_json);
  std::shared_ptr<Discretization> disc;
  std::optional<ManufacturedCase> mc;
  if (cfg.kind == CaseKind::Manufactured) {
    mc = manufactured_case(cfg.physics);
    disc = std::make_shared<Discretization>(
        discretize(manufactured_problem(*mc, manufactured_mesh(*mc, saved.level, cfg.diagonal), cfg.disc)));
  } else {
    disc = std::make_shared<Discretization>(discretize(build_case_problem(cfg)));
  }
  if (disc->layout.sizes != saved.block_sizes)
    throw IoError("saved state does not match the discretization rebuilt from its configuration");
  SystemState state(disc->layout);
  state.x = saved.x;
  const int q = default_quadrature_degree(*disc);
  const Eigen::VectorXd u = state.u();
  std::printf("case %s, %d unknowns\n", to_string(cfg.kind).c_str(), disc->layout.total_dim);
  std::printf("||u_h||_1,h      %.6e\n", broken_h1_norm(*disc->velocity, u, disc->problem.nitsche, q));
  std::printf("||div u_h||      %.6e\n", divergence_l2_norm(*disc->velocity, u, q));
  std::printf("||p_h||          %.6e\n", l2_norm(*disc->pressure, state.p(), q));
  std::printf("||lambda_h||_h   %.6e\n", mesh_half_norm(*disc->multiplier, state.lambda(), q));
  std::printf("||theta_h||      %.6e\n", l2_norm(*disc->concentration, state.theta(), q));
  if (mc) {
    const ErrorRecord e = field_errors(*disc, state, mc->exact);
    std::printf("e(u) %.2e  e(p) %.2e  e(lambda) %.2e  e(theta) %.2e\n", e.e_u, e.e_p, e.e_lambda, e.e_theta);
  } else {
    const MassBalance mb = mass_balance(*disc, state);
    std::printf("mass balance relative defect %.2e\n", mb.relative_defect());
  }
  std::printf("(norms in the units of the computation; channel cases are nondimensional)\n");
  return kOk;
}

int cmd_check(const PropertyOptions& opt) {
  bool ok = true;
  for (const auto& r : property_suite(opt)) {
    std::printf("%-4s %-52s %.3e %s %.1e\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value, r.relation.c_str(),
                r.threshold);
    ok = ok && r.pass;
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled Navier-Stokes / transport solver with a membrane multiplier"};
  app.require_subcommand(1);
  Overrides conv, run;
  auto* c1 = app.add_subcommand("convergence", "manufactured convergence studies (CSV per study)");
  add_common(c1, conv);
  auto* c2 = app.add_subcommand("run", "one run from a configuration: VTK, profile CSV, saved state");
  add_common(c2, run);
  c2->add_option("--case", run.case_name, "manufactured, channel, berman or spacer (without --config)");
  std::string state_path;
  auto* c3 = app.add_subcommand("norms", "norms and errors of a saved state");
  c3->add_option("--state", state_path, "state file written by run")->required();
  PropertyOptions popt;
  auto* c4 = app.add_subcommand("check", "property suite: positivity, identities, coercivity, Jacobian");
  c4->add_option("--samples", popt.samples, "random samples per property");
  c4->add_option("--seed", popt.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    if (*c1) return cmd_convergence(conv);
    if (*c2) return cmd_run(run);
    if (*c3) return cmd_norms(state_path);
    if (*c4) return cmd_check(popt);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kIo;
  } catch (const NonConvergence& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const NewtonError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
