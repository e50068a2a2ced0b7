#include "memflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "memflow/assembly.hpp"

namespace memflow {

using nlohmann::json;

std::string to_string(CaseKind c) {
  switch (c) {
    case CaseKind::Manufactured: return "manufactured";
    case CaseKind::Channel: return "channel";
    case CaseKind::Berman: return "berman";
    case CaseKind::Spacer: return "spacer";
  }
  return "?";
}

CaseKind parse_case(const std::string& name) {
  for (auto c : {CaseKind::Manufactured, CaseKind::Channel, CaseKind::Berman, CaseKind::Spacer})
    if (name == to_string(c)) return c;
  throw ConfigurationError("unknown case '" + name + "' (expected manufactured, channel, berman or spacer)");
}

std::optional<std::string> closest_key(const std::string& key, const std::vector<std::string>& candidates) {
  auto distance = [](const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
      }
      std::swap(prev, cur);
    }
    return prev[b.size()];
  };
  std::optional<std::string> best;
  std::size_t best_d = 0;
  for (const auto& c : candidates) {
    const std::size_t d = distance(key, c);
    if (!best || d < best_d) {
      best = c;
      best_d = d;
    }
  }
  if (best && best_d <= std::max<std::size_t>(2, key.size() / 2)) return best;
  return std::nullopt;
}

namespace {

// A JSON object whose keys must all be consumed; reads are type-checked and
// errors carry the dotted key path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigurationError(where("") + " must be an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    known_.push_back(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigurationError("");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigurationError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigurationError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigurationError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigurationError("type mismatch for key '" + where(key) + "'");
    }
  }

  Section sub(const std::string& key) {
    known_.push_back(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  const json* raw(const std::string& key) {
    known_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(known_.begin(), known_.end(), it.key()) != known_.end()) continue;
      std::string msg = "unknown key '" + where(it.key()) + "'";
      if (auto s = closest_key(it.key(), known_)) msg += "; did you mean '" + where(*s) + "'?";
      throw ConfigurationError(msg);
    }
  }

  [[nodiscard]] std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

Diagonal parse_diagonal(const std::string& s) {
  if (s == "right") return Diagonal::Right;
  if (s == "left") return Diagonal::Left;
  if (s == "crossed") return Diagonal::Crossed;
  throw ConfigurationError("mesh.diagonal must be right, left or crossed");
}

std::string diagonal_name(Diagonal d) {
  switch (d) {
    case Diagonal::Right: return "right";
    case Diagonal::Left: return "left";
    case Diagonal::Crossed: return "crossed";
  }
  return "right";
}

RunConfig from_json(const json& doc) {
  RunConfig cfg;
  Section top(doc, "");
  std::string kind = "manufactured";
  top.read("case", kind);
  cfg = default_config(parse_case(kind));
  cfg.alpha0_given = false;

  std::string scheme = to_string(cfg.disc.scheme);
  top.read("scheme", scheme);
  cfg.disc.scheme = parse_scheme(scheme);
  top.read("k", cfg.disc.k);
  if (top.has("alpha0")) cfg.alpha0_given = true;
  top.read("alpha0", cfg.disc.alpha0);
  top.read("delta", cfg.disc.delta);
  top.read("lambda_degree", cfg.disc.lambda_degree);
  top.read("jobs", cfg.jobs);
  if (const json* lv = top.raw("levels")) {
    if (!lv->is_array() || lv->empty()) throw ConfigurationError("'levels' must be a non-empty array of integers");
    cfg.levels.clear();
    for (const auto& e : *lv) {
      if (!e.is_number_integer() || e.get<int>() < 1)
        throw ConfigurationError("'levels' entries must be positive integers");
      cfg.levels.push_back(e.get<int>());
    }
  }
  std::string out = cfg.output.string();
  top.read("output", out);
  cfg.output = out;

  {
    Section s = top.sub("physics");
    // Manufactured runs are nondimensional; channel runs use SI values.
    const bool si = cfg.kind != CaseKind::Manufactured;
    s.read("mu0", si ? cfg.channel.osmosis.mu0 : cfg.physics.mu0);
    s.read("rho0", si ? cfg.channel.osmosis.rho0 : cfg.physics.rho0);
    s.read("D0", si ? cfg.channel.osmosis.D0 : cfg.physics.D0);
    s.finish();
  }
  {
    Section s = top.sub("membrane");
    s.read("A0", cfg.channel.osmosis.A0);
    s.read("deltaP", cfg.channel.osmosis.deltaP);
    s.read("kappa", cfg.channel.osmosis.kappa);
    s.finish();
  }
  {
    Section s = top.sub("channel");
    ChannelConfig& c = cfg.channel;
    s.read("L", c.L);
    s.read("d", c.d);
    s.read("u0", c.u0);
    s.read("theta_in", c.theta_in);
    if (s.has("spacer") && !c.spacer) throw ConfigurationError("'channel.spacer' is only valid for the spacer case");
    Section sp = s.sub("spacer");
    SpacerGeometry geo = c.spacer.value_or(SpacerGeometry{});
    sp.read("diameter", geo.diameter);
    if (const json* ctr = sp.raw("center")) {
      if (!ctr->is_array() || ctr->size() != 2 || !(*ctr)[0].is_number() || !(*ctr)[1].is_number())
        throw ConfigurationError("'channel.spacer.center' must be [x, y]");
      geo.center = Point2((*ctr)[0].get<double>(), (*ctr)[1].get<double>());
    }
    sp.finish();
    if (c.spacer) c.spacer = geo;
    s.finish();
  }
  {
    Section s = top.sub("mesh");
    std::string file, format = "gmsh2", diag = diagonal_name(cfg.diagonal);
    s.read("file", file);
    s.read("format", format);
    s.read("diagonal", diag);
    s.read("nx", cfg.channel.mesh.nx);
    s.read("ny", cfg.channel.mesh.ny);
    s.read("grading", cfg.channel.mesh.grading);
    s.read("inlet_grading", cfg.channel.mesh.inlet_grading);
    s.finish();
    if (!file.empty()) cfg.mesh_file = file;
    try {
      cfg.mesh_format = parse_mesh_format(format);
    } catch (const std::exception& e) {
      throw ConfigurationError(std::string("mesh.format: ") + e.what());
    }
    cfg.diagonal = parse_diagonal(diag);
  }
  {
    Section s = top.sub("solver");
    std::string mode = cfg.newton.mode == ToleranceMode::Relative ? "relative" : "absolute";
    s.read("tol", cfg.newton.tol);
    s.read("max_iter", cfg.newton.max_iter);
    s.read("line_search", cfg.newton.line_search);
    s.read("stokes_warm_start", cfg.newton.stokes_warm_start);
    s.read("tolerance_mode", mode);
    s.finish();
    if (mode == "relative") cfg.newton.mode = ToleranceMode::Relative;
    else if (mode == "absolute") cfg.newton.mode = ToleranceMode::Absolute;
    else throw ConfigurationError("solver.tolerance_mode must be absolute or relative");
  }
  top.finish();
  cfg.finalize();
  return cfg;
}

}  // namespace

void RunConfig::finalize() {
  // The conforming scheme's alpha0 weights the multiplier stabilization,
  // not a velocity penalty, so it gets its own small default.
  if (!alpha0_given)
    disc.alpha0 = disc.scheme == Scheme::ConformingStabilized ? 0.1 : DiscretizationParams::default_alpha0(disc.k);
  disc.validate();
  if (!(newton.tol > 0.0)) throw ConfigurationError("solver.tol must be positive");
  if (newton.max_iter < 1) throw ConfigurationError("solver.max_iter must be at least 1");
  if (jobs < 1) throw ConfigurationError("jobs must be at least 1");
  if (kind == CaseKind::Manufactured) {
    physics.validate();
    if (levels.size() < 1) throw ConfigurationError("levels must not be empty");
  } else {
    channel.disc = disc;
    channel.variant = kind == CaseKind::Berman   ? ChannelVariant::DualMembraneBerman
                      : kind == CaseKind::Spacer ? ChannelVariant::Spacer
                                                 : ChannelVariant::SingleMembrane;
    channel.validate();
  }
}

RunConfig default_config(CaseKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  if (kind == CaseKind::Manufactured) {
    cfg.disc.k = 0;
  } else {
    cfg.disc.k = 1;
    cfg.newton.mode = ToleranceMode::Relative;
    cfg.newton.tol = 1e-8;
    cfg.newton.line_search = true;
    cfg.newton.stokes_warm_start = true;
    cfg.newton.max_iter = 30;
    if (kind == CaseKind::Spacer) {
      cfg.channel.spacer = SpacerGeometry{};
      cfg.channel.spacer->center = Point2(7.5e-3, 0.5 * 3.6e-4 + 4e-6);
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig parse_config_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("malformed configuration: ") + e.what());
  }
  return from_json(doc);
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config_string(ss.str());
  // Mesh files are resolved relative to the configuration.
  if (cfg.mesh_file && cfg.mesh_file->is_relative() && !std::filesystem::exists(*cfg.mesh_file))
    cfg.mesh_file = path.parent_path() / *cfg.mesh_file;
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["case"] = to_string(cfg.kind);
  j["scheme"] = to_string(cfg.disc.scheme);
  j["k"] = cfg.disc.k;
  j["alpha0"] = cfg.disc.alpha0;
  j["delta"] = cfg.disc.delta;
  j["lambda_degree"] = cfg.disc.lambda_degree;
  j["levels"] = cfg.levels;
  j["jobs"] = cfg.jobs;
  j["output"] = cfg.output.string();
  const auto& o = cfg.channel.osmosis;
  if (cfg.kind == CaseKind::Manufactured)
    j["physics"] = {{"mu0", cfg.physics.mu0}, {"rho0", cfg.physics.rho0}, {"D0", cfg.physics.D0}};
  else
    j["physics"] = {{"mu0", o.mu0}, {"rho0", o.rho0}, {"D0", o.D0}};
  j["membrane"] = {{"A0", o.A0}, {"deltaP", o.deltaP}, {"kappa", o.kappa}};
  const auto& c = cfg.channel;
  j["channel"] = {{"L", c.L}, {"d", c.d}, {"u0", c.u0}, {"theta_in", c.theta_in}};
  if (c.spacer)
    j["channel"]["spacer"] = {{"diameter", c.spacer->diameter}, {"center", {c.spacer->center.x(), c.spacer->center.y()}}};
  j["mesh"] = {{"nx", c.mesh.nx}, {"ny", c.mesh.ny}, {"grading", c.mesh.grading},
               {"inlet_grading", c.mesh.inlet_grading}, {"diagonal", diagonal_name(cfg.diagonal)},
               {"format", cfg.mesh_format == MeshFormat::Gmsh2 ? "gmsh2" : "json"}};
  if (cfg.mesh_file) j["mesh"]["file"] = std::filesystem::absolute(*cfg.mesh_file).string();
  j["solver"] = {{"tol", cfg.newton.tol},
                 {"max_iter", cfg.newton.max_iter},
                 {"line_search", cfg.newton.line_search},
                 {"stokes_warm_start", cfg.newton.stokes_warm_start},
                 {"tolerance_mode", cfg.newton.mode == ToleranceMode::Relative ? "relative" : "absolute"}};
  return j.dump(2);
}

ProblemDefinition build_case_problem(const RunConfig& cfg) {
  switch (cfg.kind) {
    case CaseKind::Manufactured:
      throw ConfigurationError("manufactured problems are built per refinement level");
    case CaseKind::Channel:
    case CaseKind::Berman:
      if (cfg.mesh_file) throw ConfigurationError("channel cases generate their mesh; mesh.file is only for spacer");
      return channel_problem(cfg.channel);
    case CaseKind::Spacer: {
      if (!cfg.mesh_file) throw ConfigurationError("the spacer case needs mesh.file");
      std::shared_ptr<const Mesh> mesh;
      try {
        mesh = std::make_shared<const Mesh>(import_mesh(*cfg.mesh_file, cfg.mesh_format));
      } catch (const MeshError& e) {
        if (!std::filesystem::exists(*cfg.mesh_file)) throw IoError(e.what());
        throw;
      }
      return spacer_problem(cfg.channel, mesh);
    }
  }
  throw ConfigurationError("unknown case");
}

// ---------------------------------------------------------------- CSV

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string format_h(double h) { return h >= 0.01 ? fmt("%.3f", h) : fmt("%.2e", h); }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_convergence_csv(const ConvergenceReport& report, std::ostream& out) {
  if (report.rows.empty()) throw ConfigurationError("cannot write an empty convergence report");
  out << "DoF,h,e(u),r(u),e(p),r(p),e(\xce\xbb),r(\xce\xbb),e(\xce\xb8),r(\xce\xb8),it\n";
  const ErrorField fields[] = {ErrorField::U, ErrorField::P, ErrorField::Lambda, ErrorField::Theta};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << r.dof << ',' << format_h(r.h);
    for (auto f : fields) {
      out << ',' << fmt("%.2e", ConvergenceReport::value(r, f)) << ',';
      if (i == 0) {
        out << '*';
      } else {
        const auto rate = report.rate(i, f);
        out << (rate ? fmt("%.2f", *rate) : std::string("nan"));
      }
    }
    out << ',' << r.iterations << '\n';
  }
}

void write_convergence_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_convergence_csv(report, out);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<CsvRow> parse_convergence_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("DoF,h,", 0) != 0) throw IoError("convergence CSV lacks its header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != 11) throw IoError("convergence CSV row has " + std::to_string(cells.size()) + " columns");
    CsvRow r;
    try {
      r.dof = std::stoi(cells[0]);
      r.h = std::stod(cells[1]);
      for (int k = 0; k < 4; ++k) {
        r.errors[k] = std::stod(cells[2 + 2 * k]);
        const std::string& rc = cells[3 + 2 * k];
        if (rc != "*" && rc != "nan") r.rates[k] = std::stod(rc);
      }
      r.iterations = std::stoi(cells[10]);
    } catch (const std::exception&) {
      throw IoError("malformed convergence CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<CsvRow> parse_convergence_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_convergence_csv(in);
}

void write_profile_csv(const MembraneProfile& p, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "run,s,x,y,u_n,g,theta,p\n";
  char buf[256];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e\n", p.run[i], p.arclength[i],
                  p.position[i].x(), p.position[i].y(), p.normal_velocity[i], p.permeate[i], p.theta[i], p.pressure[i]);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- VTK

void write_vtk(const Discretization& disc, const SystemState& state, const std::filesystem::path& path) {
  const Mesh& m = *disc.mesh;
  const int nv = m.num_vertices();
  Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(nv, 2);
  Eigen::VectorXd pres = Eigen::VectorXd::Zero(nv), conc = Eigen::VectorXd::Zero(nv), count = Eigen::VectorXd::Zero(nv);
  const std::vector<Point2> corners{Point2(0, 0), Point2(1, 0), Point2(0, 1)};
  const Eigen::VectorXd u = state.u(), p = state.p(), th = state.theta();
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellBasis bu = disc.velocity->tabulate(c, corners);
    const CellBasis bp = disc.pressure->tabulate(c, corners);
    const CellBasis bt = disc.concentration->tabulate(c, corners);
    const Eigen::VectorXd lu = gather(*disc.velocity, c, u), lp = gather(*disc.pressure, c, p),
                          lt = gather(*disc.concentration, c, th);
    for (int i = 0; i < 3; ++i) {
      const int v = m.cell(c)[i];
      vel.row(v) += field_value(bu, i, lu).transpose();
      pres[v] += field_value(bp, i, lp)[0];
      conc[v] += field_value(bt, i, lt)[0];
      count[v] += 1.0;
    }
  }
  // Written in physical units.
  const Scales& sc = disc.problem.scales;
  vel *= sc.velocity;
  pres *= sc.pressure;
  conc *= sc.concentration;
  const auto boundary = m.boundary_facets();
  auto out = open_out(path);
  out.precision(10);
  out << "# vtk DataFile Version 3.0\n" << disc.problem.name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const auto& x : m.vertices()) out << sc.length * x.x() << ' ' << sc.length * x.y() << " 0\n";
  const int ncells = m.num_cells() + static_cast<int>(boundary.size());
  out << "CELLS " << ncells << ' ' << 4 * m.num_cells() + 3 * boundary.size() << '\n';
  for (const auto& c : m.cells()) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  for (int f : boundary) out << "2 " << m.facet(f).vertices[0] << ' ' << m.facet(f).vertices[1] << '\n';
  out << "CELL_TYPES " << ncells << '\n';
  for (int c = 0; c < m.num_cells(); ++c) out << "5\n";
  for (std::size_t f = 0; f < boundary.size(); ++f) out << "3\n";
  out << "CELL_DATA " << ncells << "\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < m.num_cells(); ++c) out << "-1\n";
  for (int f : boundary) out << static_cast<int>(*m.tag(f)) << '\n';
  out << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  for (int v = 0; v < nv; ++v) {
    const double w = count[v] > 0 ? 1.0 / count[v] : 0.0;
    out << vel(v, 0) * w << ' ' << vel(v, 1) * w << " 0\n";
  }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) out << (count[v] > 0 ? pres[v] / count[v] : 0.0) << '\n';
  out << "SCALARS concentration double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) out << (count[v] > 0 ? conc[v] / count[v] : 0.0) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_membrane_vtk(const Discretization& disc, const SystemState& state, const std::filesystem::path& path) {
  const Mesh& m = *disc.mesh;
  const MultiplierSpace& L = *disc.multiplier;
  const Eigen::VectorXd lam = state.lambda();
  const Scales& sc = disc.problem.scales;
  auto out = open_out(path);
  out.precision(10);
  const int nf = static_cast<int>(L.facets().size());
  // Each facet gets its own two points since the multiplier is discontinuous.
  out << "# vtk DataFile Version 3.0\nmultiplier\nASCII\nDATASET POLYDATA\nPOINTS " << 2 * nf << " double\n";
  for (int f : L.facets())
    for (int v : m.facet(f).vertices) out << sc.length * m.vertex(v).x() << ' ' << sc.length * m.vertex(v).y() << " 0\n";
  out << "LINES " << nf << ' ' << 3 * nf << '\n';
  for (int i = 0; i < nf; ++i) out << "2 " << 2 * i << ' ' << 2 * i + 1 << '\n';
  out << "POINT_DATA " << 2 * nf << "\nSCALARS lambda double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < nf; ++i)
    for (double t : {0.0, 1.0}) {
      const Eigen::VectorXd phi = L.eval(t);
      double val = 0.0;
      for (int j = 0; j < L.dofs_per_facet(); ++j) val += phi[j] * lam[L.dof(i, j)];
      out << sc.pressure * val << '\n';
    }
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- state

void save_state(const SavedState& s, const std::filesystem::path& path) {
  json j;
  j["format"] = "memflow-state";
  j["version"] = 1;
  j["config"] = json::parse(s.config_json);
  j["level"] = s.level;
  j["blocks"] = s.block_sizes;
  std::vector<double> x(s.x.data(), s.x.data() + s.x.size());
  j["x"] = x;
  auto out = open_out(path);
  out << j.dump();
  if (!out) throw IoError("failed writing " + path.string());
}

SavedState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed state file " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "memflow-state") throw IoError(path.string() + " is not a saved state");
  SavedState s;
  try {
    s.config_json = j.at("config").dump();
    s.level = j.at("level").get<int>();
    s.block_sizes = j.at("blocks").get<std::array<int, 4>>();
    const auto x = j.at("x").get<std::vector<double>>();
    s.x = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  } catch (const json::exception& e) {
    throw IoError("incomplete state file " + path.string() + ": " + e.what());
  }
  int total = 0;
  for (int b : s.block_sizes) total += b;
  if (total != s.x.size()) throw IoError("state file block sizes do not match its vector");
  return s;
}

}  // namespace memflow
