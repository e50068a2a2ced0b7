#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memflow/io.hpp"

using namespace memflow;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

ConvergenceRow row(int dof, double h, double e) {
  ConvergenceRow r;
  r.dof = dof;
  r.h = h;
  r.errors = {e, 2 * e, 3 * e, 0, 4 * e};
  r.iterations = 3;
  r.converged = true;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "memflow_io_test";
  fs::create_directories(dir);
  return dir / name;
}

// Minimal legacy VTK reader: section name -> the tokens that follow it.
struct Vtk {
  std::map<std::string, std::vector<std::string>> header;
  std::vector<std::string> tokens;
  explicit Vtk(const fs::path& p) {
    std::ifstream in(p);
    std::string t;
    while (in >> t) tokens.push_back(t);
  }
  [[nodiscard]] std::size_t find(const std::string& key, std::size_t from = 0) const {
    for (std::size_t i = from; i < tokens.size(); ++i)
      if (tokens[i] == key) return i;
    return tokens.size();
  }
};

}  // namespace

TEST_CASE("minimal manufactured configuration gets the documented defaults") {
  const RunConfig c = parse_config_string("{}");
  CHECK(c.kind == CaseKind::Manufactured);
  CHECK(c.disc.k == 0);
  CHECK(c.disc.alpha0 == 20.0);
  CHECK(c.newton.tol == 1e-7);
  CHECK(c.newton.mode == ToleranceMode::Absolute);
  CHECK(parse_config_string(R"({"k": 1})").disc.alpha0 == 30.0);
  CHECK(parse_config_string(R"({"k": 1, "alpha0": 5})").disc.alpha0 == 5.0);
  CHECK(parse_config_string(R"({"scheme": "th"})").disc.alpha0 == 0.1);
}

TEST_CASE("unknown keys suggest the closest known key") {
  CHECK(error_of(R"({"alpha_zero": 3})") == "unknown key 'alpha_zero'; did you mean 'alpha0'?");
  CHECK(error_of(R"({"solver": {"max_iters": 3}})").find("unknown key 'solver.max_iters'; did you mean 'solver.max_iter'?") != std::string::npos);
  CHECK(error_of(R"({"zzzzzzzz": 3})").find("did you mean") == std::string::npos);
  CHECK(closest_key("tol", {"tol", "max_iter"}) == "tol");
  CHECK_FALSE(closest_key("qqq", {"alpha0"}));
}

TEST_CASE("invariant and type violations name the key") {
  CHECK(error_of(R"({"scheme": "th", "delta": 2})").find("delta") != std::string::npos);
  CHECK(error_of(R"({"k": "one"})").find("'k'") != std::string::npos);
  CHECK(error_of(R"({"solver": {"tol": -1}})").find("tol") != std::string::npos);
  CHECK(error_of(R"({"levels": []})").find("levels") != std::string::npos);
  CHECK(error_of(R"({"case": "channel", "channel": {"spacer": {}}})").find("spacer") != std::string::npos);
  CHECK(error_of(R"({"case": "channel", "channel": {"theta_in": 900}})").find("filter") != std::string::npos);
  CHECK(error_of("{not json").find("malformed") != std::string::npos);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("configuration round trips through its JSON text") {
  RunConfig c = default_config(CaseKind::Berman);
  c.channel.u0 = 0.05;
  c.levels = {3, 6};
  const RunConfig r = parse_config_string(config_to_json(c));
  CHECK(r.kind == CaseKind::Berman);
  CHECK(r.channel.u0 == 0.05);
  CHECK(r.levels == c.levels);
  CHECK(r.newton.mode == ToleranceMode::Relative);
  CHECK(r.disc.alpha0 == c.disc.alpha0);
  CHECK(config_to_json(r) == config_to_json(c));
}

TEST_CASE("spacer case needs a mesh file, missing files are I/O errors") {
  RunConfig c = default_config(CaseKind::Spacer);
  CHECK_THROWS_AS(build_case_problem(c), ConfigurationError);
  c.mesh_file = "/nonexistent/spacer.msh";
  CHECK_THROWS_AS(build_case_problem(c), IoError);
  CHECK_THROWS_AS(build_case_problem(default_config(CaseKind::Manufactured)), ConfigurationError);
}

TEST_CASE("one-row report: header and starred rates") {
  ConvergenceReport r;
  r.rows = {row(100, 0.141, 0.5)};
  std::ostringstream out;
  write_convergence_csv(r, out);
  CHECK(out.str() == "DoF,h,e(u),r(u),e(p),r(p),e(\xce\xbb),r(\xce\xbb),e(\xce\xb8),r(\xce\xb8),it\n"
                     "100,0.141,5.00e-01,*,1.00e+00,*,1.50e+00,*,2.00e+00,*,3\n");
  CHECK_THROWS_AS(write_convergence_csv(ConvergenceReport{}, out), ConfigurationError);
}

TEST_CASE("halving error and mesh size gives rate 1.00") {
  ConvergenceReport r;
  r.rows = {row(100, 0.2, 0.4), row(400, 0.1, 0.2)};
  std::ostringstream out;
  write_convergence_csv(r, out);
  std::istringstream in(out.str());
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(second == "400,0.100,2.00e-01,1.00,4.00e-01,1.00,6.00e-01,1.00,8.00e-01,1.00,3");
}

TEST_CASE("emitted CSV parses back to printed precision") {
  ConvergenceReport r;
  r.rows = {row(971, std::sqrt(2.0) / 10, 0.4937), row(3741, std::sqrt(2.0) / 20, 0.2412),
            row(14681, std::sqrt(2.0) / 40, 0.11871)};
  r.rows[2].h = 0.0043;  // printed in exponent form below 0.01
  const fs::path p = scratch("table.csv");
  write_convergence_csv(r, p);
  const auto rows = parse_convergence_csv(p);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].dof == r.rows[i].dof);
    CHECK(rows[i].h == doctest::Approx(r.rows[i].h).epsilon(5e-3));
    CHECK(rows[i].errors[0] == doctest::Approx(r.rows[i].errors.e_u).epsilon(5e-3));
    CHECK(rows[i].errors[3] == doctest::Approx(r.rows[i].errors.e_theta).epsilon(5e-3));
    CHECK(rows[i].iterations == 3);
  }
  CHECK_FALSE(rows[0].rates[0]);
  CHECK(*rows[1].rates[0] == doctest::Approx(*r.rate(1, ErrorField::U)).epsilon(5e-3));
  std::istringstream bad("nonsense\n");
  CHECK_THROWS_AS(parse_convergence_csv(bad), IoError);
  CHECK_THROWS_AS(write_convergence_csv(r, fs::path("/proc/memflow/forbidden.csv")), IoError);
}

TEST_CASE("two-cell zero state renders a well-formed VTK file") {
  std::vector<Point2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::map<Mesh::EdgeKey, BoundaryTag> tags{{{0, 1}, BoundaryTag::Membrane},
                                            {{1, 2}, BoundaryTag::Outlet},
                                            {{2, 3}, BoundaryTag::Wall},
                                            {{0, 3}, BoundaryTag::Inlet}};
  ProblemDefinition pb;
  pb.name = "two-cells";
  pb.mesh = std::make_shared<const Mesh>(v, std::vector<Mesh::Cell>{{0, 1, 2}, {0, 2, 3}}, tags);
  pb.law = MembraneLaw::prescribed([](const Point2&) { return 0.0; });
  pb.velocity_data = [](const Point2&) { return Vector2::Zero(); };
  pb.theta_inlet = [](const Point2&) { return 0.0; };
  const Discretization disc = discretize(pb);
  const SystemState s(disc.layout);
  const fs::path p = scratch("two.vtk");
  write_vtk(disc, s, p);
  const Vtk vtk(p);
  REQUIRE(vtk.tokens.size() > 10);
  CHECK(vtk.tokens[0] == "#");
  CHECK(vtk.find("UNSTRUCTURED_GRID") < vtk.tokens.size());
  const std::size_t pts = vtk.find("POINTS");
  CHECK(vtk.tokens[pts + 1] == "4");
  const std::size_t cells = vtk.find("CELLS");
  CHECK(vtk.tokens[cells + 1] == "6");   // 2 triangles + 4 boundary edges
  CHECK(vtk.tokens[cells + 2] == "20");  // 2*4 + 4*3 integers
  const std::size_t types = vtk.find("CELL_TYPES");
  CHECK(vtk.tokens[types + 1] == "6");
  CHECK(vtk.tokens[types + 2] == "5");
  CHECK(vtk.tokens[types + 6] == "3");
  CHECK(vtk.find("velocity") < vtk.tokens.size());
  CHECK(vtk.find("concentration") < vtk.tokens.size());
  const fs::path q = scratch("two_lambda.vtk");
  write_membrane_vtk(disc, s, q);
  const Vtk lam(q);
  CHECK(lam.find("POLYDATA") < lam.tokens.size());
  CHECK(lam.tokens[lam.find("LINES") + 1] == "1");
  CHECK_THROWS_AS(write_vtk(disc, s, "/proc/memflow/x.vtk"), IoError);
}

TEST_CASE("rendered manufactured concentration stays in [1/e, 1]") {
  const auto mc = manufactured_case();
  const Discretization disc = discretize(manufactured_problem(mc, manufactured_mesh(mc, 6), {}));
  SystemState s(disc.layout);
  s.theta() = interpolate(*disc.concentration, mc.exact.theta);
  const fs::path p = scratch("mms.vtk");
  write_vtk(disc, s, p);
  const Vtk vtk(p);
  std::size_t i = vtk.find("concentration") + 4;  // name, type, count, LOOKUP_TABLE default
  i = vtk.find("default", vtk.find("concentration")) + 1;
  int n = 0;
  for (; i < vtk.tokens.size() && n < disc.mesh->num_vertices(); ++i, ++n) {
    const double t = std::stod(vtk.tokens[i]);
    CHECK(t <= 1.0 + 1e-12);
    CHECK(t >= std::exp(-1.0) - 1e-12);
  }
  CHECK(n == disc.mesh->num_vertices());
}

#ifdef MEMFLOW_DATA_DIR
TEST_CASE("spacer render contains the circle's boundary cells") {
  RunConfig c = default_config(CaseKind::Spacer);
  c.mesh_file = std::string(MEMFLOW_DATA_DIR) + "/spacer_channel.msh";
  c.disc.k = 0;
  c.finalize();
  const Discretization disc = discretize(build_case_problem(c));
  const fs::path p = scratch("spacer.vtk");
  write_vtk(disc, SystemState(disc.layout), p);
  const Vtk vtk(p);
  const std::size_t pts = vtk.find("POINTS");
  const int nv = std::stoi(vtk.tokens[pts + 1]);
  std::vector<Point2> xs(nv);
  for (int i = 0; i < nv; ++i) xs[i] = Point2(std::stod(vtk.tokens[pts + 3 + 3 * i]), std::stod(vtk.tokens[pts + 4 + 3 * i]));
  const std::size_t cells = vtk.find("CELLS");
  const int ncells = std::stoi(vtk.tokens[cells + 1]);
  std::size_t i = cells + 3;
  int circle_edges = 0;
  const Point2 centre = c.channel.spacer->center;
  for (int k = 0; k < ncells; ++k) {
    const int n = std::stoi(vtk.tokens[i]);
    if (n == 2) {
      const Point2 a = xs[std::stoi(vtk.tokens[i + 1])], b = xs[std::stoi(vtk.tokens[i + 2])];
      const double r = 0.5 * c.channel.spacer->diameter;
      if (std::abs((a - centre).norm() - r) < 1e-6 && std::abs((b - centre).norm() - r) < 1e-6) ++circle_edges;
    }
    i += n + 1;
  }
  CHECK(circle_edges > 50);
}
#endif

TEST_CASE("saved states round trip and reject mismatches") {
  SavedState s;
  s.config_json = config_to_json(default_config(CaseKind::Manufactured));
  s.level = 4;
  s.block_sizes = {3, 2, 1, 1};
  s.x = Eigen::VectorXd::LinSpaced(7, 0.0, 1.0);
  const fs::path p = scratch("state.json");
  save_state(s, p);
  const SavedState r = load_state(p);
  CHECK(r.level == 4);
  CHECK(r.block_sizes == s.block_sizes);
  CHECK((r.x - s.x).norm() == 0.0);
  CHECK(parse_config_string(r.config_json).kind == CaseKind::Manufactured);
  std::ofstream(scratch("bad_state.json")) << R"({"format": "memflow-state", "version": 1, "config": {}, "level": 1, "blocks": [1,1,1,1], "x": [1,2]})";
  CHECK_THROWS_AS(load_state(scratch("bad_state.json")), IoError);
  CHECK_THROWS_AS(load_state(scratch("missing_state.json")), IoError);
}

TEST_CASE("profile CSV has one line per sample") {
  MembraneProfile p;
  for (int i = 0; i < 3; ++i) {
    p.run.push_back(0);
    p.arclength.push_back(i);
    p.position.emplace_back(i, 0.0);
    p.normal_velocity.push_back(1e-5);
    p.permeate.push_back(1e-5);
    p.theta.push_back(600 + i);
    p.pressure.push_back(-i);
  }
  const fs::path f = scratch("profile.csv");
  write_profile_csv(p, f);
  std::ifstream in(f);
  std::string line;
  int n = 0;
  std::getline(in, line);
  CHECK(line == "run,s,x,y,u_n,g,theta,p");
  while (std::getline(in, line)) ++n;
  CHECK(n == 3);
}
