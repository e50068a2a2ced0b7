#include "memflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace memflow {

namespace {

Mesh::EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

constexpr std::array<std::array<int, 2>, 3> kLocalEdges = {{{1, 2}, {0, 2}, {0, 1}}};

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Inlet: return "inlet";
    case BoundaryTag::Outlet: return "outlet";
    case BoundaryTag::Wall: return "wall";
    case BoundaryTag::Membrane: return "membrane";
  }
  return "unknown";
}

BoundaryTag parse_tag(std::string_view name) {
  for (auto t : kAllTags)
    if (to_string(t) == name) return t;
  throw MeshError("unknown boundary tag '" + std::string(name) +
                  "' (expected inlet|outlet|wall|membrane)");
}

Mesh::Mesh(std::vector<Point2> vertices, std::vector<Cell> cells,
           const std::map<EdgeKey, BoundaryTag>& boundary_tags)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  const int nv = num_vertices();
  if (cells_.empty()) throw MeshError("mesh has no cells");

  std::map<EdgeKey, int> edge_index;
  cell_facets_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& cv = cells_[c];
    for (int v : cv)
      if (v < 0 || v >= nv)
        throw MeshError("cell " + std::to_string(c) + " references vertex " + std::to_string(v) +
                        " out of range");
    const double area2 = cross(vertices_[cv[1]] - vertices_[cv[0]], vertices_[cv[2]] - vertices_[cv[0]]);
    if (!(area2 > 0.0))
      throw MeshError("cell " + std::to_string(c) + " has non-positive signed area (inverted or degenerate)");

    for (int le = 0; le < 3; ++le) {
      const auto key = edge_key(cv[kLocalEdges[le][0]], cv[kLocalEdges[le][1]]);
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(facets_.size()));
      if (inserted) {
        Facet f;
        f.vertices = {key.first, key.second};
        f.cells = {c, -1};
        f.local_index = {le, -1};
        facets_.push_back(f);
      } else {
        Facet& f = facets_[it->second];
        if (f.cells[1] >= 0)
          throw MeshError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                          ") is shared by more than two cells");
        f.cells[1] = c;
        f.local_index[1] = le;
      }
      cell_facets_[c][le] = it->second;
    }
  }

  facet_tag_.assign(facets_.size(), -1);
  for (int f = 0; f < num_facets(); ++f) {
    const Facet& fa = facets_[f];
    const auto key = EdgeKey{fa.vertices[0], fa.vertices[1]};
    auto it = boundary_tags.find(key);
    if (fa.is_boundary()) {
      if (it == boundary_tags.end())
        throw MeshError("boundary facet " + std::to_string(f) + " (vertices " +
                        std::to_string(key.first) + "," + std::to_string(key.second) +
                        ") carries no boundary tag");
      facet_tag_[f] = static_cast<std::int8_t>(it->second);
    } else if (it != boundary_tags.end()) {
      throw MeshError("interior facet (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") carries a boundary tag");
    }
  }
  for (const auto& [key, tag] : boundary_tags) {
    if (!edge_index.contains(key))
      throw MeshError("boundary tag given for edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") that is not a mesh edge");
  }

  for (int c = 0; c < num_cells(); ++c) h_max_ = std::max(h_max_, cell_diameter(c));
}

std::optional<BoundaryTag> Mesh::tag(int f) const {
  if (facet_tag_.at(f) < 0) return std::nullopt;
  return static_cast<BoundaryTag>(facet_tag_[f]);
}

bool Mesh::has_tag(int f, BoundaryTag t) const {
  return facet_tag_.at(f) == static_cast<std::int8_t>(t);
}

std::vector<int> Mesh::facets_with_tag(BoundaryTag t) const {
  std::vector<int> out;
  for (int f = 0; f < num_facets(); ++f)
    if (has_tag(f, t)) out.push_back(f);
  return out;
}

std::vector<int> Mesh::interior_facets() const {
  std::vector<int> out;
  for (int f = 0; f < num_facets(); ++f)
    if (!facets_[f].is_boundary()) out.push_back(f);
  return out;
}

std::vector<int> Mesh::boundary_facets() const {
  std::vector<int> out;
  for (int f = 0; f < num_facets(); ++f)
    if (facets_[f].is_boundary()) out.push_back(f);
  return out;
}

double Mesh::cell_area(int c) const {
  const auto& cv = cells_.at(c);
  return 0.5 * cross(vertices_[cv[1]] - vertices_[cv[0]], vertices_[cv[2]] - vertices_[cv[0]]);
}

double Mesh::cell_diameter(int c) const {
  const auto& cv = cells_.at(c);
  double d = 0.0;
  for (const auto& e : kLocalEdges)
    d = std::max(d, (vertices_[cv[e[0]]] - vertices_[cv[e[1]]]).norm());
  return d;
}

Point2 Mesh::cell_centroid(int c) const {
  const auto& cv = cells_.at(c);
  return (vertices_[cv[0]] + vertices_[cv[1]] + vertices_[cv[2]]) / 3.0;
}

FacetGeometry facet_geometry(const Mesh& mesh, int facet) {
  if (facet < 0 || facet >= mesh.num_facets())
    throw std::out_of_range("facet index " + std::to_string(facet) + " out of range [0, " +
                            std::to_string(mesh.num_facets()) + ")");
  const Facet& f = mesh.facet(facet);
  const Point2& a = mesh.vertex(f.vertices[0]);
  const Point2& b = mesh.vertex(f.vertices[1]);
  const Point2 t = b - a;
  FacetGeometry g;
  g.length = t.norm();
  g.midpoint = 0.5 * (a + b);
  g.normal = Point2(t.y(), -t.x()) / g.length;
  // Flip towards the outside of the first cell.
  const auto& cv = mesh.cell(f.cells[0]);
  const Point2& opposite = mesh.vertex(cv[f.local_index[0]]);
  if (g.normal.dot(opposite - g.midpoint) > 0.0) g.normal = -g.normal;
  return g;
}

// ---------------------------------------------------------------------------
// Structured generation

BoundarySpec& BoundarySpec::set(Side side, BoundaryTag tag) {
  sides_.erase(side);
  whole_[side] = tag;
  return *this;
}

BoundarySpec& BoundarySpec::set(Side side, std::vector<SideInterval> intervals) {
  whole_.erase(side);
  std::sort(intervals.begin(), intervals.end(),
            [](const SideInterval& a, const SideInterval& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (!(intervals[i].end > intervals[i].begin))
      throw std::invalid_argument("boundary interval with non-positive length");
    if (i > 0 && intervals[i].begin < intervals[i - 1].end)
      throw std::invalid_argument("overlapping boundary intervals on one side");
  }
  sides_[side] = std::move(intervals);
  return *this;
}

bool BoundarySpec::covers(Side side) const { return whole_.contains(side) || sides_.contains(side); }

BoundaryTag BoundarySpec::tag_at(Side side, double s) const {
  if (auto it = whole_.find(side); it != whole_.end()) return it->second;
  auto it = sides_.find(side);
  if (it == sides_.end()) throw std::invalid_argument("boundary side without a tag");
  for (const auto& iv : it->second)
    if (s >= iv.begin && s <= iv.end) return iv.tag;
  throw std::invalid_argument("boundary point not covered by any tagged interval");
}

void BoundarySpec::validate(double lx, double ly) const {
  for (Side s : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
    if (!covers(s)) throw std::invalid_argument("boundary spec leaves a side untagged");
    auto it = sides_.find(s);
    if (it == sides_.end()) continue;
    const double len = (s == Side::Bottom || s == Side::Top) ? lx : ly;
    const double tol = 1e-12 * len;
    const auto& iv = it->second;
    if (iv.empty() || std::abs(iv.front().begin) > tol || std::abs(iv.back().end - len) > tol)
      throw std::invalid_argument("boundary intervals do not cover the whole side");
    for (std::size_t i = 1; i < iv.size(); ++i)
      if (std::abs(iv[i].begin - iv[i - 1].end) > tol)
        throw std::invalid_argument("gap between boundary intervals");
  }
}

BoundarySpec channel_boundary() {
  BoundarySpec spec;
  spec.set(Side::Left, BoundaryTag::Inlet)
      .set(Side::Right, BoundaryTag::Outlet)
      .set(Side::Bottom, BoundaryTag::Membrane)
      .set(Side::Top, BoundaryTag::Wall);
  return spec;
}

Mesh generate_tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                          const BoundarySpec& spec, Diagonal diagonal) {
  if (xs.size() < 2 || ys.size() < 2)
    throw std::invalid_argument("structured mesh needs at least one cell in each direction");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("x grid lines must increase strictly");
  for (std::size_t j = 1; j < ys.size(); ++j)
    if (!(ys[j] > ys[j - 1])) throw std::invalid_argument("y grid lines must increase strictly");

  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  const double x0 = xs.front(), y0 = ys.front();
  const double lx = xs.back() - x0, ly = ys.back() - y0;
  spec.validate(lx, ly);

  std::vector<Point2> verts;
  verts.reserve((nx + 1) * (ny + 1) + (diagonal == Diagonal::Crossed ? nx * ny : 0));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) verts.emplace_back(xs[i], ys[j]);
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<Mesh::Cell> cells;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      switch (diagonal) {
        case Diagonal::Right:
          cells.push_back({a, b, c});
          cells.push_back({a, c, d});
          break;
        case Diagonal::Left:
          cells.push_back({a, b, d});
          cells.push_back({b, c, d});
          break;
        case Diagonal::Crossed: {
          const int m = static_cast<int>(verts.size());
          verts.emplace_back(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
          cells.push_back({a, b, m});
          cells.push_back({b, c, m});
          cells.push_back({c, d, m});
          cells.push_back({d, a, m});
          break;
        }
      }
    }
  }

  std::map<Mesh::EdgeKey, BoundaryTag> tags;
  for (int i = 0; i < nx; ++i) {
    const double s = 0.5 * (xs[i] + xs[i + 1]) - x0;
    tags[edge_key(vid(i, 0), vid(i + 1, 0))] = spec.tag_at(Side::Bottom, s);
    tags[edge_key(vid(i, ny), vid(i + 1, ny))] = spec.tag_at(Side::Top, s);
  }
  for (int j = 0; j < ny; ++j) {
    const double s = 0.5 * (ys[j] + ys[j + 1]) - y0;
    tags[edge_key(vid(0, j), vid(0, j + 1))] = spec.tag_at(Side::Left, s);
    tags[edge_key(vid(nx, j), vid(nx, j + 1))] = spec.tag_at(Side::Right, s);
  }
  return Mesh(std::move(verts), std::move(cells), tags);
}

Mesh generate_structured_rectangle(int nx, int ny, double lx, double ly, const BoundarySpec& spec,
                                   Diagonal diagonal) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("cell counts must be at least 1");
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = lx * i / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = ly * j / ny;
  xs.back() = lx;
  ys.back() = ly;
  return generate_tensor_mesh(xs, ys, spec, diagonal);
}

std::vector<double> graded_lines(int n, double length, double ratio, bool refine_low,
                                 bool refine_high) {
  if (n < 1) throw std::invalid_argument("cell count must be at least 1");
  if (!(ratio >= 1.0)) throw std::invalid_argument("grading ratio must be >= 1");
  // Cell widths follow a smooth bump w = 1 + (ratio-1) * shape, with the
  // sampled shape rescaled to [0, 1] so the end and middle cells differ by
  // exactly `ratio`.
  std::vector<double> shape(n, 1.0);
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / n;
    if (refine_low && refine_high) shape[i] = std::sin(M_PI * s);
    else if (refine_low) shape[i] = std::sin(0.5 * M_PI * s);
    else if (refine_high) shape[i] = std::cos(0.5 * M_PI * s);
  }
  const auto [lo, hi] = std::minmax_element(shape.begin(), shape.end());
  const double smin = *lo, span = *hi - *lo;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 + (ratio - 1.0) * (span > 0.0 ? (shape[i] - smin) / span : 0.0);
  double total = 0.0;
  for (double wi : w) total += wi;
  std::vector<double> lines(n + 1, 0.0);
  for (int i = 0; i < n; ++i) lines[i + 1] = lines[i] + length * w[i] / total;
  lines.back() = length;
  return lines;
}

// ---------------------------------------------------------------------------
// File formats

MeshFormat parse_mesh_format(std::string_view name) {
  if (name == "gmsh2" || name == "msh") return MeshFormat::Gmsh2;
  if (name == "json") return MeshFormat::Json;
  throw MeshError("unknown mesh format '" + std::string(name) + "' (expected gmsh2|json)");
}

Mesh read_gmsh2(std::istream& in) {
  std::map<int, BoundaryTag> physical_names;
  std::map<long, int> node_index;
  std::vector<Point2> verts;
  std::vector<Mesh::Cell> cells;
  std::map<Mesh::EdgeKey, BoundaryTag> tags;
  std::string line;

  auto expect_end = [&](const std::string& section) {
    if (!std::getline(in, line) || line.rfind("$End" + section, 0) != 0)
      throw MeshError("gmsh: missing $End" + section);
  };

  bool saw_format = false;
  std::vector<std::pair<std::array<long, 2>, int>> pending_lines;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '$') continue;
    if (line.rfind("$MeshFormat", 0) == 0) {
      std::getline(in, line);
      std::istringstream ss(line);
      double version = 0;
      int file_type = -1;
      ss >> version >> file_type;
      if (version < 2.0 || version >= 3.0 || file_type != 0)
        throw MeshError("gmsh: only ASCII format version 2.x is supported");
      saw_format = true;
      expect_end("MeshFormat");
    } else if (line.rfind("$PhysicalNames", 0) == 0) {
      int n = 0;
      in >> n;
      for (int i = 0; i < n; ++i) {
        int dim = 0, id = 0;
        std::string name;
        in >> dim >> id >> std::quoted(name);
        if (!in) throw MeshError("gmsh: malformed $PhysicalNames entry");
        if (dim == 1) physical_names[id] = parse_tag(name);
      }
      std::getline(in, line);
      expect_end("PhysicalNames");
    } else if (line.rfind("$Nodes", 0) == 0) {
      int n = 0;
      in >> n;
      for (int i = 0; i < n; ++i) {
        long id = 0;
        double x = 0, y = 0, z = 0;
        in >> id >> x >> y >> z;
        if (!in) throw MeshError("gmsh: malformed node record " + std::to_string(i));
        node_index[id] = static_cast<int>(verts.size());
        verts.emplace_back(x, y);
      }
      std::getline(in, line);
      expect_end("Nodes");
    } else if (line.rfind("$Elements", 0) == 0) {
      int n = 0;
      in >> n;
      std::getline(in, line);
      for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw MeshError("gmsh: truncated $Elements");
        std::istringstream ss(line);
        long id = 0;
        int type = 0, ntags = 0;
        ss >> id >> type >> ntags;
        std::vector<int> etags(ntags);
        for (auto& t : etags) ss >> t;
        if (!ss) throw MeshError("gmsh: malformed element " + std::to_string(id));
        if (type == 1) {
          std::array<long, 2> nodes{};
          ss >> nodes[0] >> nodes[1];
          if (!ss || ntags < 1) throw MeshError("gmsh: line element " + std::to_string(id) + " lacks a physical tag");
          pending_lines.push_back({nodes, etags[0]});
        } else if (type == 2) {
          std::array<long, 3> nodes{};
          ss >> nodes[0] >> nodes[1] >> nodes[2];
          if (!ss) throw MeshError("gmsh: malformed triangle " + std::to_string(id));
          Mesh::Cell c{};
          for (int k = 0; k < 3; ++k) {
            auto it = node_index.find(nodes[k]);
            if (it == node_index.end()) throw MeshError("gmsh: triangle references unknown node");
            c[k] = it->second;
          }
          cells.push_back(c);
        } else if (type != 15) {
          throw MeshError("gmsh: unsupported element type " + std::to_string(type));
        }
      }
      expect_end("Elements");
    }
  }
  if (!saw_format) throw MeshError("gmsh: missing $MeshFormat section");
  for (const auto& [nodes, phys] : pending_lines) {
    auto pn = physical_names.find(phys);
    if (pn == physical_names.end())
      throw MeshError("gmsh: physical group " + std::to_string(phys) + " has no name");
    auto a = node_index.find(nodes[0]);
    auto b = node_index.find(nodes[1]);
    if (a == node_index.end() || b == node_index.end())
      throw MeshError("gmsh: line references unknown node");
    tags[edge_key(a->second, b->second)] = pn->second;
  }
  return Mesh(std::move(verts), std::move(cells), tags);
}

Mesh read_mesh_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MeshError(std::string("json mesh: parse failure: ") + e.what());
  }
  try {
    std::vector<Point2> verts;
    for (const auto& v : j.at("vertices")) verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    std::vector<Mesh::Cell> cells;
    for (const auto& c : j.at("cells")) cells.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
    std::map<Mesh::EdgeKey, BoundaryTag> tags;
    for (const auto& b : j.at("boundary"))
      tags[edge_key(b.at("vertices").at(0).get<int>(), b.at("vertices").at(1).get<int>())] =
          parse_tag(b.at("tag").get<std::string>());
    return Mesh(std::move(verts), std::move(cells), tags);
  } catch (const nlohmann::json::exception& e) {
    throw MeshError(std::string("json mesh: ") + e.what());
  }
}

void write_mesh_json(const Mesh& mesh, std::ostream& out) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices()) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = nlohmann::json::array();
  for (const auto& c : mesh.cells()) j["cells"].push_back({c[0], c[1], c[2]});
  j["boundary"] = nlohmann::json::array();
  for (int f : mesh.boundary_facets())
    j["boundary"].push_back({{"vertices", {mesh.facet(f).vertices[0], mesh.facet(f).vertices[1]}},
                             {"tag", std::string(to_string(*mesh.tag(f)))}});
  out << std::setprecision(17) << j.dump(1) << '\n';
}

void write_gmsh2(const Mesh& mesh, std::ostream& out) {
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n5\n";
  for (auto t : kAllTags) out << "1 " << static_cast<int>(t) + 1 << " \"" << to_string(t) << "\"\n";
  out << "2 5 \"fluid\"\n$EndPhysicalNames\n$Nodes\n" << mesh.num_vertices() << '\n';
  out << std::setprecision(17);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << v + 1 << ' ' << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << " 0\n";
  const auto bf = mesh.boundary_facets();
  out << "$EndNodes\n$Elements\n" << bf.size() + mesh.cells().size() << '\n';
  long id = 1;
  for (int f : bf) {
    const int phys = static_cast<int>(*mesh.tag(f)) + 1;
    out << id++ << " 1 2 " << phys << ' ' << phys << ' ' << mesh.facet(f).vertices[0] + 1 << ' '
        << mesh.facet(f).vertices[1] + 1 << '\n';
  }
  for (const auto& c : mesh.cells())
    out << id++ << " 2 2 5 1 " << c[0] + 1 << ' ' << c[1] + 1 << ' ' << c[2] + 1 << '\n';
  out << "$EndElements\n";
}

Mesh import_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path.string() + "'");
  switch (format) {
    case MeshFormat::Gmsh2: return read_gmsh2(in);
    case MeshFormat::Json: return read_mesh_json(in);
  }
  throw MeshError("unsupported mesh format");
}

// ---------------------------------------------------------------------------
// Membrane facet mesh

std::vector<MembraneRun> membrane_runs(const Mesh& mesh, bool require_nonempty) {
  const auto facets = mesh.facets_with_tag(BoundaryTag::Membrane);
  if (facets.empty()) {
    if (require_nonempty) throw MeshError("configuration error: no membrane facets in mesh");
    return {};
  }
  std::map<int, std::vector<int>> incident;  // vertex -> membrane facets
  for (int f : facets)
    for (int v : mesh.facet(f).vertices) incident[v].push_back(f);

  std::set<int> unused(facets.begin(), facets.end());
  auto point_less = [&](int a, int b) {
    const Point2& pa = mesh.vertex(a);
    const Point2& pb = mesh.vertex(b);
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    return pa.x() < pb.x();
  };

  std::vector<MembraneRun> runs;
  while (!unused.empty()) {
    // Pick a start: an endpoint (degree-1 vertex) of the component if one exists.
    std::vector<int> component_vertices;
    {
      std::vector<int> stack{*unused.begin()};
      std::set<int> seen{*unused.begin()};
      while (!stack.empty()) {
        int f = stack.back();
        stack.pop_back();
        for (int v : mesh.facet(f).vertices) {
          component_vertices.push_back(v);
          for (int g : incident[v])
            if (seen.insert(g).second) stack.push_back(g);
        }
      }
    }
    std::vector<int> ends;
    for (int v : component_vertices)
      if (incident[v].size() == 1) ends.push_back(v);
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
    int start = -1;
    if (!ends.empty()) {
      // Direction: increasing x for mostly-horizontal runs, increasing y otherwise.
      const Point2 d = mesh.vertex(ends.back()) - mesh.vertex(ends.front());
      const bool horizontal = std::abs(d.x()) >= std::abs(d.y());
      start = *std::min_element(ends.begin(), ends.end(), [&](int a, int b) {
        return horizontal ? mesh.vertex(a).x() < mesh.vertex(b).x() : mesh.vertex(a).y() < mesh.vertex(b).y();
      });
    } else {
      start = *std::min_element(component_vertices.begin(), component_vertices.end(), point_less);
    }

    MembraneRun run;
    run.vertices.push_back(start);
    int current = start;
    while (true) {
      int next_facet = -1;
      for (int g : incident[current])
        if (unused.contains(g)) { next_facet = g; break; }
      if (next_facet < 0) break;
      unused.erase(next_facet);
      run.facets.push_back(next_facet);
      const auto& fv = mesh.facet(next_facet).vertices;
      current = fv[0] == current ? fv[1] : fv[0];
      run.vertices.push_back(current);
    }
    runs.push_back(std::move(run));
  }
  std::sort(runs.begin(), runs.end(), [&](const MembraneRun& a, const MembraneRun& b) {
    return point_less(a.vertices.front(), b.vertices.front());
  });
  return runs;
}

std::vector<int> membrane_facet_mesh(const Mesh& mesh, bool require_nonempty) {
  std::vector<int> out;
  for (const auto& run : membrane_runs(mesh, require_nonempty))
    out.insert(out.end(), run.facets.begin(), run.facets.end());
  return out;
}

}  // namespace memflow
