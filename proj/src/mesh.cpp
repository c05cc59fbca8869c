#include "subdiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace subdiff {

namespace {
constexpr double kPi = std::numbers::pi;
}

double Inclusion::semi_x() const {
  return shape == Shape::disk ? eps : eps * std::sqrt(aspect);
}

double Inclusion::semi_y() const {
  return shape == Shape::disk ? eps : eps / std::sqrt(aspect);
}

bool Inclusion::contains(const Point2& x) const {
  const double u = (x.x() - center.x()) / semi_x();
  const double v = (x.y() - center.y()) / semi_y();
  return u * u + v * v < 1.0;
}

Point2 Inclusion::boundary_point(double theta) const {
  return center + Point2(semi_x() * std::cos(theta), semi_y() * std::sin(theta));
}

double Inclusion::distance_bound(const Point2& x) const {
  const double u = (x.x() - center.x()) / semi_x();
  const double v = (x.y() - center.y()) / semi_y();
  const double rho = std::sqrt(u * u + v * v);
  return std::max(0.0, (rho - 1.0) * std::min(semi_x(), semi_y()));
}

double Inclusion::area() const { return kPi * semi_x() * semi_y(); }

double Inclusion::perimeter() const {
  const double a = semi_x();
  const double b = semi_y();
  const double h = (a - b) * (a - b) / ((a + b) * (a + b));
  return kPi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

InclusionSet::InclusionSet(std::vector<Inclusion> items, double gamma0, double min_gap)
    : items_(std::move(items)), gamma0_(gamma0) {
  if (!(gamma0 > 0.0)) throw std::invalid_argument("inclusions: gamma0 must be positive");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const Inclusion& a = items_[i];
    if (!(a.eps > 0.0) || !(a.gamma > 0.0) || !(a.aspect > 0.0)) {
      throw std::invalid_argument("inclusion " + std::to_string(i) +
                                  ": size, aspect and conductivity must be positive");
    }
    if (a.gamma == gamma0) {
      throw std::invalid_argument("inclusion " + std::to_string(i) +
                                  ": conductivity equals the background");
    }
    const double reach = std::max(a.semi_x(), a.semi_y());
    if (a.center.norm() + reach > 1.0 - min_gap) {
      throw std::invalid_argument("inclusion " + std::to_string(i) +
                                  " is too close to the boundary");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const Inclusion& b = items_[j];
      const double gap = (a.center - b.center).norm() - reach -
                         std::max(b.semi_x(), b.semi_y());
      if (gap <= min_gap) {
        throw std::invalid_argument("inclusions " + std::to_string(j) + " and " +
                                    std::to_string(i) + " are not separated");
      }
    }
  }
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point2 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Point2 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::tagged_area(int tag) const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    if (tags[t] == tag) a += triangle_area(t);
  }
  return a;
}

double Mesh::diameter(std::size_t t) const {
  const auto& tri = triangles[t];
  double d = 0.0;
  for (int i = 0; i < 3; ++i) {
    d = std::max(d, (vertices[tri[i]] - vertices[tri[(i + 1) % 3]]).norm());
  }
  return d;
}

namespace {

class SizeField {
public:
  SizeField(const InclusionSet& inc, double h_far, double h_near)
      : inc_(inc), h_far_(h_far), h_near_(h_near) {}

  double operator()(const Point2& x) const {
    double h = h_far_;
    for (const auto& a : inc_.items()) {
      const double d = std::max(0.0, a.distance_bound(x) - 2.0 * a.eps);
      h = std::min(h, h_near_ + kGrading * d);
    }
    return h;
  }

private:
  static constexpr double kGrading = 0.3;
  const InclusionSet& inc_;
  double h_far_;
  double h_near_;
};

struct CellKey {
  std::int64_t i, j;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<std::int64_t>()(k.i * 73856093LL ^ k.j * 19349663LL);
  }
};

class PointHash {
public:
  explicit PointHash(double cell) : cell_(cell) {}

  void add(const Point2& p, int id) { cells_[key(p)].push_back(id); }

  template <class F>
  void for_near(const Point2& p, double radius, F&& f) const {
    const auto k = key(p);
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
    for (std::int64_t di = -reach; di <= reach; ++di) {
      for (std::int64_t dj = -reach; dj <= reach; ++dj) {
        auto it = cells_.find({k.i + di, k.j + dj});
        if (it == cells_.end()) continue;
        for (int id : it->second) f(id);
      }
    }
  }

private:
  CellKey key(const Point2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_))};
  }
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

bool point_in_polygon(const Point2& p, const std::vector<Point2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

double unit_jitter(std::uint64_t i) {
  i ^= i >> 33;
  i *= 0xff51afd7ed558ccdULL;
  i ^= i >> 33;
  i *= 0xc4ceb9fe1a85ec53ULL;
  i ^= i >> 33;
  return static_cast<double>(i >> 11) * 0x1.0p-53 - 0.5;
}

}  // namespace

Mesh build_mesh(const DiskDomain& domain, const InclusionSet& inclusions, double h_far,
                double h_near) {
  if (!(h_near > 0.0 && h_near <= h_far)) {
    throw std::invalid_argument("build_mesh: need 0 < h_near <= h_far");
  }
  for (const auto& a : inclusions.items()) {
    if (h_near > std::min(a.semi_x(), a.semi_y()) / 4.0 * (1.0 + 1e-12)) {
      throw std::invalid_argument("build_mesh: h_near does not resolve the inclusion size");
    }
    const double reach = std::max(a.semi_x(), a.semi_y());
    if ((a.center - domain.center).norm() + reach + h_near >= domain.radius) {
      throw std::invalid_argument("build_mesh: inclusion leaves the domain");
    }
  }

  const SizeField size(inclusions, h_far, h_near);
  const Point2 c0 = domain.center;
  const double R = domain.radius;

  std::vector<Point2> pts;
  std::vector<std::pair<int, int>> segments;
  std::vector<std::vector<int>> loops;

  // Domain boundary: steps follow the size field, then rescaled to close.
  {
    std::vector<double> steps;
    double theta = 0.0;
    while (theta < 2.0 * kPi) {
      const Point2 x = c0 + R * Point2(std::cos(theta), std::sin(theta));
      const double step = size(x) / R;
      steps.push_back(step);
      theta += step;
    }
    const std::size_t n = std::max<std::size_t>(steps.size(), 24);
    steps.resize(n, steps.empty() ? 2.0 * kPi / n : steps.back());
    double total = 0.0;
    for (double s : steps) total += s;
    std::vector<int> loop;
    theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loop.push_back(static_cast<int>(pts.size()));
      pts.push_back(c0 + R * Point2(std::cos(theta), std::sin(theta)));
      theta += steps[i] * 2.0 * kPi / total;
    }
    loops.push_back(loop);
  }
  for (const auto& a : inclusions.items()) {
    const double longest = std::max(a.semi_x(), a.semi_y());
    const int n = std::max(24, static_cast<int>(std::ceil(2.0 * kPi * longest / h_near)));
    std::vector<int> loop;
    for (int i = 0; i < n; ++i) {
      loop.push_back(static_cast<int>(pts.size()));
      pts.push_back(a.boundary_point(2.0 * kPi * i / n));
    }
    loops.push_back(loop);
  }
  for (const auto& loop : loops) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      segments.emplace_back(loop[i], loop[(i + 1) % loop.size()]);
    }
  }
  const int n_constrained = static_cast<int>(pts.size());

  PointHash accepted(h_far);
  PointHash seg_hash(h_far);
  double longest_segment = 0.0;
  for (int i = 0; i < n_constrained; ++i) accepted.add(pts[i], i);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Point2 m = 0.5 * (pts[segments[s].first] + pts[segments[s].second]);
    seg_hash.add(m, static_cast<int>(s));
    longest_segment =
        std::max(longest_segment, (pts[segments[s].first] - pts[segments[s].second]).norm());
  }

  // Candidate points: hexagonal lattices on dyadic levels, each kept where
  // the size field falls in its band.
  struct Candidate {
    Point2 x;
    double h;
  };
  std::vector<Candidate> cand;
  std::vector<double> levels;
  for (double h = h_near; h < h_far * (1.0 - 1e-12); h *= 2.0) levels.push_back(h);
  levels.push_back(h_far);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double hk = levels[k];
    const double upper = k + 1 < levels.size() ? levels[k + 1] : 2.0 * h_far;
    const double dy = hk * std::sqrt(3.0) / 2.0;
    const int ny = static_cast<int>(std::ceil(R / dy));
    const int nx = static_cast<int>(std::ceil(R / hk)) + 1;
    for (int j = -ny; j <= ny; ++j) {
      const double shift = (j & 1) ? 0.5 * hk : 0.0;
      for (int i = -nx; i <= nx; ++i) {
        const Point2 x = c0 + Point2(i * hk + shift, j * dy);
        const double h = size(x);
        if (h < hk * (1.0 - 1e-12) || h >= upper) continue;
        if ((x - c0).norm() > R - 0.6 * h) continue;
        cand.push_back({x, h});
      }
    }
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Candidate& a, const Candidate& b) { return a.h < b.h; });

  for (const Candidate& c : cand) {
    bool ok = true;
    for (const auto& a : inclusions.items()) {
      const double u = (c.x.x() - a.center.x()) / a.semi_x();
      const double v = (c.x.y() - a.center.y()) / a.semi_y();
      const double gap = std::abs(std::sqrt(u * u + v * v) - 1.0) * std::min(a.semi_x(), a.semi_y());
      if (gap < 0.45 * c.h) ok = false;
    }
    if (!ok) continue;
    const double r_min = 0.8 * c.h;
    accepted.for_near(c.x, r_min, [&](int id) {
      if (ok && (pts[id] - c.x).norm() < r_min) ok = false;
    });
    if (!ok) continue;
    seg_hash.for_near(c.x, longest_segment, [&](int s) {
      if (!ok) return;
      const Point2& a = pts[segments[s].first];
      const Point2& b = pts[segments[s].second];
      if ((c.x - 0.5 * (a + b)).norm() < 0.55 * (a - b).norm()) ok = false;
    });
    if (!ok) continue;
    const int id = static_cast<int>(pts.size());
    pts.push_back(c.x);
    accepted.add(c.x, id);
  }

  for (std::size_t i = n_constrained; i < pts.size(); ++i) {
    pts[i] += 1e-8 * h_near * Point2(unit_jitter(2 * i), unit_jitter(2 * i + 1));
  }

  Mesh mesh;
  mesh.vertices = pts;
  mesh.triangles = delaunay(pts);

  std::unordered_set<std::uint64_t> edges;
  auto edge_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) edges.insert(edge_key(t[i], t[(i + 1) % 3]));
  }
  for (const auto& s : segments) {
    if (!edges.count(edge_key(s.first, s.second))) {
      throw MeshError("build_mesh: unresolvable geometry (missing boundary edge)");
    }
  }

  std::vector<std::vector<Point2>> polys;
  for (std::size_t l = 1; l < loops.size(); ++l) {
    std::vector<Point2> poly;
    for (int id : loops[l]) poly.push_back(pts[id]);
    polys.push_back(std::move(poly));
  }
  mesh.tags.assign(mesh.triangles.size(), -1);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point2 g = (pts[tri[0]] + pts[tri[1]] + pts[tri[2]]) / 3.0;
    for (std::size_t l = 0; l < polys.size(); ++l) {
      if (point_in_polygon(g, polys[l])) mesh.tags[t] = static_cast<int>(l);
    }
  }

  mesh.boundary_nodes = loops.front();
  const auto& bn = mesh.boundary_nodes;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    BoundaryEdge e;
    e.a = bn[i];
    e.b = bn[(i + 1) % bn.size()];
    const Point2 d = pts[e.b] - pts[e.a];
    e.length = d.norm();
    e.normal = Point2(d.y(), -d.x()) / e.length;
    mesh.boundary_edges.push_back(e);
  }
  return mesh;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out.precision(17);
  out << "vertices " << mesh.vertices.size() << '\n';
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.tags[t] << '\n';
  }
  out << "boundary " << mesh.boundary_nodes.size() << '\n';
  for (int b : mesh.boundary_nodes) out << b << '\n';
}

Mesh read_mesh(std::istream& in) {
  Mesh mesh;
  std::string word;
  std::size_t n = 0;
  auto expect = [&](const char* name) {
    if (!(in >> word >> n) || word != name) {
      throw MeshError(std::string("read_mesh: expected section '") + name + "'");
    }
  };
  expect("vertices");
  mesh.vertices.resize(n);
  for (auto& v : mesh.vertices) in >> v.x() >> v.y();
  expect("triangles");
  mesh.triangles.resize(n);
  mesh.tags.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto& tri = mesh.triangles[t];
    in >> tri[0] >> tri[1] >> tri[2] >> mesh.tags[t];
  }
  expect("boundary");
  mesh.boundary_nodes.resize(n);
  for (auto& b : mesh.boundary_nodes) in >> b;
  if (!in) throw MeshError("read_mesh: truncated input");
  const auto& bn = mesh.boundary_nodes;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    BoundaryEdge e;
    e.a = bn[i];
    e.b = bn[(i + 1) % bn.size()];
    const Point2 d = mesh.vertices[e.b] - mesh.vertices[e.a];
    e.length = d.norm();
    e.normal = Point2(d.y(), -d.x()) / e.length;
    mesh.boundary_edges.push_back(e);
  }
  return mesh;
}

}  // namespace subdiff
