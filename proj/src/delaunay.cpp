#include "subdiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace subdiff {

namespace {

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> n{-1, -1, -1};  // n[i] lies across the edge opposite v[i]
  bool alive = true;
};

long double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (static_cast<long double>(b.x()) - a.x()) * (static_cast<long double>(c.y()) - a.y()) -
         (static_cast<long double>(b.y()) - a.y()) * (static_cast<long double>(c.x()) - a.x());
}

// > 0 when d lies strictly inside the circumcircle of the ccw triangle abc.
long double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const long double adx = a.x() - static_cast<long double>(d.x());
  const long double ady = a.y() - static_cast<long double>(d.y());
  const long double bdx = b.x() - static_cast<long double>(d.x());
  const long double bdy = b.y() - static_cast<long double>(d.y());
  const long double cdx = c.x() - static_cast<long double>(d.x());
  const long double cdy = c.y() - static_cast<long double>(d.y());
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

std::uint64_t morton(std::uint32_t x, std::uint32_t y) {
  auto spread = [](std::uint64_t v) {
    v &= 0xffffffffULL;
    v = (v | (v << 16)) & 0x0000ffff0000ffffULL;
    v = (v | (v << 8)) & 0x00ff00ff00ff00ffULL;
    v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0fULL;
    v = (v | (v << 2)) & 0x3333333333333333ULL;
    v = (v | (v << 1)) & 0x5555555555555555ULL;
    return v;
  };
  return spread(x) | (spread(y) << 1);
}

class Triangulator {
public:
  explicit Triangulator(const std::vector<Point2>& input) : pts_(input) {
    Point2 lo = pts_.front();
    Point2 hi = pts_.front();
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Point2 mid = 0.5 * (lo + hi);
    const double span = std::max((hi - lo).maxCoeff(), 1e-12);
    n_real_ = static_cast<int>(pts_.size());
    pts_.push_back(mid + Point2(-40.0 * span, -30.0 * span));
    pts_.push_back(mid + Point2(40.0 * span, -30.0 * span));
    pts_.push_back(mid + Point2(0.0, 40.0 * span));
    tris_.push_back(Tri{{n_real_, n_real_ + 1, n_real_ + 2}});

    std::vector<int> order(n_real_);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> key(n_real_);
    for (int i = 0; i < n_real_; ++i) {
      const Point2 q = (pts_[i] - lo) / span;
      key[i] = morton(static_cast<std::uint32_t>(q.x() * 65535.0),
                      static_cast<std::uint32_t>(q.y() * 65535.0));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
    for (int i : order) insert(i);
  }

  std::vector<std::array<int, 3>> result() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_real_ || t.v[1] >= n_real_ || t.v[2] >= n_real_) continue;
      out.push_back(t.v);
    }
    return out;
  }

private:
  int locate(const Point2& p) {
    int t = last_;
    if (t < 0 || !tris_[t].alive) {
      t = static_cast<int>(tris_.size()) - 1;
      while (!tris_[t].alive) --t;
    }
    for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
      const Tri& tr = tris_[t];
      int next = -1;
      for (int i = 0; i < 3; ++i) {
        const Point2& a = pts_[tr.v[(i + 1) % 3]];
        const Point2& b = pts_[tr.v[(i + 2) % 3]];
        if (orient(a, b, p) < 0 && tr.n[i] >= 0) {
          next = tr.n[i];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      const Tri& tr = tris_[k];
      if (!tr.alive) continue;
      bool inside = true;
      for (int i = 0; i < 3 && inside; ++i) {
        inside = orient(pts_[tr.v[(i + 1) % 3]], pts_[tr.v[(i + 2) % 3]], p) >= 0;
      }
      if (inside) return static_cast<int>(k);
    }
    throw MeshError("delaunay: point location failed");
  }

  void insert(int pi) {
    const Point2& p = pts_[pi];
    const int start = locate(p);

    std::vector<int> cavity{start};
    mark_.resize(tris_.size(), 0);
    const int stamp = pi + 1;
    auto in_cavity = [&](int t) { return mark_[t] == stamp; };
    mark_[start] = stamp;
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const Tri& tr = tris_[cavity[k]];
      for (int i = 0; i < 3; ++i) {
        const int nb = tr.n[i];
        if (nb < 0 || in_cavity(nb)) continue;
        const Tri& o = tris_[nb];
        if (incircle(pts_[o.v[0]], pts_[o.v[1]], pts_[o.v[2]], p) > 0) {
          mark_[nb] = stamp;
          cavity.push_back(nb);
        }
      }
    }

    // Keep the cavity star-shaped with respect to p.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t k = 1; k < cavity.size(); ++k) {
        const Tri& tr = tris_[cavity[k]];
        for (int i = 0; i < 3; ++i) {
          const int nb = tr.n[i];
          if (nb >= 0 && in_cavity(nb)) continue;
          if (orient(pts_[tr.v[(i + 1) % 3]], pts_[tr.v[(i + 2) % 3]], p) <= 0) {
            mark_[cavity[k]] = 0;
            cavity.erase(cavity.begin() + static_cast<long>(k));
            changed = true;
            break;
          }
        }
        if (changed) break;
      }
    }

    struct Rim {
      int a, b, outside;
    };
    std::vector<Rim> rim;
    for (int c : cavity) {
      const Tri& tr = tris_[c];
      for (int i = 0; i < 3; ++i) {
        const int nb = tr.n[i];
        if (nb >= 0 && in_cavity(nb)) continue;
        rim.push_back({tr.v[(i + 1) % 3], tr.v[(i + 2) % 3], nb});
      }
    }
    for (int c : cavity) tris_[c].alive = false;

    std::vector<int> created;
    created.reserve(rim.size());
    for (const Rim& e : rim) {
      Tri t{{pi, e.a, e.b}};
      t.n[0] = e.outside;
      const int id = static_cast<int>(tris_.size());
      if (e.outside >= 0) {
        Tri& o = tris_[e.outside];
        for (int i = 0; i < 3; ++i) {
          if (o.v[(i + 1) % 3] == e.b && o.v[(i + 2) % 3] == e.a) o.n[i] = id;
        }
      }
      tris_.push_back(t);
      created.push_back(id);
    }
    // Fan adjacency: triangle (p, a, b) meets (p, b, *) across edge (b, p)
    // and (p, *, a) across edge (p, a).
    for (int id : created) {
      for (int other : created) {
        if (other == id) continue;
        if (tris_[other].v[1] == tris_[id].v[2]) {
          tris_[id].n[1] = other;
          tris_[other].n[2] = id;
        }
      }
    }
    last_ = created.empty() ? -1 : created.back();
  }

  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> mark_;
  int n_real_ = 0;
  int last_ = -1;
};

}  // namespace

std::vector<std::array<int, 3>> delaunay(const std::vector<Point2>& points) {
  if (points.size() < 3) throw MeshError("delaunay: need at least three points");
  Triangulator tr(points);
  return tr.result();
}

}  // namespace subdiff
