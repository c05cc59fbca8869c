#include "subdiff/config.hpp"

#include "subdiff/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace subdiff {

namespace {

using json = nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Vec<2> read_point(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string(what) + ": expected [x, y]");
  }
  return Vec<2>(j[0].get<double>(), j[1].get<double>());
}

json point(const Vec<2>& p) { return json::array({p.x(), p.y()}); }

void require_positive(double v, const char* key) {
  if (!(v > 0.0)) throw ConfigError(std::string("config key '") + key + "' must be positive");
}

Inclusion read_inclusion(const json& j) {
  Inclusion inc;
  if (!j.contains("center")) throw ConfigError("inclusion: missing 'center'");
  inc.center = read_point(j.at("center"), "inclusion center");
  read(j, "eps", inc.eps);
  read(j, "gamma", inc.gamma);
  std::string shape = "disk";
  read(j, "shape", shape);
  if (shape == "disk") {
    inc.shape = Shape::disk;
  } else if (shape == "ellipse") {
    inc.shape = Shape::ellipse;
    read(j, "aspect", inc.aspect);
  } else {
    throw ConfigError("inclusion: unknown shape '" + shape + "'");
  }
  require_positive(inc.eps, "eps");
  require_positive(inc.gamma, "gamma");
  require_positive(inc.aspect, "aspect");
  return inc;
}

json write_inclusion(const Inclusion& inc) {
  json j{{"center", point(inc.center)}, {"eps", inc.eps}, {"gamma", inc.gamma}};
  j["shape"] = inc.shape == Shape::disk ? "disk" : "ellipse";
  if (inc.shape == Shape::ellipse) j["aspect"] = inc.aspect;
  return j;
}

ProbeSegment read_segment(const json& j, int index) {
  ProbeSegment s;
  s.j = index;
  if (j.contains("direction")) s.direction = read_point(j.at("direction"), "segment direction");
  if (j.contains("origin")) s.origin = read_point(j.at("origin"), "segment origin");
  read(j, "s_lo", s.s_lo);
  read(j, "s_hi", s.s_hi);
  if (!(s.s_hi > s.s_lo)) throw ConfigError("segment: s_hi must exceed s_lo");
  if (!(s.direction.norm() > 0.0)) throw ConfigError("segment: zero direction");
  return s;
}

}  // namespace

double RunConfig::h_near() const {
  if (mesh.h_near > 0.0) return mesh.h_near;
  double smallest = mesh.h_far * 4.0;
  for (const auto& inc : inclusions) smallest = std::min({smallest, inc.semi_x(), inc.semi_y()});
  return std::min(mesh.h_far, 0.25 * smallest);
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  read(doc, "version", c.version);
  if (c.version != kConfigVersion) {
    throw ConfigError("config: unsupported version " + std::to_string(c.version));
  }
  read(doc, "name", c.name);
  std::string algorithm = "one";
  read(doc, "algorithm", algorithm);
  if (algorithm == "one") {
    c.algorithm = Algorithm::one;
  } else if (algorithm == "multi") {
    c.algorithm = Algorithm::multi;
  } else {
    throw ConfigError("config: algorithm must be 'one' or 'multi'");
  }
  read(doc, "alpha", c.alpha);
  read(doc, "T", c.final_time);
  read(doc, "gamma0", c.gamma0);
  read(doc, "time_steps", c.time_steps);
  read(doc, "N", c.N);
  require_positive(c.alpha, "alpha");
  if (c.alpha > 1.0) throw ConfigError("config key 'alpha' must lie in (0, 1]");
  require_positive(c.final_time, "T");
  require_positive(c.gamma0, "gamma0");
  if (c.time_steps < 1) throw ConfigError("config key 'time_steps' must be >= 1");
  if (c.N < 1 || c.N > 5) throw ConfigError("config key 'N' must lie in 1..5");

  if (doc.contains("inclusions")) {
    if (!doc["inclusions"].is_array()) throw ConfigError("config: 'inclusions' must be a list");
    for (const auto& j : doc["inclusions"]) c.inclusions.push_back(read_inclusion(j));
  }
  if (doc.contains("mesh")) {
    const auto& m = doc["mesh"];
    read(m, "h_far", c.mesh.h_far);
    read(m, "h_near", c.mesh.h_near);
    require_positive(c.mesh.h_far, "mesh.h_far");
    if (c.mesh.h_near < 0.0) throw ConfigError("config key 'mesh.h_near' must be >= 0");
  }
  if (doc.contains("noise")) {
    const auto& n = doc["noise"];
    read(n, "sigma", c.noise.sigma);
    read(n, "seed", c.noise.seed);
    read(n, "realizations", c.noise.realizations);
    if (c.noise.sigma < 0.0) throw ConfigError("config key 'noise.sigma' must be >= 0");
    if (c.noise.realizations < 1) throw ConfigError("config key 'noise.realizations' must be >= 1");
  }
  if (doc.contains("one")) {
    const auto& o = doc["one"];
    read(o, "tol", c.one.tol);
    require_positive(c.one.tol, "one.tol");
    if (o.contains("segments")) {
      const auto& segs = o["segments"];
      if (!segs.is_array() || segs.size() != 2) throw ConfigError("one.segments: two entries expected");
      c.one.segments = {read_segment(segs[0], 0), read_segment(segs[1], 1)};
    }
  }
  if (doc.contains("multi")) {
    const auto& m = doc["multi"];
    read(m, "sources", c.multi.sources);
    read(m, "radius", c.multi.radius);
    read(m, "aperture", c.multi.aperture);
    read(m, "t_init", c.multi.t_init);
    read(m, "tau", c.multi.tau);
    read(m, "k", c.multi.k);
    read(m, "peaks", c.multi.peaks);
    if (c.multi.sources < 1) throw ConfigError("config key 'multi.sources' must be >= 1");
    if (!(c.multi.radius > 1.0)) throw ConfigError("config key 'multi.radius' must exceed 1");
    if (c.multi.aperture < 1 || c.multi.aperture > 3) {
      throw ConfigError("config key 'multi.aperture' must be 1, 2 or 3");
    }
    if (c.multi.t_init < 0.0) throw ConfigError("config key 'multi.t_init' must be >= 0");
    require_positive(c.multi.tau, "multi.tau");
    if (c.multi.k < 0 || c.multi.k > c.multi.sources) throw ConfigError("config key 'multi.k' out of range");
    if (m.contains("scan")) {
      const auto& s = m["scan"];
      read(s, "x_min", c.multi.scan.x_min);
      read(s, "x_max", c.multi.scan.x_max);
      read(s, "y_min", c.multi.scan.y_min);
      read(s, "y_max", c.multi.scan.y_max);
      read(s, "resolution", c.multi.scan.resolution);
      read(s, "radius", c.multi.scan.radius);
      if (c.multi.scan.resolution < 2) throw ConfigError("config key 'multi.scan.resolution' must be >= 2");
      if (!(c.multi.scan.radius > 0.0 && c.multi.scan.radius < 1.0)) {
        throw ConfigError("config key 'multi.scan.radius' must lie in (0, 1)");
      }
    }
  }
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    read(s, "eps", c.sweep.eps);
    read(s, "sigma", c.sweep.sigma);
    read(s, "aspect", c.sweep.aspect);
  }
  if (doc.contains("oracle_check")) {
    const auto& o = doc["oracle_check"];
    if (o.contains("points")) {
      c.oracle_check.points.clear();
      for (const auto& p : o["points"]) c.oracle_check.points.push_back(read_point(p, "oracle_check point"));
    }
    read(o, "exact", c.oracle_check.exact);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json doc;
  doc["version"] = c.version;
  doc["name"] = c.name;
  doc["algorithm"] = c.algorithm == Algorithm::one ? "one" : "multi";
  doc["alpha"] = c.alpha;
  doc["T"] = c.final_time;
  doc["gamma0"] = c.gamma0;
  doc["time_steps"] = c.time_steps;
  doc["N"] = c.N;
  doc["inclusions"] = json::array();
  for (const auto& inc : c.inclusions) doc["inclusions"].push_back(write_inclusion(inc));
  doc["mesh"] = {{"h_far", c.mesh.h_far}, {"h_near", c.mesh.h_near}};
  doc["noise"] = {{"sigma", c.noise.sigma}, {"seed", c.noise.seed},
                  {"realizations", c.noise.realizations}};
  json segs = json::array();
  for (const auto& s : c.one.segments) {
    segs.push_back({{"direction", point(s.direction)}, {"origin", point(s.origin)},
                    {"s_lo", s.s_lo}, {"s_hi", s.s_hi}});
  }
  doc["one"] = {{"tol", c.one.tol}, {"segments", segs}};
  const auto& s = c.multi.scan;
  doc["multi"] = {{"sources", c.multi.sources}, {"radius", c.multi.radius},
                  {"aperture", c.multi.aperture}, {"t_init", c.multi.t_init},
                  {"tau", c.multi.tau}, {"k", c.multi.k}, {"peaks", c.multi.peaks},
                  {"scan", {{"x_min", s.x_min}, {"x_max", s.x_max}, {"y_min", s.y_min},
                            {"y_max", s.y_max}, {"resolution", s.resolution},
                            {"radius", s.radius}}}};
  doc["sweep"] = {{"eps", c.sweep.eps}, {"sigma", c.sweep.sigma}, {"aspect", c.sweep.aspect}};
  json pts = json::array();
  for (const auto& p : c.oracle_check.points) pts.push_back(point(p));
  doc["oracle_check"] = {{"points", pts}, {"exact", c.oracle_check.exact}};
  return doc.dump(2) + "\n";
}

}  // namespace subdiff
