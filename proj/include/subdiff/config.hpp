#pragma once

#include "subdiff/locate_multi.hpp"
#include "subdiff/locate_one.hpp"
#include "subdiff/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace subdiff {

inline constexpr int kConfigVersion = 1;

enum class Algorithm { one, multi };

struct MeshSpec {
  double h_far = 0.05;
  /// 0 selects a quarter of the smallest inclusion semi-axis.
  double h_near = 0.0;
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  /// Noise realizations per run; seeds are seed, seed + 1, ...
  int realizations = 1;
};

struct OneSpec {
  std::vector<ProbeSegment> segments = default_segments();
  double tol = 1e-6;
};

struct MultiSpec {
  int sources = 10;
  double radius = 2.0;
  int aperture = 1;
  double t_init = 0.0;
  double tau = 1e-4;
  /// 0 selects k from tau.
  int k = 0;
  /// 0 uses the number of inclusions.
  int peaks = 0;
  ScanRegion scan;
};

struct SweepSpec {
  std::vector<double> eps;
  std::vector<double> sigma;
  std::vector<double> aspect;
};

struct OracleCheckSpec {
  std::vector<Vec<2>> points{Vec<2>(0.6, 2.0)};
  /// Use the tabulated reduced Green function instead of the N-term series.
  bool exact = false;
};

struct RunConfig {
  int version = kConfigVersion;
  std::string name = "run";
  Algorithm algorithm = Algorithm::one;
  double alpha = 0.5;
  double final_time = 1.0;
  double gamma0 = 1.0;
  int time_steps = 128;
  int N = 3;
  std::vector<Inclusion> inclusions;
  MeshSpec mesh;
  NoiseSpec noise;
  OneSpec one;
  MultiSpec multi;
  SweepSpec sweep;
  OracleCheckSpec oracle_check;

  TimeGrid grid() const { return TimeGrid(final_time, static_cast<std::size_t>(time_steps)); }
  InclusionSet inclusion_set() const { return InclusionSet(inclusions, gamma0); }
  double h_near() const;
};

/// Throws ConfigError with the offending key on malformed input.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved document; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& config);

}  // namespace subdiff
