#pragma once

#include "subdiff/config.hpp"
#include "subdiff/locate_multi.hpp"
#include "subdiff/locate_one.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace subdiff {

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::string summary;
};

std::shared_ptr<const Mesh> build_run_mesh(const RunConfig& config);
/// 2D coefficients fitted for the configured alpha.
std::shared_ptr<const GreenCoeffs> run_coeffs(const RunConfig& config);
/// Directions a_j of the configured probe segments.
std::vector<Vec<2>> probe_directions(const RunConfig& config);

struct LocateOneOutcome {
  Reconstruction1<2> noiseless;
  /// First row is noiseless, then one row per noise realization.
  std::vector<LocateOneRow> rows;
  /// Realizations without a sign change on some segment.
  int failures = 0;
};

/// FEM data for the first inclusion of the config, then root finding on
/// noiseless and noisy traces.
LocateOneOutcome locate_one_fem(const RunConfig& config,
                                std::shared_ptr<const GreenCoeffs> coeffs);

struct LocateMultiOutcome {
  DataMatrix data;
  int k = 0;
  IndicatorGrid grid;
  std::vector<Vec<2>> peaks;
};

/// Truncation threshold: tau, raised to 10 sigma under noise.
double truncation_tau(const RunConfig& config, double sigma);

LocateMultiOutcome locate_multi_fem(const RunConfig& config,
                                    std::shared_ptr<const GreenCoeffs> coeffs, double sigma,
                                    std::uint64_t seed);

/// Largest distance from a true center to its nearest recovered point.
double worst_center_error(std::span<const Inclusion> truth, std::span<const Vec<2>> found);

RunResult run_forward(const RunConfig& config, const std::filesystem::path& out);
RunResult run_locate_one(const RunConfig& config, const std::filesystem::path& out);
RunResult run_locate_multi(const RunConfig& config, const std::filesystem::path& out);
RunResult run_oracle_check(const RunConfig& config, const std::filesystem::path& out);
RunResult run_sweep(const RunConfig& config, const std::filesystem::path& out);

}  // namespace subdiff
