#include "subdiff/experiments.hpp"

#include "subdiff/errors.hpp"
#include "subdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace subdiff {

namespace {

template <class F>
decltype(auto) stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ReconstructionError& e) {
    throw ReconstructionError(name + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const SolverError& e) {
    throw SolverError(name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw SolverError(name + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

RunInfo base_info(const RunConfig& c) {
  return {{"time_step", fmt(c.grid().step())},
          {"h_near_resolved", fmt(c.h_near())},
          {"noise_seed", std::to_string(c.noise.seed)}};
}

void require_inclusions(const RunConfig& c, std::size_t exactly, const char* command) {
  if (exactly != 0 && c.inclusions.size() != exactly) {
    throw ConfigError(std::string(command) + ": expected exactly " + std::to_string(exactly) +
                      " inclusion(s)");
  }
  if (c.inclusions.empty()) throw ConfigError(std::string(command) + ": no inclusions configured");
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

MultiSetup multi_setup(const RunConfig& c, std::shared_ptr<const GreenCoeffs> coeffs) {
  MultiSetup s;
  s.alpha = FracOrder(c.alpha);
  s.gamma0 = c.gamma0;
  s.coeffs = std::move(coeffs);
  s.N = c.N;
  s.grid = c.grid();
  s.t_init = c.multi.t_init;
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return nan();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Applies the sweep overrides to every inclusion.
RunConfig with_overrides(RunConfig c, double eps, double aspect) {
  for (auto& inc : c.inclusions) {
    if (eps > 0.0) inc.eps = eps;
    if (aspect > 0.0) {
      inc.shape = aspect == 1.0 ? Shape::disk : Shape::ellipse;
      inc.aspect = aspect;
    }
  }
  return c;
}

}  // namespace

std::shared_ptr<const Mesh> build_run_mesh(const RunConfig& config) {
  return stage("mesh", [&] {
    return std::make_shared<const Mesh>(
        build_mesh(DiskDomain{}, config.inclusion_set(), config.mesh.h_far, config.h_near()));
  });
}

std::shared_ptr<const GreenCoeffs> run_coeffs(const RunConfig& config) {
  return stage("green coefficients", [&] {
    return std::make_shared<const GreenCoeffs>(fit_green_coeffs(2, config.alpha, config.N));
  });
}

std::vector<Vec<2>> probe_directions(const RunConfig& config) {
  std::vector<Vec<2>> out;
  for (const auto& s : config.one.segments) out.push_back(s.direction);
  return out;
}

LocateOneOutcome locate_one_fem(const RunConfig& config,
                                std::shared_ptr<const GreenCoeffs> coeffs) {
  require_inclusions(config, 1, "locate-one");
  const auto mesh = build_run_mesh(config);
  const auto dirs = probe_directions(config);
  const auto traces = stage("forward solve", [&] {
    return linear_background_traces(mesh, FracOrder(config.alpha), config.inclusion_set(), dirs,
                                    config.grid());
  });
  const auto& segs = config.one.segments;
  const Vec<2> truth = config.inclusions.front().center;
  LocateOneOutcome out;
  out.noiseless = stage("root finding", [&] {
    const TraceProbe probe(traces.differences(), coeffs, config.N, config.gamma0);
    return locate_one_inclusion(probe, segs, config.one.tol);
  });
  out.rows.push_back({truth, out.noiseless.P, config.inclusions.front().eps, 0.0, 0});
  if (config.noise.sigma > 0.0) {
    for (int r = 0; r < config.noise.realizations; ++r) {
      const std::uint64_t seed = config.noise.seed + static_cast<std::uint64_t>(r);
      LocateOneRow row{truth, Vec<2>(nan(), nan()), config.inclusions.front().eps,
                       config.noise.sigma, seed};
      try {
        const TraceProbe probe(traces.differences(config.noise.sigma, seed), coeffs, config.N,
                               config.gamma0);
        row.recovered = locate_one_inclusion(probe, segs, config.one.tol).P;
      } catch (const ReconstructionError&) {
        ++out.failures;
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

double truncation_tau(const RunConfig& config, double sigma) {
  return sigma > 0.0 ? std::max(config.multi.tau, 10.0 * sigma) : config.multi.tau;
}

LocateMultiOutcome locate_multi_fem(const RunConfig& config,
                                    std::shared_ptr<const GreenCoeffs> coeffs, double sigma,
                                    std::uint64_t seed) {
  require_inclusions(config, 0, "locate-multi");
  const auto mesh = build_run_mesh(config);
  const auto sources = stage("sources", [&] {
    return SourceSet::aperture(config.multi.aperture, config.multi.sources, config.multi.radius);
  });
  const auto setup = multi_setup(config, coeffs);
  auto data = stage("data matrix", [&] {
    return build_data_matrix(mesh, config.inclusion_set(), sources, setup, sigma, seed);
  });
  const int k = config.multi.k > 0
                    ? config.multi.k
                    : stage("truncation", [&] {
                        return select_truncation(data.singular_values(),
                                                 truncation_tau(config, sigma));
                      });
  auto grid = stage("indicator scan", [&] {
    return scan_indicator(data, sources, *coeffs, config.N, config.gamma0, config.final_time,
                          config.multi.scan, k);
  });
  double eps = 0.0;
  for (const auto& inc : config.inclusions) eps = std::max(eps, inc.eps);
  const int m = config.multi.peaks > 0 ? config.multi.peaks
                                       : static_cast<int>(config.inclusions.size());
  auto peaks = stage("peak extraction", [&] { return peak_extract(grid, m, 2.0 * eps); });
  return {std::move(data), k, std::move(grid), std::move(peaks)};
}

double worst_center_error(std::span<const Inclusion> truth, std::span<const Vec<2>> found) {
  double worst = 0.0;
  for (const auto& inc : truth) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : found) best = std::min(best, (p - inc.center).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

RunResult run_forward(const RunConfig& config, const std::filesystem::path& out) {
  prepare_output_dir(out);
  RunResult result;
  const auto mesh = build_run_mesh(config);
  const auto inclusions = config.inclusion_set();
  const auto grid = config.grid();
  auto save = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = out / name;
    write_file(path, body);
    result.files.push_back(path);
  };
  save("mesh.txt", [&](std::ostream& o) { write_mesh(o, *mesh); });
  const auto dirs = probe_directions(config);
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const Vec<2> a = dirs[j];
    const double gamma0 = config.gamma0;
    ForwardData data;
    data.u0 = [a](const Point2& x) { return a.dot(x); };
    data.g = [a, gamma0](const Point2&, const Point2& n, double) { return gamma0 * a.dot(n); };
    const std::string tag = std::to_string(j + 1);
    const auto U = stage("forward solve", [&] {
      return solve_background(mesh, FracOrder(config.alpha), gamma0, data, grid);
    });
    const auto Ut = boundary_restrict(U);
    save("U" + tag + "_field.csv", [&](std::ostream& o) { write_field_csv(o, U); });
    save("U" + tag + "_trace.csv", [&](std::ostream& o) { write_trace_csv(o, Ut); });
    if (inclusions.empty()) continue;
    const auto u = stage("forward solve", [&] {
      return solve_subdiffusion(mesh, FracOrder(config.alpha), inclusions, data, grid);
    });
    const auto ut = boundary_restrict(u);
    save("u" + tag + "_field.csv", [&](std::ostream& o) { write_field_csv(o, u); });
    save("u" + tag + "_trace.csv", [&](std::ostream& o) { write_trace_csv(o, ut); });
    save("diff" + tag + "_trace.csv", [&](std::ostream& o) { write_trace_csv(o, ut - Ut); });
    if (config.noise.sigma > 0.0) {
      const auto noisy = add_noise(ut, config.noise.sigma, background_seed(config.noise.seed, j));
      save("u" + tag + "_noisy_trace.csv",
           [&](std::ostream& o) { write_trace_csv(o, noisy.trace); });
    }
  }
  auto info = base_info(config);
  info.emplace_back("vertices", std::to_string(mesh->n_vertices()));
  result.files.push_back(write_manifest(out, "forward", config, info));
  std::ostringstream s;
  s << "forward: " << mesh->n_vertices() << " vertices, " << grid.n_steps() << " steps, "
    << dirs.size() << " backgrounds";
  result.summary = s.str();
  return result;
}

RunResult run_locate_one(const RunConfig& config, const std::filesystem::path& out) {
  prepare_output_dir(out);
  const auto outcome = locate_one_fem(config, run_coeffs(config));
  RunResult result;
  const auto csv = out / "locate_one.csv";
  write_file(csv, [&](std::ostream& o) { write_locate_one_csv(o, outcome.rows); });
  result.files.push_back(csv);
  std::vector<double> noisy;
  for (std::size_t i = 1; i < outcome.rows.size(); ++i) {
    const auto& r = outcome.rows[i];
    noisy.push_back(std::isnan(r.recovered.x()) ? std::numeric_limits<double>::infinity()
                                                : (r.recovered - r.truth).norm());
  }
  auto info = base_info(config);
  info.emplace_back("noisy_failures", std::to_string(outcome.failures));
  result.files.push_back(write_manifest(out, "locate-one", config, info));
  const auto& z = config.inclusions.front().center;
  std::ostringstream s;
  s << "locate-one: z1=(" << fmt(z.x()) << "," << fmt(z.y()) << ") P=(" << fmt(outcome.noiseless.P.x())
    << "," << fmt(outcome.noiseless.P.y()) << ") |P-z1|=" << fmt((outcome.noiseless.P - z).norm());
  if (!noisy.empty()) {
    s << " median noisy error=" << fmt(median(noisy)) << " over " << noisy.size()
      << " realizations (sigma=" << fmt(config.noise.sigma) << ", failures=" << outcome.failures
      << ")";
  }
  result.summary = s.str();
  return result;
}

RunResult run_locate_multi(const RunConfig& config, const std::filesystem::path& out) {
  prepare_output_dir(out);
  const auto outcome =
      locate_multi_fem(config, run_coeffs(config), config.noise.sigma, config.noise.seed);
  RunResult result;
  auto save = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = out / name;
    write_file(path, body);
    result.files.push_back(path);
  };
  save("singular_values.csv", [&](std::ostream& o) { write_singular_values_csv(o, outcome.data); });
  save("data_matrix.csv", [&](std::ostream& o) { write_data_matrix_csv(o, outcome.data); });
  save("indicator.csv", [&](std::ostream& o) { write_indicator_csv(o, outcome.grid); });
  save("peaks.csv", [&](std::ostream& o) {
    o.precision(10);
    o << "x,y,nearest_center_distance\n";
    for (const auto& p : outcome.peaks) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& inc : config.inclusions) best = std::min(best, (p - inc.center).norm());
      o << p.x() << ',' << p.y() << ',' << best << '\n';
    }
  });
  auto info = base_info(config);
  info.emplace_back("k", std::to_string(outcome.k));
  info.emplace_back("tau_effective", fmt(truncation_tau(config, config.noise.sigma)));
  result.files.push_back(write_manifest(out, "locate-multi", config, info));
  std::ostringstream s;
  s << "locate-multi: k=" << outcome.k << " peaks=" << outcome.peaks.size()
    << " worst center error=" << fmt(worst_center_error(config.inclusions, outcome.peaks));
  result.summary = s.str();
  return result;
}

RunResult run_oracle_check(const RunConfig& config, const std::filesystem::path& out) {
  prepare_output_dir(out);
  require_inclusions(config, 0, "oracle-check");
  const auto mesh = build_run_mesh(config);
  const auto inclusions = config.inclusion_set();
  const auto grid = config.grid();
  const auto dirs = probe_directions(config);
  std::shared_ptr<const GreenCoeffs> coeffs;
  std::shared_ptr<const GreenTable> table;
  if (config.oracle_check.exact) {
    table = stage("green table", [&] { return std::make_shared<const GreenTable>(2, config.alpha); });
  } else {
    coeffs = run_coeffs(config);
  }
  struct Row {
    int background;
    Vec<2> P;
    double boundary, interior;
  };
  std::vector<Row> rows;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const Vec<2> a = dirs[j];
    const double gamma0 = config.gamma0;
    ForwardData data;
    data.u0 = [a](const Point2& x) { return a.dot(x); };
    data.g = [a, gamma0](const Point2&, const Point2& n, double) { return gamma0 * a.dot(n); };
    const auto u = stage("forward solve", [&] {
      return solve_subdiffusion(mesh, FracOrder(config.alpha), inclusions, data, grid);
    });
    const auto U = stage("forward solve", [&] {
      return solve_background(mesh, FracOrder(config.alpha), gamma0, data, grid);
    });
    const auto diff = boundary_restrict(u) - boundary_restrict(U);
    for (const auto& P : config.oracle_check.points) {
      const auto phi =
          table ? time_reversed(ExactFundamental2(table, P, gamma0), config.final_time)
                : time_reversed(ApproxFundamental<2>(coeffs, config.N, SourcePoint<2>{P, 0.0}, gamma0),
                                config.final_time);
      rows.push_back({static_cast<int>(j) + 1, P, measurement_boundary(diff, phi, gamma0).value,
                      measurement_interior(u, phi, inclusions).value});
    }
  }
  RunResult result;
  double worst = 0.0;
  const auto csv = out / "oracle_check.csv";
  write_file(csv, [&](std::ostream& o) {
    o.precision(12);
    o << "background,P1,P2,boundary,interior,relative_difference\n";
    for (const auto& r : rows) {
      const double rel = std::abs(r.boundary - r.interior) / std::abs(r.interior);
      worst = std::max(worst, rel);
      o << r.background << ',' << r.P.x() << ',' << r.P.y() << ',' << r.boundary << ','
        << r.interior << ',' << rel << '\n';
    }
  });
  result.files.push_back(csv);
  auto info = base_info(config);
  info.emplace_back("test_function", config.oracle_check.exact ? "exact" : "series");
  result.files.push_back(write_manifest(out, "oracle-check", config, info));
  result.summary = "oracle-check: worst boundary vs interior relative difference " + fmt(worst);
  return result;
}

RunResult run_sweep(const RunConfig& config, const std::filesystem::path& out) {
  prepare_output_dir(out);
  require_inclusions(config, 0, "sweep");
  const auto coeffs = run_coeffs(config);
  const std::vector<double> eps_list = config.sweep.eps.empty() ? std::vector<double>{0.0}
                                                                : config.sweep.eps;
  const std::vector<double> aspect_list =
      config.sweep.aspect.empty() ? std::vector<double>{0.0} : config.sweep.aspect;
  const std::vector<double> sigma_list =
      config.sweep.sigma.empty() ? std::vector<double>{config.noise.sigma} : config.sweep.sigma;
  std::ostringstream csv;
  csv.precision(10);
  int rows = 0;
  int failures = 0;
  if (config.algorithm == Algorithm::one) {
    csv << "eps,aspect,sigma,seed,z1,z2,P1,P2,error\n";
    for (double eps : eps_list) {
      for (double aspect : aspect_list) {
        for (double sigma : sigma_list) {
          RunConfig c = with_overrides(config, eps, aspect);
          c.noise.sigma = sigma;
          const auto outcome = locate_one_fem(c, coeffs);
          failures += outcome.failures;
          const auto& inc = c.inclusions.front();
          for (std::size_t i = sigma > 0.0 ? 1 : 0; i < outcome.rows.size(); ++i) {
            const auto& r = outcome.rows[i];
            csv << inc.eps << ',' << (inc.shape == Shape::disk ? 1.0 : inc.aspect) << ','
                << r.sigma << ',' << r.seed << ',' << r.truth.x() << ',' << r.truth.y() << ','
                << r.recovered.x() << ',' << r.recovered.y() << ','
                << (r.recovered - r.truth).norm() << '\n';
            ++rows;
          }
        }
      }
    }
  } else {
    csv << "eps,aspect,sigma,seed,k,worst_error\n";
    for (double eps : eps_list) {
      for (double aspect : aspect_list) {
        for (double sigma : sigma_list) {
          const RunConfig c = with_overrides(config, eps, aspect);
          const int reps = sigma > 0.0 ? config.noise.realizations : 1;
          for (int r = 0; r < reps; ++r) {
            const std::uint64_t seed = config.noise.seed + static_cast<std::uint64_t>(r);
            const auto& inc = c.inclusions.front();
            csv << inc.eps << ',' << (inc.shape == Shape::disk ? 1.0 : inc.aspect) << ','
                << sigma << ',' << seed << ',';
            try {
              const auto outcome = locate_multi_fem(c, coeffs, sigma, seed);
              csv << outcome.k << ',' << worst_center_error(c.inclusions, outcome.peaks) << '\n';
            } catch (const ReconstructionError&) {
              ++failures;
              csv << 0 << ',' << nan() << '\n';
            }
            ++rows;
          }
        }
      }
    }
  }
  RunResult result;
  const auto path = out / "sweep.csv";
  write_file(path, [&](std::ostream& o) { o << csv.str(); });
  result.files.push_back(path);
  auto info = base_info(config);
  info.emplace_back("rows", std::to_string(rows));
  info.emplace_back("failures", std::to_string(failures));
  result.files.push_back(write_manifest(out, "sweep", config, info));
  result.summary = "sweep: " + std::to_string(rows) + " rows, " + std::to_string(failures) +
                   " failed reconstructions";
  return result;
}

}  // namespace subdiff
