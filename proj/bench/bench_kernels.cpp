#include "subdiff/locate_multi.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

using namespace subdiff;

std::shared_ptr<const GreenCoeffs> coeffs() {
  static const auto c = std::make_shared<const GreenCoeffs>(fit_green_coeffs(2, 0.5, 3));
  return c;
}

// Leading-order data matrix for two point inclusions.
DataMatrix model_data(const SourceSet& sources) {
  const auto c = coeffs();
  Eigen::MatrixXd B = g_matrix(Vec<2>(0.3, 0.2), sources, *c, 3, 1.0, 1.0) +
                      g_matrix(Vec<2>(-0.4, 0.0), sources, *c, 3, 1.0, 1.0);
  return DataMatrix(B);
}

void scan(benchmark::State& state, Execution exec) {
  const auto sources = SourceSet::aperture(1);
  const auto data = model_data(sources);
  ScanRegion region;
  region.resolution = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto grid = scan_indicator(data, sources, *coeffs(), 3, 1.0, 1.0, region, 4, exec);
    benchmark::DoNotOptimize(grid.values.data());
  }
}

void traces(benchmark::State& state, Execution exec) {
  Inclusion a;
  a.center = {0.3, 0.2};
  a.eps = 0.1;
  a.gamma = 3.0;
  const InclusionSet inclusions({a}, 1.0);
  const auto mesh = std::make_shared<const Mesh>(build_mesh(DiskDomain{}, inclusions, 0.1, 0.025));
  const SourceSet sources(static_cast<int>(state.range(0)), 2.0, 0.0, 6.283185307179586);
  MultiSetup setup;
  setup.coeffs = coeffs();
  setup.grid = TimeGrid(1.0, 32);
  for (auto _ : state) {
    auto t = source_traces(mesh, inclusions, sources, setup, exec);
    benchmark::DoNotOptimize(t.u.data());
  }
}

void BM_ScanSerial(benchmark::State& s) { scan(s, Execution::serial); }
void BM_ScanParallel(benchmark::State& s) { scan(s, Execution::parallel); }
void BM_TracesSerial(benchmark::State& s) { traces(s, Execution::serial); }
void BM_TracesParallel(benchmark::State& s) { traces(s, Execution::parallel); }

}  // namespace

BENCHMARK(BM_ScanSerial)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanParallel)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TracesSerial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TracesParallel)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
