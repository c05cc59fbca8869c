#include "subdiff/config.hpp"
#include "subdiff/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace subdiff;

TEST_CASE("worst center error") {
  std::vector<Inclusion> truth(2);
  truth[0].center = Point2(0.3, 0.2);
  truth[1].center = Point2(-0.4, 0.0);
  const std::vector<Vec<2>> found{Vec<2>(-0.38, 0.0), Vec<2>(0.3, 0.25)};
  CHECK(worst_center_error(truth, found) == doctest::Approx(0.05));
}

TEST_CASE("ellipse: horizontal coordinate is more stable under noise") {
  RunConfig c = parse_config(R"({
    "inclusions": [{"center": [0.2, 0.3], "eps": 0.1, "gamma": 50, "shape": "ellipse", "aspect": 3}],
    "noise": {"sigma": 0.01, "seed": 1, "realizations": 10}
  })");
  const auto out = locate_one_fem(c, run_coeffs(c));
  double dx = 0.0, dy = 0.0;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const auto& r = out.rows[i];
    REQUIRE_FALSE(std::isnan(r.recovered.x()));
    dx += std::abs(r.recovered.x() - r.truth.x());
    dy += std::abs(r.recovered.y() - r.truth.y());
  }
  CHECK(dx <= dy);
  CHECK((out.noiseless.P - Vec<2>(0.2, 0.3)).norm() <= 0.1);
}

TEST_CASE("sweep writes one row per case") {
  const auto dir = std::filesystem::temp_directory_path() / "subdiff_test_sweep";
  std::filesystem::remove_all(dir);
  const RunConfig c = parse_config(R"({
    "time_steps": 16,
    "inclusions": [{"center": [0.2, 0.3], "eps": 0.1, "gamma": 50}],
    "mesh": {"h_far": 0.15},
    "sweep": {"eps": [0.1, 0.15]}
  })");
  const auto result = run_sweep(c, dir);
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("stage errors carry context") {
  RunConfig c;
  c.inclusions.clear();
  CHECK_THROWS_AS(locate_one_fem(c, run_coeffs(c)), ConfigError);
}
