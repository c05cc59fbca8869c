#include "subdiff/config.hpp"
#include "subdiff/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace subdiff;

namespace {

const char* kExample = R"({
  // two disks, limited aperture
  "version": 1,
  "name": "two-disks",
  "algorithm": "multi",
  "alpha": 0.5, "T": 1, "gamma0": 1,
  "inclusions": [
    {"center": [0.3, 0.2], "eps": 0.05, "gamma": 3},
    {"center": [-0.4, 0.0], "eps": 0.05, "gamma": 3, "shape": "ellipse", "aspect": 2}
  ],
  "noise": {"sigma": 0.01, "seed": 9},
  "multi": {"aperture": 2, "scan": {"resolution": 51}}
})";

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_config("{}");
  CHECK(c.version == kConfigVersion);
  CHECK(c.alpha == 0.5);
  CHECK(c.final_time == 1.0);
  CHECK(c.gamma0 == 1.0);
  CHECK(c.time_steps == 128);
  CHECK(c.N == 3);
  CHECK(c.algorithm == Algorithm::one);
  CHECK(c.multi.sources == 10);
  CHECK(c.multi.radius == 2.0);
  CHECK(c.one.segments.size() == 2);
  CHECK(c.grid() == TimeGrid(1.0, 128));
}

TEST_CASE("parse a full document") {
  const RunConfig c = parse_config(kExample);
  CHECK(c.name == "two-disks");
  CHECK(c.algorithm == Algorithm::multi);
  REQUIRE(c.inclusions.size() == 2);
  CHECK(c.inclusions[1].shape == Shape::ellipse);
  CHECK(c.inclusions[1].aspect == 2.0);
  CHECK(c.inclusions[0].gamma == 3.0);
  CHECK(c.noise.seed == 9);
  CHECK(c.multi.aperture == 2);
  CHECK(c.multi.scan.resolution == 51);
  CHECK(c.h_near() == doctest::Approx(0.25 * 0.05 / std::sqrt(2.0)));
  CHECK(c.inclusion_set().size() == 2);
}

TEST_CASE("dump and parse round trip") {
  const RunConfig c = parse_config(kExample);
  const std::string once = dump_config(c);
  const RunConfig back = parse_config(once);
  CHECK(dump_config(back) == once);
  CHECK(back.inclusions[1].center == c.inclusions[1].center);
  CHECK(back.multi.tau == c.multi.tau);
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"alpha": -0.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"alpha": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"alpha": "half"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithm": "many"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"inclusions": [{"eps": 0.1}]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"inclusions": [{"center": [0, 0], "shape": "square"}]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"inclusions": [{"center": [0, 0], "eps": 0}]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"multi": {"aperture": 4}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"multi": {"radius": 0.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"sigma": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"one": {"segments": [{}]}})"), ConfigError);
  try {
    parse_config(R"({"T": "long"})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'T'") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("manifest reloads as the same configuration") {
  const auto dir = std::filesystem::temp_directory_path() / "subdiff_test_config";
  std::filesystem::remove_all(dir);
  prepare_output_dir(dir);
  const RunConfig c = parse_config(kExample);
  const auto path = write_manifest(dir, "locate-multi", c, {{"seed", "9"}});
  const RunConfig back = load_config(path);
  CHECK(dump_config(back) == dump_config(c));
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"command\": \"locate-multi\"") != std::string::npos);
  CHECK_THROWS_AS(write_file(dir / "missing" / "x.csv", [](std::ostream& o) { o << 1; }), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configurations load") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SUBDIFF_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const RunConfig c = load_config(entry.path());
    CHECK_FALSE(c.inclusions.empty());
    CHECK_NOTHROW(c.inclusion_set());
    ++count;
  }
  CHECK(count == 10);
}
