#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "alphacir/config.hpp"
#include "alphacir/csv.hpp"

using namespace alphacir;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("config parsing and field-precise errors") {
  const auto cfg = ConfigFile::parse_text(
      "# model\n"
      "alpha = 0.5\n"
      "types = 2\n"
      "a = 1.0\n"
      "b = 1.0, 2.0\n"
      "m = 0.6, 0.6  # weights\n"
      "seed = 42\n",
      "test.cfg");
  const auto p = load_model_params(cfg);
  CHECK(p.alpha == 0.5);
  CHECK(p.a == std::vector<double>{1.0, 1.0});  // broadcast
  CHECK(p.b == std::vector<double>{1.0, 2.0});
  CHECK(cfg.get_u64("seed", 0) == 42);
  CHECK(cfg.line_of("b") == 5);

  // out-of-range alpha names the field, its line and the constraint
  const auto bad = ConfigFile::parse_text("alpha = 1.5\n", "bad.cfg");
  try {
    load_model_params(bad);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(msg.find("bad.cfg:1") != std::string::npos);
    CHECK(msg.find("(0,1)") != std::string::npos);
  }

  CHECK_THROWS_AS(ConfigFile::parse_text("alpha 0.5\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_text("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(
      load_model_params(ConfigFile::parse_text("alpha = 0.5\nm = 0, 0\ntypes = 2\n")),
      ConfigError);
  // missing required key
  CHECK_THROWS_AS(load_model_params(ConfigFile::parse_text("types = 2\n")),
                  ConfigError);
  // wrong arity
  const auto wrong =
      ConfigFile::parse_text("alpha = 0.5\ntypes = 3\na = 1, 2\n");
  CHECK_THROWS_AS(load_model_params(wrong), ConfigError);
}

TEST_CASE("sim and gfv config validation") {
  const auto cfg = ConfigFile::parse_text(
      "h = 1e-3\ndelta_b = 1e-3\ndelta_i = 1e-3\nhorizon = 2\npaths = 100\n"
      "epsilon = 1e-3\nroute = time-change\n");
  const auto sim = load_sim_config(cfg);
  CHECK(sim.h == 1e-3);
  CHECK(sim.n_paths == 100);
  const auto gfv = load_gfv_config(cfg);
  CHECK(gfv.route == GfvRoute::time_change);
  CHECK_THROWS_AS(load_sim_config(ConfigFile::parse_text("h = -1\n")),
                  ConfigError);
  CHECK_THROWS_AS(load_gfv_config(ConfigFile::parse_text("epsilon = 1.5\n")),
                  ConfigError);
  CHECK_THROWS_AS(load_gfv_config(ConfigFile::parse_text("route = sideways\n")),
                  ConfigError);
}

TEST_CASE("csv emission") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "alphacir_csv_test";
  fs::create_directories(dir);

  // header-only file for an empty record list
  const auto empty_path = (dir / "empty.csv").string();
  emit_csv({"a", "b"}, {}, empty_path);
  CHECK(slurp(empty_path) == "a,b\n");

  // quoting, float formatting, LF endings
  const auto path = (dir / "rows.csv").string();
  emit_csv({"name", "x", "n"},
           {{std::string("pl,ain"), 0.1, 7L},
            {std::string("q\"uote"), 1.0 / 3.0, -2L}},
           path);
  const std::string body = slurp(path);
  CHECK(body.find("\"pl,ain\"") != std::string::npos);
  CHECK(body.find("\"q\"\"uote\"") != std::string::npos);
  CHECK(body.find("0.10000000000000001") != std::string::npos);
  CHECK(body.find("0.33333333333333331") != std::string::npos);
  CHECK(body.find("\r") == std::string::npos);

  // byte-identical re-emission
  const auto path2 = (dir / "rows2.csv").string();
  emit_csv({"name", "x", "n"},
           {{std::string("pl,ain"), 0.1, 7L},
            {std::string("q\"uote"), 1.0 / 3.0, -2L}},
           path2);
  CHECK(slurp(path2) == body);

  // schema mismatch is rejected
  CHECK_THROWS(emit_csv({"a"}, {{1.0, 2.0}}, (dir / "bad.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("double formatting round-trips") {
  for (double v : {1.0, 0.1, 1e-300, 3.141592653589793, -2.5e17}) {
    const std::string s = format_double17(v);
    CHECK(std::stod(s) == v);
  }
}
