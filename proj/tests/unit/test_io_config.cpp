#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "bqc/config.hpp"

using namespace bqc;
namespace fs = std::filesystem;

namespace {

State sample_state() {
  auto g = Grid::make(8, 6);
  State s = State::zero(g, 0.375);
  s.w = mode_field(g, Parity::odd, 1, 1, 0.7) + mode_field(g, Parity::odd, 3, 2, -0.2, true);
  s.theta = mode_field(g, Parity::even, 0, 1, 0.1, true) + mode_field(g, Parity::even, 2, 0, 1.0 / 3.0);
  s.mean_coeff = -std::numbers::pi;
  return s;
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "bqc_unit";
  fs::create_directories(d);
  return d / name;
}

template <class Fn>
std::string config_error(Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("snapshot round trip is byte exact", "[io]") {
  const State s = sample_state();
  const std::string bytes = encode_snapshot(s);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 8 + 2 + 8 * (2 * 48 + 1));
  const fs::path p = scratch("round.bqch");
  write_snapshot(p, s);
  const State r = read_snapshot(p);
  CHECK(r.t == s.t);
  CHECK(r.mean_coeff == s.mean_coeff);
  CHECK(r.w.values() == s.w.values());
  CHECK(r.theta.values() == s.theta.values());
  CHECK(encode_snapshot(r) == bytes);
}

TEST_CASE("snapshot header is little endian", "[io]") {
  const std::string b = encode_snapshot(sample_state());
  CHECK(b.substr(0, 4) == "BQCH");
  CHECK(std::uint8_t(b[4]) == kSnapshotVersion);
  CHECK(b[5] == 0);
  CHECK(std::uint8_t(b[8]) == 8);
  CHECK(std::uint8_t(b[12]) == 6);
  // 0.375 = 0x3FD8000000000000
  CHECK(std::uint8_t(b[23]) == 0x3f);
  CHECK(std::uint8_t(b[22]) == 0xd8);
  CHECK(b[24] == 0);  // w odd
  CHECK(b[25] == 1);  // theta even
}

TEST_CASE("damaged snapshots are rejected", "[io]") {
  const std::string b = encode_snapshot(sample_state());
  CHECK_THROWS_WITH(decode_snapshot(b.substr(0, b.size() - 3), "x"), Catch::Matchers::ContainsSubstring("truncated"));
  CHECK_THROWS_WITH(decode_snapshot(b.substr(0, 10), "x"), Catch::Matchers::ContainsSubstring("truncated"));
  std::string bad = b;
  bad[0] = 'X';
  CHECK_THROWS_WITH(decode_snapshot(bad, "x"), Catch::Matchers::ContainsSubstring("magic"));
  bad = b;
  bad[4] = 7;
  CHECK_THROWS_WITH(decode_snapshot(bad, "x"), Catch::Matchers::ContainsSubstring("version"));
  CHECK_THROWS_AS(decode_snapshot(b + "z", "x"), SnapshotError);
  CHECK_THROWS_AS(read_snapshot(scratch("does_not_exist.bqch")), SnapshotError);
}

TEST_CASE("csv rows carry 17 significant digits", "[io]") {
  const fs::path p = scratch("t.csv");
  {
    CsvWriter w(p, {"a", "b"});
    w.row() << 0.1 << "name";
  }
  std::ifstream f(p);
  std::string h, r;
  std::getline(f, h);
  std::getline(f, r);
  CHECK(h == "a,b");
  CHECK(r == "0.10000000000000001,name");
}

TEST_CASE("empty config gives the defaults", "[config]") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.nx1 == 32);
  CHECK(c.nx2 == 32);
  CHECK(c.nu == 0.05);
  CHECK(c.strip.K == 8);
  CHECK(c.deltas == std::vector<double>{0.2, 0.1, 0.05, 0.025});
  CHECK(c.pipeline.gamma_schedule == c.deltas);
  CHECK(c.pipeline.eps == 0.1);
  CHECK_NOTHROW(Cutoff(c.strip));
}

TEST_CASE("minimal config fills the rest", "[config]") {
  const ExperimentConfig c = parse_config("grid: {nx1: 48, nx2: 64}\nphysics: {nu: 0.1}\n");
  CHECK(c.nx1 == 48);
  CHECK(c.nx2 == 64);
  CHECK(c.nu == 0.1);
  CHECK(c.tau == 0.05);
  CHECK(translations_on_grid(Cutoff(c.strip), 64));
}

TEST_CASE("unknown keys are rejected with their line", "[config]") {
  const std::string msg = config_error([] { parse_config("grid:\n  nx1: 64\n  nxx: 64\n", "f.yaml"); });
  CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("f.yaml:3:"));
  CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("nxx"));
  CHECK_FALSE(config_error([] { parse_config("colour: red\n"); }).empty());
}

TEST_CASE("syntax errors carry the line", "[config]") {
  const std::string msg = config_error([] { parse_config("grid:\n  nx1: [64\n", "g.yaml"); });
  CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("g.yaml:"));
  CHECK_FALSE(config_error([] { parse_config("grid: {nx1: many}\n"); }).empty());
}

TEST_CASE("geometry rules are named", "[config]") {
  const std::string ab = config_error([] { parse_config("control: {a: 3.0, b: 1.0}\n"); });
  CHECK_THAT(ab, Catch::Matchers::ContainsSubstring("a < b"));
  // K = 1 gives l_K = 8 pi / 3, far wider than a third of the band
  const std::string lk = config_error([] { parse_config("control: {K: 1, align: false}\n"); });
  CHECK_THAT(lk, Catch::Matchers::ContainsSubstring("l_K"));
  CHECK_THAT(lk, Catch::Matchers::ContainsSubstring("grouped reading"));
  const std::string al = config_error([] { parse_config("grid: {nx2: 24}\ncontrol: {K: 8}\n"); });
  CHECK_THAT(al, Catch::Matchers::ContainsSubstring("align"));
}

TEST_CASE("mode presets build the named fields", "[config]") {
  const ExperimentConfig c = parse_config(
      "grid: {nx1: 16, nx2: 16}\n"
      "initial:\n  w: {modes: [[1, 2, 0.5, odd]]}\n  theta: {modes: [[2, 0, 0.25, even]]}\n  c: 0.3\n");
  auto g = Grid::make(16, 16);
  std::mt19937_64 rng(1);
  const State s = build_state(c.initial, c, g, rng);
  CHECK((s.w - mode_field(g, Parity::odd, 1, 2, 0.5, true)).max_abs() == 0.0);
  CHECK((s.theta - mode_field(g, Parity::even, 2, 0, 0.25)).max_abs() == 0.0);
  CHECK(s.mean_coeff == 0.3);
  CHECK_FALSE(config_error([] { parse_config("initial:\n  w: {modes: [[1, 0, 1.0, odd]]}\n"); }).empty());
}

TEST_CASE("random presets are reproducible from the seed", "[config]") {
  const ExperimentConfig c = parse_config("initial:\n  w: {random: {k1: 4, k2: 4}}\n");
  auto g = Grid::make(c.nx1, c.nx2);
  std::mt19937_64 r1(c.seed), r2(c.seed);
  CHECK(build_state(c.initial, c, g, r1).w.values() == build_state(c.initial, c, g, r2).w.values());
}

TEST_CASE("snapshot paths resolve against the config file", "[config]") {
  const State s = sample_state();
  write_snapshot(scratch("init.bqch"), s);
  const fs::path cfgp = scratch("snap.yaml");
  std::ofstream(cfgp) << "grid: {nx1: 8, nx2: 6}\ncontrol: {align: false, K: 8}\ninitial: {snapshot: init.bqch}\n";
  const ExperimentConfig c = load_config(cfgp);
  auto g = Grid::make(8, 6);
  std::mt19937_64 rng(1);
  CHECK(encode_snapshot(build_state(c.initial, c, g, rng)) == encode_snapshot(s));
}
