#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "cdrp/config.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/experiments.hpp"
#include "cdrp/results.hpp"
#include "cdrp/snapshot.hpp"

using namespace cdrp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cdrp_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ContinuumFieldSlice small_field(Scheme scheme) {
  const LatticeSpec spec = LatticeSpec::continuum(32);
  const auto env = std::make_shared<const Environment>(
      Environment::generate(spec, {4, 0, StreamPurpose::environment}, Disorder::gaussian));
  return scheme == Scheme::transfer_matrix ? build_field_transfer_matrix(env, 1.0) : build_field_euler_mild(env, 1.0);
}

}  // namespace

TEST_CASE("result rules") {
  CHECK(ResultRow{"m", 1.05, 1.0, 0.0, true, 0.1, Rule::abs}.pass());
  CHECK_FALSE(ResultRow{"m", 1.2, 1.0, 0.0, true, 0.1, Rule::abs}.pass());
  CHECK(ResultRow{"m", 1.3, 1.0, 0.1, false, 4.0, Rule::se}.pass());
  CHECK_FALSE(ResultRow{"m", 1.5, 1.0, 0.1, false, 4.0, Rule::se}.pass());
  CHECK(ResultRow{"m", 0.7, 0.5, 0.0, true, 0.9, Rule::range}.pass());
  CHECK_FALSE(ResultRow{"m", 0.95, 0.5, 0.0, true, 0.9, Rule::range}.pass());
  CHECK_FALSE(ResultRow{"m", 1e-12, 0.0, 0.0, true, 1e-12, Rule::upper}.pass());
  CHECK(ResultRow{"m", 0.96, 1.0, 0.0, true, 0.05, Rule::rel}.pass());
  CHECK_FALSE(ResultRow{"m", std::nan(""), 1.0, 0.0, true, 1.0, Rule::abs}.pass());
  CHECK(ResultRow{"m", std::nan(""), 1.0, 0.0, true, 1.0, Rule::info}.pass());
}

TEST_CASE("result CSV") {
  ResultTable empty("nothing");
  CHECK(to_csv(empty) == "metric,estimate,target,stderr,exact,tolerance,rule,pass\r\n");
  CHECK(summary_line(empty) == "nothing: PASS (0 rows)");

  ResultTable one("exp");
  one.add_exact("third", 1.0 / 3.0, 0.0, 1e-12, Rule::upper);
  const std::string csv = to_csv(one);
  CHECK(csv.find("third,0.33333333333333331,,,1,1e-12,upper,FAIL\r\n") != std::string::npos);
  CHECK(std::stod("0.33333333333333331") == 1.0 / 3.0);
  CHECK(summary_line(one) == "exp: FAIL (1 of 1 rows failed: third)");

  ResultTable stat("s");
  stat.add_stat("a,b", 0.5, 0.01, 0.5, 4.0, Rule::se);
  CHECK(to_csv(stat).find("\"a,b\",0.5,0.5,0.01,0,4,se,PASS") != std::string::npos);
  CHECK(format_number(std::nan("")) == "");
  CHECK(format_number(0.1, false) == "0.1");
  CHECK(format_number(0.1) == "0.10000000000000001");

  CsvTable t{{"x", "say"}, {}};
  t.add({"1", "he said \"hi\""});
  CHECK(to_csv(t) == "x,say\r\n1,\"he said \"\"hi\"\"\"\r\n");
  CHECK_THROWS_AS(write_csv(t, "/nonexistent-dir/x.csv"), IoError);
}

TEST_CASE("snapshot round trip") {
  for (Scheme scheme : {Scheme::transfer_matrix, Scheme::euler}) {
    const ContinuumFieldSlice a = small_field(scheme);
    const fs::path p = scratch(scheme == Scheme::euler ? "euler.snap" : "tm.snap");
    write_snapshot(a, p.string());
    const ContinuumFieldSlice b = read_snapshot(p.string());
    CHECK(b.scheme == scheme);
    CHECK(b.beta == 1.0);
    CHECK(b.seed == 4);
    CHECK(b.spec.n_time == 32);
    for (std::uint32_t t = 1; t <= 32; ++t)
      for (std::int64_t s = -a.spec.half_sites(); s <= a.spec.half_sites(); ++s)
        REQUIRE(b.density(t, s) == a.density(t, s));
  }
}

TEST_CASE("corrupt snapshots are rejected") {
  const fs::path p = scratch("good.snap");
  write_snapshot(small_field(Scheme::transfer_matrix), p.string());
  const std::string good = slurp(p);
  const fs::path q = scratch("bad.snap");

  std::string bad = good;
  bad[0] = 'X';
  spit(q, bad);
  CHECK_THROWS_AS(read_snapshot(q.string()), FormatError);

  bad = good;
  bad[4] = 9;
  spit(q, bad);
  CHECK_THROWS_AS(read_snapshot(q.string()), FormatError);

  spit(q, good.substr(0, 20));
  CHECK_THROWS_AS(read_snapshot(q.string()), IntegrityError);

  spit(q, good.substr(0, good.size() - 8));
  CHECK_THROWS_AS(read_snapshot(q.string()), IntegrityError);

  spit(q, good + "x");
  CHECK_THROWS_AS(read_snapshot(q.string()), IntegrityError);

  // A negative density at the end of the payload.
  bad = good;
  const double neg = -1.0;
  std::memcpy(bad.data() + bad.size() - 8, &neg, 8);
  spit(q, bad);
  CHECK_THROWS_AS(read_snapshot(q.string()), IntegrityError);

  FieldBuildOptions fo;
  fo.keep_every = 2;
  const LatticeSpec spec = LatticeSpec::continuum(8);
  const auto env = std::make_shared<const Environment>(Environment::generate(spec, {1, 0}, Disorder::gaussian));
  CHECK_THROWS_AS(write_snapshot(build_field_transfer_matrix(env, 1.0, 0, 0, fo), q.string()), ConfigError);
  CHECK_THROWS_AS(write_snapshot(build_field_transfer_matrix(env, 1.0, 2, 0), q.string()), ConfigError);
}

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config_text(
      "# comment\nexperiment = qvar\nbeta=0.5\n\nseed=42\ndisorder_distribution=rademacher\nlevel=6\npin=free\n");
  CHECK(cfg.experiment == "qvar");
  CHECK(*cfg.beta == 0.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.dist == Disorder::rademacher);
  CHECK(*cfg.level == 6);
  CHECK_FALSE(cfg.pin);
  CHECK_NOTHROW(validate(cfg));
  CHECK(describe(cfg).at("beta") == "0.5");

  auto message = [](auto&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([] { parse_config_text("colour=blue\n"); }).find("'colour'") != std::string::npos);
  CHECK(message([] { parse_config_text("beta=-1\n"); }).find("'beta'") != std::string::npos);
  CHECK(message([] { parse_config_text("n_time=abc\n"); }).find("'n_time'") != std::string::npos);
  CHECK(message([] { parse_config_text("dist=cauchy\n"); }).find("'dist'") != std::string::npos);
  CHECK(message([] { parse_config_text("just words\n"); }).find("line 1") != std::string::npos);

  RunConfig c;
  c.experiment = "bogus";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.experiment = "qvar";
  c.pin = 0.2;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.pin.reset();
  c.space_halfwidth_L = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/cfg.txt"), ConfigError);
}

TEST_CASE("experiments write their tables") {
  RunConfig cfg;
  cfg.experiment = "ck-check";
  cfg.replicas = 5;
  cfg.out_dir = scratch("ck").string();
  const ResultTable t = run_experiment(cfg);
  CHECK(t.all_pass());
  CHECK(exit_status(t) == 0);
  CHECK(fs::exists(fs::path(cfg.out_dir) / "ck-check_results.csv"));
  const std::string first = slurp(fs::path(cfg.out_dir) / "ck-check_results.csv");
  run_experiment(cfg);
  CHECK(slurp(fs::path(cfg.out_dir) / "ck-check_results.csv") == first);
}

TEST_CASE("capacity errors carry sizing advice") {
  RunConfig cfg;
  cfg.experiment = "qvar";
  cfg.level = 4;
  cfg.n_time = 4096;
  cfg.memory_budget_mb = 1;
  cfg.paths = 4;
  try {
    execute_experiment(cfg);
    FAIL("expected a capacity error");
  } catch (const CapacityError& e) {
    CHECK(std::string(e.what()).find("memory_budget_mb") != std::string::npos);
  }
}
