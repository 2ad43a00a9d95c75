// Acceptance runner: one PASS/FAIL line per criterion. Each criterion is a set of
// experiment runs; it passes when every row of every table passes.
//
//   acceptance              run all criteria
//   acceptance 4 7          run the listed criteria
//   acceptance --report F   also write the lines to F

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cdrp/config.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/experiments.hpp"
#include "cdrp/results.hpp"

using namespace cdrp;
namespace fs = std::filesystem;

namespace {

RunConfig make(const std::string& experiment, const std::vector<std::pair<std::string, std::string>>& settings) {
  RunConfig cfg;
  cfg.experiment = experiment;
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  validate(cfg);
  return cfg;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

void absorb(Outcome& o, const ResultTable& t) {
  if (!t.all_pass()) o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += summary_line(t);
}

Outcome run_all(const std::vector<RunConfig>& cfgs) {
  Outcome o;
  for (const auto& cfg : cfgs) absorb(o, execute_experiment(cfg).results);
  return o;
}

// Rows of `t` whose metric starts with one of the prefixes.
ResultTable select(const ResultTable& t, const std::vector<std::string>& prefixes) {
  ResultTable out(t.experiment());
  for (const auto& r : t.rows())
    for (const auto& p : prefixes)
      if (r.metric.rfind(p, 0) == 0) {
        out.add(r);
        break;
      }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion_1() {
  return run_all({make("ck-check", {{"n_time", "16"}, {"beta", "1"}, {"replicas", "100"}})});
}

Outcome criterion_2() {
  return run_all({make("discrete", {{"n_time", "16"}, {"beta", "1"}, {"replicas", "100"}})});
}

Outcome criterion_3() {
  return run_all({make("discrete", {{"n_time", "8"}, {"beta", "0.7"}, {"paths", "100000"}})});
}

Outcome criterion_4() {
  Outcome o;
  const ResultTable t = execute_experiment(make("moments", {{"beta", "1"}})).results;
  absorb(o, select(t, {"mc_"}));
  return o;
}

Outcome criterion_5() {
  Outcome o;
  // The Monte Carlo part is irrelevant here, so it runs at a token size.
  const ResultTable t =
      execute_experiment(make("moments", {{"beta", "1"}, {"n_time", "16"}, {"replicas", "10"}})).results;
  absorb(o, select(t, {"closed_form_vs_quadrature", "second_moment_scaling"}));
  return o;
}

Outcome criterion_6() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  absorb(o, execute_experiment(make("qvar", {{"beta", "1"}, {"level", "10"}, {"paths", "10000"}})).results);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  absorb(o, execute_experiment(make("qvar", {{"beta", "0"}, {"level", "10"}, {"paths", "10000"}})).results);
  ResultTable runtime("qvar_runtime");
  runtime.add_exact("beta_1_seconds", seconds, 0.0, 300.0, Rule::upper);
  absorb(o, runtime);
  return o;
}

Outcome criterion_7() {
  return run_all({make("martingale", {{"beta", "0.5"}, {"replicas", "10000"}, {"level", "6"}}),
                  make("martingale", {{"beta", "1"}, {"replicas", "10000"}, {"level", "6"}}),
                  make("martingale", {{"beta", "0"}, {"replicas", "1000"}, {"level", "6"}})});
}

Outcome criterion_8() {
  return run_all({make("lemma-check", {{"beta", "1"}, {"replicas", "10000"}})});
}

Outcome criterion_9() {
  return run_all({make("sample", {{"beta", "1"}, {"horizon_T", "4"}, {"paths", "100"}}),
                  make("sample", {{"beta", "0"}, {"horizon_T", "4"}, {"paths", "1000"}})});
}

// Every experiment at a reduced size, run at 1, 4 and 8 threads; all CSV output must
// match byte for byte.
Outcome criterion_10() {
  const std::vector<RunConfig> cfgs{
      make("field", {{"n_time", "64"}, {"beta", "1"}}),
      make("field", {{"n_time", "64"}, {"beta", "1"}, {"scheme", "euler"}}),
      make("sample", {{"n_time", "64"}, {"level", "4"}, {"paths", "64"}, {"beta", "1"}}),
      make("discrete", {{"n_time", "8"}, {"beta", "0.7"}, {"paths", "2000"}, {"replicas", "20"}}),
      make("moments", {{"n_time", "64"}, {"replicas", "200"}}),
      make("qvar", {{"n_time", "256"}, {"level", "4"}, {"paths", "200"}, {"envs", "2"}}),
      make("holder", {{"n_time", "256"}, {"level", "8"}, {"paths", "100"}, {"envs", "2"}}),
      make("martingale", {{"n_time", "64"}, {"level", "4"}, {"replicas", "200"}}),
      make("lemma-check", {{"n_time", "64"}, {"replicas", "200"}}),
      make("ck-check", {{"replicas", "10"}}),
  };
  const fs::path root = fs::temp_directory_path() / "cdrp_determinism";
  fs::remove_all(root);
  Outcome o;
  std::size_t files = 0;
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    std::vector<fs::path> dirs;
    for (unsigned threads : {1u, 4u, 8u}) {
      RunConfig cfg = cfgs[c];
      cfg.threads = threads;
      cfg.out_dir = (root / (std::to_string(c) + "_t" + std::to_string(threads))).string();
      run_experiment(cfg);
      dirs.emplace_back(cfg.out_dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const std::string ref = read_file(entry.path());
      ++files;
      for (std::size_t d = 1; d < dirs.size(); ++d)
        if (read_file(dirs[d] / entry.path().filename()) != ref) {
          o.pass = false;
          o.detail += cfgs[c].experiment + "/" + entry.path().filename().string() + " differs; ";
        }
    }
  }
  o.detail += std::to_string(files) + " CSV files compared at 1, 4 and 8 threads";
  fs::remove_all(root);
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
      {"discrete Chapman-Kolmogorov", criterion_1},
      {"forward/backward agreement", criterion_2},
      {"brute-force oracle", criterion_3},
      {"continuum field moments", criterion_4},
      {"closed form vs quadrature", criterion_5},
      {"quadratic variation", criterion_6},
      {"singularity martingale", criterion_7},
      {"averaged fdd identity", criterion_8},
      {"length rescaling", criterion_9},
      {"thread-count determinism", criterion_10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> which;
  std::string report;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report" && i + 1 < argc) {
      report = argv[++i];
    } else {
      const int k = std::atoi(a.c_str());
      if (k < 1 || k > static_cast<int>(criteria().size())) {
        std::fprintf(stderr, "usage: acceptance [--report FILE] [criterion 1-10 ...]\n");
        return 2;
      }
      which.push_back(static_cast<std::size_t>(k));
    }
  }
  if (!report.empty()) std::ofstream(report, std::ios::trunc);
  if (which.empty())
    for (std::size_t k = 1; k <= criteria().size(); ++k) which.push_back(k);

  bool all = true;
  for (std::size_t k : which) {
    const auto& [name, run] = criteria()[k - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[160];
    std::snprintf(line, sizeof line, "criterion %2zu %s  %-28s %7.1f s  ", k, o.pass ? "PASS" : "FAIL", name.c_str(),
                  secs);
    const std::string text = line + o.detail;
    std::printf("%s\n", text.c_str());
    std::fflush(stdout);
    if (!report.empty()) {
      std::ofstream f(report, std::ios::app);
      f << text << '\n';
    }
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
