// End-to-end checks of the command line binary. Every case shells out to the
// real executable (path injected by the build as NVMDP_CLI_PATH), captures
// stdout/stderr into files under test_cli_tmp/ and asserts on the printed
// key=value lines, the exit code and whatever files the run wrote.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/stat.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvmdp/bench.hpp"
#include "nvmdp/qlearn.hpp"
#include "nvmdp/rng.hpp"

using namespace nvmdp;

namespace {

const std::string kTmp = "test_cli_tmp";

std::string tmp_path(const std::string& name) {
  ::mkdir(kTmp.c_str(), 0755);  // already existing is fine
  return kTmp + "/" + name;
}

bool file_exists(const std::string& path) {
  struct stat st;
  return ::stat(path.c_str(), &st) == 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "cannot open " << path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the binary through /bin/sh so an environment prefix like
// "NVMDP_SEED=42" can be glued onto the front.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int seq = 0;
  const std::string out_path = tmp_path("stdout." + std::to_string(seq));
  const std::string err_path = tmp_path("stderr." + std::to_string(seq));
  ++seq;

  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += "'";
  cmd += NVMDP_CLI_PATH;
  cmd += "' " + args + " > " + out_path + " 2> " + err_path;

  const int raw = std::system(cmd.c_str());
  CliResult r;
  if (raw != -1 && WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// Pulls every whitespace-delimited token containing '=' out of the text, so
// both "v_start=..." lines and "env=tricky reward=... discount=..." lines
// land in the same map. Later occurrences of a key overwrite earlier ones.
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const size_t eq = tok.find('=');
      if (eq != std::string::npos && eq > 0) {
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
    }
  }
  return kv;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<int> parse_int_csv(const std::string& csv) {
  std::vector<int> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int c = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++c;
  }
  return c;
}

// Output paths differ between otherwise identical runs, so drop the lines
// that echo them before comparing stdout byte for byte.
std::string strip_path_lines(const std::string& text) {
  std::ostringstream os;
  for (const std::string& line : split_lines(text)) {
    if (line.rfind("records=", 0) == 0 || line.rfind("csv=", 0) == 0 ||
        line.rfind("plots=", 0) == 0 || line.rfind("tables=", 0) == 0 ||
        line.rfind("report=", 0) == 0 || line.rfind("env=", 0) == 0 ||
        line.rfind("matrices=", 0) == 0) {
      continue;
    }
    os << line << "\n";
  }
  return os.str();
}

std::string g6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Known-good numbers for the deterministic tricky grid, frozen from the
// closed-form trace: 12 moves at reward -10 with the running 0.999 products,
// then the +10 bonus discounted by 0.999^12.
constexpr double kTrickyOptimalReturn = -119.34219505791077;
constexpr double kVanillaOptimalReturn = -89.640838741259174;

}  // namespace

TEST_CASE("dp-vi solves the tricky grid and reports the rollout") {
  const std::string tables = tmp_path("tables.json");
  const CliResult r = run_cli(
      "dp-vi --env tricky --reward deterministic --discount dr-0 --out " + tables);
  CHECK(r.code == 0);

  const auto kv = parse_kv(r.out);
  CHECK(kv.at("env") == "tricky");
  CHECK(kv.at("reward") == "deterministic");
  CHECK(kv.at("discount") == "dr-0");
  CHECK(kv.at("horizon") == "200");
  CHECK(kv.at("rollout_steps") == "12");
  CHECK(kv.at("rollout_reached") == "1");

  const double ret = std::stod(kv.at("rollout_return"));
  CHECK(std::fabs(ret - kTrickyOptimalReturn) < 1e-9);
  // acceptance band for the headline number
  CHECK(std::fabs(ret - (-119.34)) <= 0.01);

  // greedy rollout on a deterministic model recovers the optimal value
  const double v_start = std::stod(kv.at("v_start"));
  CHECK(std::fabs(v_start - ret) < 1e-9);

  const std::vector<int> states = parse_int_csv(kv.at("rollout_states"));
  REQUIRE(states.size() == 13);  // start plus 12 moves
  CHECK(states.front() == 0);
  CHECK(states.back() == 23);

  const std::string cells = kv.at("rollout_cells");
  CHECK(cells.rfind("(1,1)->", 0) == 0);
  REQUIRE(cells.size() >= 5);
  CHECK(cells.substr(cells.size() - 5) == "(8,3)");

  // --out dumps the full tables
  const nlohmann::json doc = nlohmann::json::parse(slurp(tables));
  CHECK(doc.size() == 5);
  CHECK(doc.at("horizon").get<int>() == 200);
  CHECK(doc.at("num_states").get<int>() == 24);
  CHECK(doc.at("num_actions").get<int>() == 4);
  REQUIRE(doc.at("v").size() == 201);
  REQUIRE(doc.at("v").at(0).size() == 24);
  REQUIRE(doc.at("q").size() == 201);
  CHECK(std::fabs(doc.at("v").at(0).at(0).get<double>() - v_start) < 1e-12);
}

TEST_CASE("dp-vi keeps the greedy trail off the boost cells once discounts spike") {
  for (const std::string scheme : {"dr-1", "dr-2"}) {
    CAPTURE(scheme);
    const CliResult r = run_cli(
        "dp-vi --env tricky --reward deterministic --discount " + scheme);
    CHECK(r.code == 0);
    const auto kv = parse_kv(r.out);
    CHECK(kv.at("rollout_steps") == "12");
    CHECK(kv.at("rollout_reached") == "1");
    for (int s : parse_int_csv(kv.at("rollout_states"))) {
      CHECK(s != 2);   // cell (3,1)
      CHECK(s != 11);  // cell (4,2)
    }
  }
}

TEST_CASE("dp-eval prints value summaries for fixed policies") {
  const CliResult uni = run_cli("dp-eval --env vanilla --policy uniform");
  CHECK(uni.code == 0);
  auto kv = parse_kv(uni.out);
  CHECK(kv.at("policy") == "uniform");
  CHECK(kv.at("states") == "24");
  CHECK(kv.at("actions") == "4");
  const double u_start = std::stod(kv.at("v_start"));
  const double u_min = std::stod(kv.at("v_min"));
  const double u_max = std::stod(kv.at("v_max"));
  CHECK(std::isfinite(u_start));
  CHECK(u_min <= u_start);
  CHECK(u_start <= u_max);
  // a random walk on this grid does far worse than the optimal 9-step run
  CHECK(u_start < kVanillaOptimalReturn);

  const CliResult opt = run_cli("dp-eval --env vanilla --policy optimal");
  CHECK(opt.code == 0);
  kv = parse_kv(opt.out);
  CHECK(std::fabs(std::stod(kv.at("v_start")) - kVanillaOptimalReturn) < 1e-9);

  const CliResult bad = run_cli("dp-eval --env vanilla --policy sideways");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("sideways") != std::string::npos);
}

TEST_CASE("exit codes follow the documented contract") {
  // usage problems -> 1
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("dump-env --env tricky").code == 1);  // --out is required
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("dp-vi --help").code == 0);

  // validation problems -> 2
  {
    const CliResult r = run_cli("dp-vi --reward bogus");
    CHECK(r.code == 2);
    CHECK(r.err.find("bogus") != std::string::npos);
  }
  CHECK(run_cli("dp-vi --discount dr-9").code == 2);
  {
    const CliResult r =
        run_cli("qlearn --algorithm sarsa --out " + tmp_path("never.jsonl"));
    CHECK(r.code == 2);
    CHECK(r.err.find("expected") != std::string::npos);
  }
  CHECK(run_cli("qlearn --epsilon 1.5 --episodes 10 --out " +
                tmp_path("never.jsonl"))
            .code == 2);
  CHECK(run_cli("bench --trials 0 --algorithm sarsa --out " +
                tmp_path("never.jsonl"))
            .code == 2);
  CHECK(run_cli("verify --suite bogus").code == 2);
  CHECK(run_cli("verify --seeds 0").code == 2);

  // I/O problems -> 3
  CHECK(run_cli("dp-vi --env " + tmp_path("no_such_env.json")).code == 3);
}

TEST_CASE("config files fill in unset options and flags win") {
  // error paths first
  CHECK(run_cli("qlearn --config " + tmp_path("absent.json")).code == 3);

  const std::string mangled = tmp_path("mangled.json");
  { std::ofstream(mangled) << "{oops"; }
  CHECK(run_cli("qlearn --config " + mangled).code == 3);

  const std::string arr = tmp_path("array.json");
  { std::ofstream(arr) << "[1,2,3]"; }
  CHECK(run_cli("qlearn --config " + arr).code == 2);

  const std::string unknown = tmp_path("unknown_key.json");
  { std::ofstream(unknown) << "{\"episodess\":5}"; }
  {
    const CliResult r = run_cli("qlearn --config " + unknown);
    CHECK(r.code == 2);
    CHECK(r.err.find("episodess") != std::string::npos);
  }

  const std::string badtype = tmp_path("bad_type.json");
  { std::ofstream(badtype) << "{\"episodes\":\"ten\"}"; }
  {
    const CliResult r = run_cli("qlearn --config " + badtype);
    CHECK(r.code == 2);
    CHECK(r.err.find("wrong type") != std::string::npos);
  }

  // a config-only run must reproduce the flag-equivalent run byte for byte
  const std::string cfg = tmp_path("cell.json");
  {
    std::ofstream(cfg) << "{\"algorithm\":\"maxmin-q\",\"n\":2,\"l\":2,"
                          "\"reward\":\"r-svn\",\"discount\":\"dr-1\","
                          "\"episodes\":300,\"eval-every\":100,\"seed\":42}";
  }
  const std::string via_cfg = tmp_path("merge_cfg.jsonl");
  const std::string via_flags = tmp_path("merge_flags.jsonl");
  CHECK(run_cli("qlearn --config " + cfg + " --out " + via_cfg).code == 0);
  CHECK(run_cli("qlearn --algorithm maxmin-q --n 2 --l 2 --reward r-svn "
                "--discount dr-1 --episodes 300 --eval-every 100 --seed 42 "
                "--out " +
                via_flags)
            .code == 0);
  const std::string cfg_bytes = slurp(via_cfg);
  CHECK(cfg_bytes.size() > 0);
  CHECK(cfg_bytes == slurp(via_flags));

  // an explicit flag beats the config value for the same key
  const std::string overridden = tmp_path("merge_override.jsonl");
  const CliResult r =
      run_cli("qlearn --config " + cfg + " --seed 43 --out " + overridden);
  CHECK(r.code == 0);
  CHECK(parse_kv(r.out).at("seed") == "43");
  CHECK(slurp(overridden) != cfg_bytes);
}

TEST_CASE("qlearn runs are reproducible and NVMDP_SEED is a fallback") {
  const std::string base =
      "qlearn --env tricky --algorithm maxmin-q --n 2 --l 2 --reward r-svn "
      "--discount dr-1 --episodes 300 --eval-every 100";
  const std::string d1 = tmp_path("det1.jsonl");
  const std::string d2 = tmp_path("det2.jsonl");
  const std::string d3 = tmp_path("det3.jsonl");
  const std::string d4 = tmp_path("det4.jsonl");
  const std::string d5 = tmp_path("det5.jsonl");

  const CliResult r1 = run_cli(base + " --seed 42 --out " + d1);
  const CliResult r2 = run_cli(base + " --seed 42 --out " + d2);
  CHECK(r1.code == 0);
  CHECK(r2.code == 0);
  const std::string bytes = slurp(d1);
  CHECK(bytes.size() > 0);
  CHECK(bytes == slurp(d2));
  CHECK(strip_path_lines(r1.out) == strip_path_lines(r2.out));

  // NVMDP_SEED substitutes for a missing --seed
  const CliResult r3 = run_cli(base + " --out " + d3, "NVMDP_SEED=42");
  CHECK(r3.code == 0);
  CHECK(slurp(d3) == bytes);

  // but an explicit --seed wins over the environment
  const CliResult r4 = run_cli(base + " --seed 42 --out " + d4, "NVMDP_SEED=99");
  CHECK(r4.code == 0);
  CHECK(slurp(d4) == bytes);

  const CliResult r5 = run_cli(base + " --seed 43 --out " + d5);
  CHECK(r5.code == 0);
  CHECK(slurp(d5) != bytes);

  // the serialized record carries the run's identity
  const std::vector<RunRecord> recs = read_records_jsonl(d1);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].algorithm == "maxmin-q");
  CHECK(recs[0].n == 2);
  CHECK(recs[0].l == 2);
  CHECK(recs[0].reward_scheme == "r-svn");
  CHECK(recs[0].discount_scheme == "dr-1");
  CHECK(recs[0].seed == 42);
  CHECK(recs[0].noise_method == "inverse-cdf");
  CHECK(recs[0].final_trajectory.size() >= 1);

  // deterministic rewards are labeled as such
  const std::string d6 = tmp_path("det6.jsonl");
  CHECK(run_cli("qlearn --env tricky --reward deterministic --discount dr-0 "
                "--algorithm nvmdp-q --episodes 200 --eval-every 100 --seed 7 "
                "--out " +
                d6)
            .code == 0);
  const std::vector<RunRecord> det = read_records_jsonl(d6);
  REQUIRE(det.size() == 1);
  CHECK(det[0].noise_method == "none");
}

TEST_CASE("qlearn emits evaluation curves") {
  const std::string out = tmp_path("curve_run.jsonl");
  const std::string plots = tmp_path("curve_plots");
  const CliResult r = run_cli(
      "qlearn --env tricky --reward deterministic --discount dr-0 "
      "--algorithm nvmdp-q --episodes 20000 --eval-every 500 --seed 1 --out " +
      out + " --plots " + plots);
  CHECK(r.code == 0);

  const auto kv = parse_kv(r.out);
  CHECK(kv.at("algorithm") == "nvmdp-q");
  CHECK(kv.at("converged") == "1");
  // pinned value: the run is fully seeded, so this is a determinism
  // regression check as much as a learning check
  CHECK(kv.at("convergence_episode") == "6500");

  // stdout and the serialized record must tell the same story
  const std::vector<RunRecord> recs = read_records_jsonl(out);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].converged);
  CHECK(recs[0].convergence_episode == 6500);
  CHECK(std::to_string(recs[0].steps) == kv.at("steps"));
  CHECK(std::to_string(recs[0].avoidance_hit ? 1 : 0) == kv.at("avoidance_hit"));

  const std::string index = slurp(plots + "/index.csv");
  const std::vector<std::string> ilines = split_lines(index);
  REQUIRE(ilines.size() == 2);
  CHECK(ilines[0] == "file,algorithm,n,l,reward,discount,seed");
  CHECK(ilines[1] ==
        "curve_nvmdp-q_n1l1_deterministic_dr-0_trial0.csv,nvmdp-q,1,1,"
        "deterministic,dr-0,1");

  const std::vector<std::string> curve = split_lines(
      slurp(plots + "/curve_nvmdp-q_n1l1_deterministic_dr-0_trial0.csv"));
  REQUIRE(curve.size() == 41);  // header plus one row per evaluation
  CHECK(curve[0] == "episode,return,steps");
  CHECK(curve[1].rfind("500,", 0) == 0);

  long ep = 0;
  double ret = 0.0;
  int steps = 0;
  char comma;
  std::istringstream last(curve.back());
  last >> ep >> comma >> ret >> comma >> steps;
  CHECK(ep == 20000);
  CHECK(std::fabs(ret - kTrickyOptimalReturn) < 1e-9);
  CHECK(steps == 12);

  // the evaluation right before the reported convergence episode had not
  // yet found the 12-step route, the one at it has
  for (const std::string& line : curve) {
    if (line.rfind("6000,", 0) == 0) {
      CHECK(line.substr(line.size() - 3) != ",12");
    }
    if (line.rfind("6500,", 0) == 0) {
      CHECK(line.substr(line.size() - 3) == ",12");
    }
  }
}

TEST_CASE("bench aggregates trials into the summary row") {
  const std::string args =
      "bench --algorithm maxmin-q --n 2 --l 2 --reward r-svn --discount dr-0 "
      "--trials 3 --episodes 400 --eval-every 100";
  const std::string j1 = tmp_path("bench1.jsonl");
  const std::string c1 = tmp_path("bench1.csv");
  const std::string p1 = tmp_path("bench1_plots");

  const CliResult r1 = run_cli(args + " --seed 5 --out " + j1 + " --csv " + c1 +
                               " --plots " + p1);
  CHECK(r1.code == 0);

  const std::vector<RunRecord> recs = read_records_jsonl(j1);
  REQUIRE(recs.size() == 3);
  for (size_t k = 0; k < recs.size(); ++k) {
    CHECK(recs[k].seed == Rng::derive_seed(5, k));
    CHECK(recs[k].algorithm == "maxmin-q");
    CHECK(recs[k].reward_scheme == "r-svn");
    CHECK(recs[k].discount_scheme == "dr-0");
  }

  // the stdout summary must match an independent aggregation of the records
  const BenchmarkRow row = aggregate_records(recs);
  const auto kv = parse_kv(r1.out);
  CHECK(kv.at("algorithm") == row.algorithm);
  CHECK(kv.at("parameters") == row.parameters);
  CHECK(kv.at("parameters") == "n=2,l=2");
  CHECK(kv.at("trials") == std::to_string(row.trials));
  CHECK(kv.at("converged_trials") == std::to_string(row.converged_count));
  if (row.has_mean_episode) {
    CHECK(std::stod(kv.at("mean_convergence_episode")) ==
          doctest::Approx(row.mean_convergence_episode).epsilon(1e-14));
  } else {
    CHECK(kv.at("mean_convergence_episode") == "--");
  }
  CHECK(std::stod(kv.at("mean_steps_thousands")) ==
        doctest::Approx(row.mean_steps_thousands).epsilon(1e-14));
  CHECK(std::stod(kv.at("mean_pre_convergence_std")) ==
        doctest::Approx(row.mean_pre_convergence_std).epsilon(1e-14));
  CHECK(kv.at("avoidance_count") == std::to_string(row.avoidance_count));

  // CSV table: fixed header, then the row rebuilt with the same %.6g shape
  const std::vector<std::string> csv = split_lines(slurp(c1));
  REQUIRE(csv.size() == 2);
  CHECK(csv[0] == "Algorithm,Parameters,Reward,Discount,Episodes,Steps(1e3),std,Count");
  std::string want = row.algorithm + "," + row.parameters + "," +
                     row.reward_scheme + "," + row.discount_scheme + ",";
  want += row.has_mean_episode ? g6(row.mean_convergence_episode) : "--";
  want += "," + g6(row.mean_steps_thousands) + "," +
          g6(row.mean_pre_convergence_std) + "," +
          std::to_string(row.avoidance_count);
  CHECK(csv[1] == want);

  // one curve file per trial plus the manifest
  const std::vector<std::string> ilines = split_lines(slurp(p1 + "/index.csv"));
  REQUIRE(ilines.size() == 4);
  CHECK(ilines[1].rfind("curve_maxmin-q_n2l2_r-svn_dr-0_trial0.csv,", 0) == 0);
  for (int k = 0; k < 3; ++k) {
    CHECK(file_exists(p1 + "/curve_maxmin-q_n2l2_r-svn_dr-0_trial" +
                      std::to_string(k) + ".csv"));
  }

  // the same invocation must reproduce every artifact byte for byte
  const std::string j2 = tmp_path("bench2.jsonl");
  const std::string c2 = tmp_path("bench2.csv");
  const std::string p2 = tmp_path("bench2_plots");
  const CliResult r2 = run_cli(args + " --seed 5 --out " + j2 + " --csv " + c2 +
                               " --plots " + p2);
  CHECK(r2.code == 0);
  CHECK(slurp(j2) == slurp(j1));
  CHECK(slurp(c2) == slurp(c1));
  CHECK(slurp(p2 + "/index.csv") == slurp(p1 + "/index.csv"));
  CHECK(slurp(p2 + "/curve_maxmin-q_n2l2_r-svn_dr-0_trial0.csv") ==
        slurp(p1 + "/curve_maxmin-q_n2l2_r-svn_dr-0_trial0.csv"));
  CHECK(strip_path_lines(r2.out) == strip_path_lines(r1.out));

  // NVMDP_SEED stands in for --seed here too
  const std::string j3 = tmp_path("bench3.jsonl");
  const CliResult r3 = run_cli(args + " --out " + j3, "NVMDP_SEED=5");
  CHECK(r3.code == 0);
  CHECK(slurp(j3) == slurp(j1));
}

TEST_CASE("bench with zero trials still writes the scaffolding") {
  const std::string j = tmp_path("empty.jsonl");
  const std::string c = tmp_path("empty.csv");
  const std::string p = tmp_path("empty_plots");
  const CliResult r = run_cli("bench --algorithm nvmdp-q --trials 0 --out " + j +
                              " --csv " + c + " --plots " + p);
  CHECK(r.code == 0);
  CHECK(r.out.find("trials=0 (no records)") != std::string::npos);
  CHECK(slurp(j).empty());
  const std::vector<std::string> csv = split_lines(slurp(c));
  REQUIRE(csv.size() == 1);
  CHECK(csv[0] == "Algorithm,Parameters,Reward,Discount,Episodes,Steps(1e3),std,Count");
  const std::vector<std::string> idx = split_lines(slurp(p + "/index.csv"));
  REQUIRE(idx.size() == 1);
  CHECK(idx[0] == "file,algorithm,n,l,reward,discount,seed");
}

TEST_CASE("verify subcommand reports suite results") {
  const std::string report = tmp_path("verify_selectors.json");
  const CliResult one =
      run_cli("verify --suite selectors --seeds 2 --seed 7 --out " + report);
  CHECK(one.code == 0);
  CHECK(one.out.find("suite=selectors pass=1") != std::string::npos);
  CHECK(one.out.find("verify_pass=1") != std::string::npos);

  const nlohmann::json doc = nlohmann::json::parse(slurp(report));
  CHECK(doc.at("pass").get<bool>());
  CHECK(doc.at("seed").get<int>() == 7);
  CHECK(doc.at("seeds").get<int>() == 2);
  REQUIRE(doc.at("suites").size() == 1);
  CHECK(doc.at("suites").at("selectors").at("pass").get<bool>());
  CHECK(doc.at("suites").at("selectors").at("broken_rejected").get<bool>());

  // --suite all runs the full battery; without --out the report goes to stdout
  const CliResult all = run_cli("verify --suite all --seeds 3 --seed 11");
  CHECK(all.code == 0);
  CHECK(count_occurrences(all.out, "suite=") == 6);
  for (const std::string& line : split_lines(all.out)) {
    if (line.rfind("suite=", 0) == 0) {
      CHECK(line.substr(line.size() - 7) == " pass=1");
    }
  }
  CHECK(all.out.find("verify_pass=1") != std::string::npos);
  CHECK(all.out.find("\"suites\"") != std::string::npos);
}

TEST_CASE("dump-env round trips through the JSON loader") {
  const std::string env_json = tmp_path("tricky_dr1.json");
  const std::string mdir = tmp_path("matrices");
  const CliResult dump = run_cli(
      "dump-env --env tricky --reward deterministic --discount dr-1 --out " +
      env_json + " --matrix-dir " + mdir + " --matrix-t 3");
  CHECK(dump.code == 0);
  CHECK(dump.out.find("env=" + env_json) != std::string::npos);
  CHECK(dump.out.find("matrices=" + mdir) != std::string::npos);
  for (const std::string name : {"P", "Pi", "W", "M", "J", "K", "L", "U", "r"}) {
    CHECK(file_exists(mdir + "/" + name + ".csv"));
  }

  const nlohmann::json doc = nlohmann::json::parse(slurp(env_json));
  CHECK(doc.at("horizon").get<int>() == 200);
  CHECK(doc.at("num_states").get<int>() == 24);
  CHECK(doc.at("num_actions").get<int>() == 4);

  // solving the dumped file must match solving the named environment
  const CliResult direct =
      run_cli("dp-vi --env tricky --reward deterministic --discount dr-1");
  const CliResult loaded = run_cli("dp-vi --env " + env_json);
  CHECK(direct.code == 0);
  CHECK(loaded.code == 0);
  const auto kv_direct = parse_kv(direct.out);
  const auto kv_loaded = parse_kv(loaded.out);
  CHECK(kv_loaded.at("rollout_steps") == "12");
  CHECK(kv_loaded.at("rollout_reached") == "1");
  CHECK(std::fabs(std::stod(kv_loaded.at("v_start")) -
                  std::stod(kv_direct.at("v_start"))) < 1e-12);
  CHECK(kv_loaded.at("rollout_states") == kv_direct.at("rollout_states"));
  // cell names are only printed for the named gridworlds
  CHECK(kv_loaded.count("rollout_cells") == 0);

  CHECK(run_cli("dump-env --env tricky --out " + tmp_path("e.json") +
                " --matrix-dir " + tmp_path("m2") + " --matrix-policy bogus")
            .code == 2);
}
