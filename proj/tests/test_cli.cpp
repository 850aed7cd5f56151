#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch2/catch_amalgamated.hpp"
#include "epifmqa/cli.hpp"
#include "epifmqa/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace epifmqa;

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(EPIFMQA_CLI_PATH) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / ("epifmqa_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const std::string kGen = "gen-data --model threshold --d 2 --maf 0.4 --h2 0.2 --n-loci 12 "
                         "--cases 300 --controls 300 --seed 7";

}  // namespace

TEST_CASE("gen-data is deterministic and writes metadata", "[cli]") {
  const auto a = scratch() / "gen_a.txt", b = scratch() / "gen_b.txt";
  REQUIRE(run_cli(kGen + " --out " + q(a)).status == 0);
  REQUIRE(run_cli(kGen + " --out " + q(b)).status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(cli::default_meta_path(a)) == slurp(cli::default_meta_path(b)));
  const auto meta = nlohmann::json::parse(slurp(cli::default_meta_path(a)));
  CHECK(meta.contains("prevalence"));
  CHECK(std::abs(meta.at("heritability").get<double>() - 0.2) < 1e-6);
  CHECK(cli::truth_from_metadata(cli::default_meta_path(a)).size() == 2);

  std::istringstream rows(slurp(a));
  std::string line;
  std::size_t count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 601);
}

TEST_CASE("gen-data failure statuses", "[cli]") {
  const auto out = scratch() / "never.txt";
  CHECK(run_cli("gen-data --model threshold --d 3 --h2 0.99 --baseline 0.5 --out " + q(out))
            .status == cli::exit_code::infeasible);
  CHECK(run_cli(kGen + " --draw-budget 10 --out " + q(out)).status == cli::exit_code::budget);
  CHECK(run_cli("gen-data --model quadratic --out " + q(out)).status == cli::exit_code::contract);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("detect writes deterministic result and trace", "[cli]") {
  const auto data = scratch() / "det.txt";
  REQUIRE(run_cli(kGen + " --out " + q(data)).status == 0);
  const std::string base = "detect --data " + q(data) + " --d 2 --max-iterations 150 --epochs 100 "
                           "--sweeps 500 --restarts 4 --seed 3 --truth-meta " +
                           q(cli::default_meta_path(data));
  for (const char* tag : {"1", "2"}) {
    const auto r = scratch() / (std::string("res") + tag + ".json");
    const auto t = scratch() / (std::string("trace") + tag + ".tsv");
    REQUIRE(run_cli(base + " --result " + q(r) + " --trace " + q(t)).status == 0);
  }
  CHECK(slurp(scratch() / "res1.json") == slurp(scratch() / "res2.json"));
  CHECK(slurp(scratch() / "trace1.tsv") == slurp(scratch() / "trace2.tsv"));

  const auto result = nlohmann::json::parse(slurp(scratch() / "res1.json"));
  CHECK(result.at("success").get<bool>());
  CHECK_FALSE(result.contains("wall_time_s"));
  std::ifstream tin(scratch() / "trace1.tsv");
  const auto trace = parse_trace(tin);
  CHECK(trace.records[trace.best].cer == result.at("best_cer").get<double>());

  const auto rep = run_cli("report --trace " + q(scratch() / "trace1.tsv") + " --truth " +
                           cli::truth_from_metadata(cli::default_meta_path(data)).to_string());
  CHECK(rep.status == 0);
  CHECK_FALSE(rep.out.empty());
}

TEST_CASE("one iteration yields the initial design plus two records", "[cli]") {
  const auto data = scratch() / "one.txt";
  REQUIRE(run_cli(kGen + " --out " + q(data)).status == 0);
  const auto t = scratch() / "one.tsv";
  REQUIRE(run_cli("detect --data " + q(data) + " --d 2 --max-iterations 1 --result " +
                  q(scratch() / "one.json") + " --trace " + q(t))
              .status == 0);
  std::ifstream in(t);
  CHECK(parse_trace(in).records.size() == 10 + 2);
  CHECK_FALSE(nlohmann::json::parse(slurp(scratch() / "one.json")).contains("success"));
}

TEST_CASE("detect rejects malformed datasets", "[cli]") {
  const auto bad = scratch() / "noclass.txt";
  std::ofstream(bad) << "X0\tX1\n0\t1\n2\t1\n";
  CHECK(run_cli("detect --data " + q(bad) + " --d 1 --result " + q(scratch() / "x.json") +
                " --trace " + q(scratch() / "x.tsv"))
            .status == cli::exit_code::parse);
  CHECK(run_cli("detect --d 1").status == cli::exit_code::contract);
}

TEST_CASE("exhaustive baseline and counts", "[cli]") {
  auto r = run_cli("exhaustive --n-loci 100 --d 3 --count-only");
  CHECK(r.status == 0);
  CHECK(r.out == "combinations: C(100, 3) = 161700\n");

  r = run_cli("exhaustive --n-loci 1000 --d 5");
  CHECK(r.status == cli::exit_code::refused);
  CHECK(r.out.find("8250291250200") != std::string::npos);

  const auto data = scratch() / "exh.txt";
  REQUIRE(run_cli("gen-data --model threshold --d 2 --h2 0.2 --n-loci 20 --seed 4 --out " +
                  q(data))
              .status == 0);
  const auto truth = cli::truth_from_metadata(cli::default_meta_path(data));
  const auto first = run_cli("exhaustive --data " + q(data) + " --d 2 --seed 1");
  const auto second = run_cli("exhaustive --data " + q(data) + " --d 2 --seed 1");
  REQUIRE(first.status == 0);
  CHECK(first.out == second.out);
  CHECK(first.out.find("\n1\t" + truth.to_string() + "\t10\t") != std::string::npos);
  CHECK(first.out.find("full_sample_min") != std::string::npos);
}

TEST_CASE("bench emits TSV and JSON that report re-renders", "[cli][bench]") {
  const auto spec = scratch() / "bench.json";
  std::ofstream(spec) << R"({
    "grid": [{"n_loci": 10, "d": 2, "model": "threshold"}],
    "runs_per_cell": 1,
    "base_seed": 3,
    "dataset": {"cases": 200, "controls": 200},
    "run": {"max_iterations": 60, "fm": {"epochs": 60}, "anneal": {"sweeps": 300, "restarts": 2}}
  })";
  const auto tsv1 = scratch() / "b1.tsv", tsv2 = scratch() / "b2.tsv";
  const auto js = scratch() / "b1.json";
  REQUIRE(run_cli("bench --spec " + q(spec) + " --jobs 2 --out-tsv " + q(tsv1) + " --out-json " +
                  q(js))
              .status == 0);
  REQUIRE(run_cli("bench --spec " + q(spec) + " --jobs 1 --out-tsv " + q(tsv2)).status == 0);
  CHECK(slurp(tsv1) == slurp(tsv2));

  const auto rep = run_cli("report --bench-json " + q(js));
  CHECK(rep.status == 0);
  CHECK(rep.out == slurp(tsv1));

  const auto report = cli::bench_from_json(nlohmann::json::parse(slurp(js)));
  REQUIRE(report.cells.size() == 1);
  const auto& cell = report.cells[0];
  if (cell.successes == 1) {
    CHECK(cell.avg_iteration == static_cast<double>(*cell.max_iteration));
  } else {
    CHECK_FALSE(cell.avg_iteration.has_value());
  }
}
