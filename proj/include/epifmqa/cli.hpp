#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epifmqa/fmqa.hpp"
#include "epifmqa/mdr.hpp"
#include "epifmqa/simdata.hpp"
#include "json.hpp"

namespace epifmqa::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;  // I/O and other runtime errors
inline constexpr int parse = 2;
inline constexpr int infeasible = 3;
inline constexpr int refused = 4;
inline constexpr int budget = 5;
inline constexpr int contract = 6;  // invalid arguments
}  // namespace exit_code

/// Runs `body`, mapping library exceptions onto exit codes and printing the
/// message to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

// gen-data -------------------------------------------------------------------

struct GenDataOptions {
  DatasetSpec spec;
  std::filesystem::path out;
  /// Defaults to `<out>.json`.
  std::optional<std::filesystem::path> meta;
};

int cmd_gen_data(const GenDataOptions& opts, std::ostream& log);

std::filesystem::path default_meta_path(const std::filesystem::path& data);

/// Ground-truth loci recorded in a metadata sidecar.
LocusSet truth_from_metadata(const std::filesystem::path& meta);

// detect ---------------------------------------------------------------------

struct DetectOptions {
  std::filesystem::path data;
  RunConfig run;
  std::optional<LocusSet> truth;
  std::filesystem::path result_out;
  std::filesystem::path trace_out;
  bool record_time = false;
};

int cmd_detect(const DetectOptions& opts, std::ostream& log);

// exhaustive -----------------------------------------------------------------

struct ExhaustiveOptions {
  /// Without data only the combination count is reported (needs n_loci).
  std::optional<std::filesystem::path> data;
  std::optional<std::size_t> n_loci;
  ExhaustiveConfig cfg;
  std::size_t top = 10;
  bool count_only = false;
};

int cmd_exhaustive(const ExhaustiveOptions& opts, std::ostream& out);

/// "combinations: C(100, 3) = 161700"
std::string combination_line(std::size_t n, std::size_t d);

// bench ----------------------------------------------------------------------

struct BenchCell {
  std::size_t n_loci = 100;
  std::size_t d = 3;
  ModelKind model = ModelKind::additive;
  nlohmann::json dataset_overrides = nlohmann::json::object();
  nlohmann::json run_overrides = nlohmann::json::object();
};

struct BenchSpec {
  std::vector<BenchCell> grid;
  std::size_t runs_per_cell = 10;
  std::uint64_t base_seed = 1;
  nlohmann::json dataset = nlohmann::json::object();
  nlohmann::json run = nlohmann::json::object();

  void validate() const;
};

BenchSpec parse_bench_spec(const nlohmann::json& j);

struct BenchRunRow {
  std::size_t cell = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<std::size_t> success_iteration;
  LocusSet best_loci;
  double best_cer = 0.0;
  std::size_t repair_events = 0;
  std::string error;

  bool operator==(const BenchRunRow&) const = default;
};

struct BenchCellRow {
  std::size_t cell = 0;
  std::size_t n_loci = 0;
  std::size_t d = 0;
  ModelKind model = ModelKind::additive;
  std::size_t runs = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double success_rate = 0.0;
  /// Over successful runs only; absent when nothing succeeded.
  std::optional<double> avg_iteration;
  std::optional<std::size_t> max_iteration;
  std::uint64_t dataset_seed = 0;
  LocusSet truth;

  bool operator==(const BenchCellRow&) const = default;
};

struct BenchReport {
  std::vector<BenchCellRow> cells;
  std::vector<BenchRunRow> runs;

  bool operator==(const BenchReport&) const = default;
};

BenchReport run_bench(const BenchSpec& spec, std::size_t jobs);

/// Success statistics over the run rows of one cell.
void aggregate_cell(BenchCellRow& cell, const std::vector<BenchRunRow>& runs);

nlohmann::json bench_to_json(const BenchReport& report);
BenchReport bench_from_json(const nlohmann::json& j);
std::string bench_tsv(const BenchReport& report);
std::string bench_table(const BenchReport& report);

/// Jobs from the EPIFMQA_JOBS environment variable, else 1.
std::size_t default_jobs();

struct BenchOptions {
  std::filesystem::path spec;
  std::optional<std::filesystem::path> out_tsv;
  std::optional<std::filesystem::path> out_json;
  std::size_t jobs = 1;
};

int cmd_bench(const BenchOptions& opts, std::ostream& out);

// report ---------------------------------------------------------------------

struct ReportOptions {
  std::optional<std::filesystem::path> trace;
  std::optional<LocusSet> truth;
  std::optional<std::filesystem::path> bench_json;
};

/// Re-reads emitted traces or bench JSON and prints summaries; bench JSON is
/// re-rendered as the same TSV that `bench` writes.
int cmd_report(const ReportOptions& opts, std::ostream& out);

}  // namespace epifmqa::cli
