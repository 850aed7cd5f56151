#include "epifmqa/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "epifmqa/dataset_io.hpp"
#include "epifmqa/errors.hpp"
#include "epifmqa/report.hpp"

namespace epifmqa::cli {

namespace fs = std::filesystem;

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "parse error";
    if (e.line() > 0) err << " (line " << e.line() << ")";
    err << ": " << e.what() << '\n';
    return exit_code::parse;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return exit_code::infeasible;
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << '\n';
    return exit_code::refused;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return exit_code::budget;
  } catch (const ContractViolation& e) {
    err << "invalid argument: " << e.what() << '\n';
    return exit_code::contract;
  } catch (const nlohmann::json::exception& e) {
    err << "parse error: " << e.what() << '\n';
    return exit_code::parse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace

// gen-data -------------------------------------------------------------------

fs::path default_meta_path(const fs::path& data) {
  fs::path meta = data;
  meta += ".json";
  return meta;
}

int cmd_gen_data(const GenDataOptions& opts, std::ostream& log) {
  const SimulatedDataset sim = sample_dataset(opts.spec);
  write_dataset(opts.out, sim.data);
  const fs::path meta = opts.meta.value_or(default_meta_path(opts.out));
  write_text(meta, metadata_json(opts.spec, sim).dump(2) + "\n");
  log << "wrote " << sim.data.n_samples() << " samples x " << sim.data.n_loci() << " loci to "
      << opts.out.string() << "\n"
      << "causal loci: " << sim.causal.to_string() << "\n"
      << "beta: " << format_real(sim.table.beta)
      << "  prevalence: " << format_real(prevalence(sim.table))
      << "  heritability: " << format_real(heritability(sim.table)) << "\n";
  return exit_code::ok;
}

LocusSet truth_from_metadata(const fs::path& meta) {
  const auto j = read_json(meta);
  return LocusSet(j.at("causal_loci").get<std::vector<std::size_t>>());
}

// detect ---------------------------------------------------------------------

int cmd_detect(const DetectOptions& opts, std::ostream& log) {
  const GenotypeDataset data = read_dataset(opts.data);
  const RunOutput out = run(data, opts.truth, opts.run);
  write_text(opts.result_out,
             result_to_json(out.result, opts.run, opts.record_time).dump(2) + "\n");
  std::ostringstream trace;
  write_trace(trace, out.trace);
  write_text(opts.trace_out, trace.str());
  log << "best loci: " << out.result.best_loci.to_string()
      << "  cer: " << format_real(out.result.best_cer) << "\n";
  if (out.result.success) {
    log << "success: " << (*out.result.success ? "yes" : "no");
    if (out.result.success_iteration) log << " at iteration " << *out.result.success_iteration;
    log << "\n";
  }
  log << "evaluations: " << out.result.evaluations
      << "  repair events: " << out.result.repair_events << "\n";
  return exit_code::ok;
}

// exhaustive -----------------------------------------------------------------

std::string combination_line(std::size_t n, std::size_t d) {
  return "combinations: C(" + std::to_string(n) + ", " + std::to_string(d) +
         ") = " + std::to_string(combination_count(n, d));
}

int cmd_exhaustive(const ExhaustiveOptions& opts, std::ostream& out) {
  const std::size_t d = opts.cfg.d;
  if (opts.count_only || !opts.data) {
    if (!opts.n_loci && !opts.data) {
      throw ContractViolation("exhaustive: need --data or --n-loci");
    }
    std::size_t n = 0;
    if (opts.n_loci) {
      n = *opts.n_loci;
    } else {
      n = read_dataset(*opts.data).n_loci();
    }
    out << combination_line(n, d) << "\n";
    if (!opts.count_only) check_enumeration_cap(n, d, opts.cfg.cap);
    return exit_code::ok;
  }
  const GenotypeDataset data = read_dataset(*opts.data);
  out << combination_line(data.n_loci(), d) << "\n";
  const ExhaustiveResult r = exhaustive_mdr(data, opts.cfg);
  out << "folds: " << opts.cfg.folds << "  seed: " << opts.cfg.seed << "\n";
  out << "rank\tloci\tcvc\tmean_train_cer\tmean_test_cer\n";
  for (std::size_t i = 0; i < r.ranked.size() && i < opts.top; ++i) {
    const auto& m = r.ranked[i];
    out << i + 1 << '\t' << m.loci.to_string() << '\t' << m.cvc << '\t'
        << format_real(m.mean_train_cer) << '\t' << format_real(m.mean_test_cer) << '\n';
  }
  out << "fold\tloci\ttrain_cer\ttest_cer\n";
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto& s = r.folds[f];
    out << f << '\t' << s.loci.to_string() << '\t' << format_real(s.train_cer) << '\t'
        << format_real(s.test_cer) << '\n';
  }
  out << "full_sample_min\tloci=" << r.full_sample.loci.to_string()
      << "\tcer=" << format_real(r.full_sample.cer) << "\n";
  return exit_code::ok;
}

// bench ----------------------------------------------------------------------

void BenchSpec::validate() const {
  if (grid.empty()) throw ContractViolation("bench: grid is empty");
  if (runs_per_cell < 1) throw ContractViolation("bench: runs_per_cell must be >= 1");
}

namespace {

void check_dataset_keys(const nlohmann::json& j) {
  require_known_keys(j,
                     {"maf", "h2", "baseline", "threshold_t", "cases", "controls",
                      "noise_maf_low", "noise_maf_high"},
                     "bench dataset");
}

}  // namespace

BenchSpec parse_bench_spec(const nlohmann::json& j) {
  BenchSpec spec;
  require_known_keys(j, {"grid", "runs_per_cell", "base_seed", "dataset", "run"}, "bench spec");
  for (const auto& c : j.at("grid")) {
    require_known_keys(c, {"n_loci", "d", "model", "dataset", "run"}, "bench cell");
    BenchCell cell;
    cell.n_loci = c.at("n_loci").get<std::size_t>();
    cell.d = c.at("d").get<std::size_t>();
    cell.model = parse_model_kind(c.at("model").get<std::string>());
    if (c.contains("dataset")) {
      cell.dataset_overrides = c.at("dataset");
      check_dataset_keys(cell.dataset_overrides);
    }
    if (c.contains("run")) {
      cell.run_overrides = c.at("run");
      config_from_json(cell.run_overrides);
    }
    spec.grid.push_back(std::move(cell));
  }
  if (j.contains("runs_per_cell")) spec.runs_per_cell = j.at("runs_per_cell").get<std::size_t>();
  if (j.contains("base_seed")) spec.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("dataset")) {
    spec.dataset = j.at("dataset");
    check_dataset_keys(spec.dataset);
  }
  if (j.contains("run")) {
    spec.run = j.at("run");
    config_from_json(spec.run);
  }
  spec.validate();
  return spec;
}

namespace {

DatasetSpec cell_dataset_spec(const BenchSpec& spec, const BenchCell& cell, std::uint64_t seed) {
  nlohmann::json merged = spec.dataset;
  merged.merge_patch(cell.dataset_overrides);
  DatasetSpec ds;
  ds.n_loci = cell.n_loci;
  ds.model.kind = cell.model;
  ds.model.d = cell.d;
  ds.model.maf = merged.value("maf", ds.model.maf);
  ds.model.target_h2 = merged.value("h2", ds.model.target_h2);
  ds.model.baseline = merged.value("baseline", ds.model.baseline);
  ds.model.threshold_t = merged.value("threshold_t", ds.model.threshold_t);
  ds.n_cases = merged.value("cases", ds.n_cases);
  ds.n_controls = merged.value("controls", ds.n_controls);
  ds.noise_maf_low = merged.value("noise_maf_low", ds.noise_maf_low);
  ds.noise_maf_high = merged.value("noise_maf_high", ds.noise_maf_high);
  ds.seed = seed;
  return ds;
}

}  // namespace

void aggregate_cell(BenchCellRow& cell, const std::vector<BenchRunRow>& runs) {
  cell.runs = 0;
  cell.successes = 0;
  cell.failures = 0;
  cell.avg_iteration.reset();
  cell.max_iteration.reset();
  double sum = 0.0;
  for (const auto& r : runs) {
    if (r.cell != cell.cell) continue;
    ++cell.runs;
    if (!r.error.empty()) ++cell.failures;
    if (r.success && r.success_iteration) {
      ++cell.successes;
      sum += static_cast<double>(*r.success_iteration);
      cell.max_iteration = std::max(cell.max_iteration.value_or(0), *r.success_iteration);
    }
  }
  cell.success_rate =
      cell.runs ? static_cast<double>(cell.successes) / static_cast<double>(cell.runs) : 0.0;
  if (cell.successes) cell.avg_iteration = sum / static_cast<double>(cell.successes);
}

BenchReport run_bench(const BenchSpec& spec, std::size_t jobs) {
  spec.validate();
  jobs = std::max<std::size_t>(jobs, 1);
  BenchReport report;
  const std::size_t n_cells = spec.grid.size();

  std::vector<std::optional<SimulatedDataset>> datasets(n_cells);
  std::vector<std::string> dataset_errors(n_cells);
  report.cells.resize(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto& cell = spec.grid[c];
    auto& row = report.cells[c];
    row.cell = c;
    row.n_loci = cell.n_loci;
    row.d = cell.d;
    row.model = cell.model;
    row.dataset_seed = mix_seed(spec.base_seed, c);
    try {
      datasets[c] = sample_dataset(cell_dataset_spec(spec, cell, row.dataset_seed));
      row.truth = datasets[c]->causal;
    } catch (const std::exception& e) {
      dataset_errors[c] = e.what();
    }
  }

  const std::size_t total = n_cells * spec.runs_per_cell;
  report.runs.resize(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const std::size_t c = task / spec.runs_per_cell;
      const std::size_t r = task % spec.runs_per_cell;
      BenchRunRow& row = report.runs[task];
      row.cell = c;
      row.run = r;
      row.seed = mix_seed(report.cells[c].dataset_seed, r + 1);
      if (!datasets[c]) {
        row.error = "dataset: " + dataset_errors[c];
        continue;
      }
      try {
        nlohmann::json overrides = spec.run;
        overrides.merge_patch(spec.grid[c].run_overrides);
        RunConfig cfg = config_from_json(overrides);
        cfg.d = spec.grid[c].d;
        cfg.seed = row.seed;
        const RunOutput out = run(datasets[c]->data, datasets[c]->causal, cfg);
        row.success = out.result.success.value_or(false);
        row.success_iteration = out.result.success_iteration;
        row.best_loci = out.result.best_loci;
        row.best_cer = out.result.best_cer;
        row.repair_events = out.result.repair_events;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < jobs && i < total; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& cell : report.cells) aggregate_cell(cell, report.runs);
  return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
nlohmann::json optional_json(const std::optional<std::size_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json bench_to_json(const BenchReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"cell", c.cell},
                     {"n_loci", c.n_loci},
                     {"d", c.d},
                     {"model", to_string(c.model)},
                     {"runs", c.runs},
                     {"successes", c.successes},
                     {"failures", c.failures},
                     {"success_rate", c.success_rate},
                     {"avg_iteration", optional_json(c.avg_iteration)},
                     {"max_iteration", optional_json(c.max_iteration)},
                     {"dataset_seed", c.dataset_seed},
                     {"truth", c.truth.indices()}});
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"cell", r.cell},
                    {"run", r.run},
                    {"seed", r.seed},
                    {"success", r.success},
                    {"success_iteration", optional_json(r.success_iteration)},
                    {"best_loci", r.best_loci.indices()},
                    {"best_cer", r.best_cer},
                    {"repair_events", r.repair_events},
                    {"error", r.error}});
  }
  return {{"cells", cells}, {"runs", runs}};
}

BenchReport bench_from_json(const nlohmann::json& j) {
  BenchReport report;
  for (const auto& c : j.at("cells")) {
    BenchCellRow row;
    row.cell = c.at("cell").get<std::size_t>();
    row.n_loci = c.at("n_loci").get<std::size_t>();
    row.d = c.at("d").get<std::size_t>();
    row.model = parse_model_kind(c.at("model").get<std::string>());
    row.runs = c.at("runs").get<std::size_t>();
    row.successes = c.at("successes").get<std::size_t>();
    row.failures = c.at("failures").get<std::size_t>();
    row.success_rate = c.at("success_rate").get<double>();
    if (!c.at("avg_iteration").is_null()) row.avg_iteration = c.at("avg_iteration").get<double>();
    if (!c.at("max_iteration").is_null()) {
      row.max_iteration = c.at("max_iteration").get<std::size_t>();
    }
    row.dataset_seed = c.at("dataset_seed").get<std::uint64_t>();
    row.truth = LocusSet(c.at("truth").get<std::vector<std::size_t>>());
    report.cells.push_back(std::move(row));
  }
  for (const auto& r : j.at("runs")) {
    BenchRunRow row;
    row.cell = r.at("cell").get<std::size_t>();
    row.run = r.at("run").get<std::size_t>();
    row.seed = r.at("seed").get<std::uint64_t>();
    row.success = r.at("success").get<bool>();
    if (!r.at("success_iteration").is_null()) {
      row.success_iteration = r.at("success_iteration").get<std::size_t>();
    }
    row.best_loci = LocusSet(r.at("best_loci").get<std::vector<std::size_t>>());
    row.best_cer = r.at("best_cer").get<double>();
    row.repair_events = r.at("repair_events").get<std::size_t>();
    row.error = r.at("error").get<std::string>();
    report.runs.push_back(std::move(row));
  }
  return report;
}

std::string bench_tsv(const BenchReport& report) {
  std::ostringstream out;
  out << "cell\tn_loci\td\tmodel\truns\tsuccesses\tfailures\tsuccess_rate\tavg_iter\tmax_iter\n";
  for (const auto& c : report.cells) {
    out << c.cell << '\t' << c.n_loci << '\t' << c.d << '\t' << to_string(c.model) << '\t'
        << c.runs << '\t' << c.successes << '\t' << c.failures << '\t'
        << format_real(c.success_rate) << '\t'
        << (c.avg_iteration ? format_real(*c.avg_iteration) : "NA") << '\t'
        << (c.max_iteration ? std::to_string(*c.max_iteration) : "NA") << '\n';
  }
  return out.str();
}

std::string bench_table(const BenchReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "N" << std::setw(4) << "d" << std::setw(11) << "model"
      << std::setw(14) << "success rate" << std::setw(11) << "avg iter" << "max iter\n";
  for (const auto& c : report.cells) {
    std::ostringstream rate, avg;
    rate << std::fixed << std::setprecision(1) << c.success_rate;
    if (c.avg_iteration) {
      avg << std::fixed << std::setprecision(1) << *c.avg_iteration;
    } else {
      avg << "-";
    }
    out << std::left << std::setw(8) << c.n_loci << std::setw(4) << c.d << std::setw(11)
        << to_string(c.model) << std::setw(14) << rate.str() << std::setw(11) << avg.str()
        << (c.max_iteration ? std::to_string(*c.max_iteration) : "-") << '\n';
  }
  return out.str();
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("EPIFMQA_JOBS")) {
    try {
      const auto v = std::stoull(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out) {
  const BenchSpec spec = parse_bench_spec(read_json(opts.spec));
  const BenchReport report = run_bench(spec, opts.jobs);
  out << bench_table(report);
  for (const auto& r : report.runs) {
    if (!r.error.empty()) out << "cell " << r.cell << " run " << r.run << " failed: " << r.error << '\n';
  }
  if (opts.out_tsv) write_text(*opts.out_tsv, bench_tsv(report));
  if (opts.out_json) write_text(*opts.out_json, bench_to_json(report).dump(2) + "\n");
  return exit_code::ok;
}

// report ---------------------------------------------------------------------

int cmd_report(const ReportOptions& opts, std::ostream& out) {
  if (!opts.trace && !opts.bench_json) {
    throw ContractViolation("report: need --trace or --bench-json");
  }
  if (opts.trace) {
    std::ifstream in(*opts.trace);
    if (!in) throw std::runtime_error("cannot open " + opts.trace->string());
    const RunTrace trace = parse_trace(in);
    if (trace.records.empty()) throw ParseError("trace: no records", 0);
    std::size_t iterations = 0;
    std::size_t not_d_hot = 0;
    const std::size_t d = trace.records.front().loci.size();
    for (const auto& r : trace.records) {
      iterations = std::max(iterations, r.iteration);
      if (r.loci.size() != d) ++not_d_hot;
    }
    const auto& best = trace.records[trace.best];
    out << "records: " << trace.records.size() << "\n"
        << "iterations: " << iterations << "\n"
        << "best: iteration " << best.iteration << " loci " << best.loci.to_string() << " cer "
        << format_real(best.cer) << "\n"
        << "records with cardinality != " << d << ": " << not_d_hot << "\n";
    if (opts.truth) {
      const auto hit = detect_success(trace, *opts.truth);
      out << "success iteration: " << (hit ? std::to_string(*hit) : "none") << "\n";
    }
  }
  if (opts.bench_json) {
    out << bench_tsv(bench_from_json(read_json(*opts.bench_json)));
  }
  return exit_code::ok;
}

}  // namespace epifmqa::cli
