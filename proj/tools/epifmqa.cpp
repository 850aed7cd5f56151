// epifmqa: epistasis detection with FM surrogates annealed under an MDR objective.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "epifmqa/cli.hpp"
#include "epifmqa/errors.hpp"

namespace cli = epifmqa::cli;

namespace {

void add_run_flags(CLI::App* cmd, epifmqa::RunConfig& run) {
  cmd->add_option("--d", run.d, "Interaction order (loci per candidate)")->required();
  cmd->add_option("--lambda", run.lambda, "Cardinality penalty weight")->capture_default_str();
  cmd->add_option("--n-initial", run.n_initial, "Random initial d-hot points")
      ->capture_default_str();
  cmd->add_option("--max-iterations", run.max_iterations, "FMQA iterations")
      ->capture_default_str();
  cmd->add_option("--neighbors", run.neighbors_per_iteration, "Swap neighbors per iteration")
      ->capture_default_str();
  cmd->add_option("--k", run.latent_k, "FM latent dimension")->capture_default_str();
  cmd->add_option("--epochs", run.fm.epochs, "FM training epochs")->capture_default_str();
  cmd->add_option("--learning-rate", run.fm.learning_rate, "FM SGD step")->capture_default_str();
  cmd->add_option("--init-scale", run.fm.init_scale, "Std-dev of latent factor init")
      ->capture_default_str();
  cmd->add_option("--l2", run.fm.l2, "FM L2 weight")->capture_default_str();
  cmd->add_option("--sweeps", run.anneal.sweeps, "Annealing sweeps per restart")
      ->capture_default_str();
  cmd->add_option("--beta-initial", run.anneal.beta_initial)->capture_default_str();
  cmd->add_option("--beta-final", run.anneal.beta_final)->capture_default_str();
  cmd->add_option("--restarts", run.anneal.restarts)->capture_default_str();
  cmd->add_option("--seed", run.seed, "Run seed")->capture_default_str();
  cmd->add_flag("--warm-start", run.warm_start, "Reuse the previous FM as initialization");
  cmd->add_flag("--dedupe", run.dedupe, "Do not re-add repeated locus sets to the surrogate");
  cmd->add_flag("--stop-on-success", run.stop_on_success,
                "Stop after the iteration that first evaluates the truth");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order epistasis detection with FMQA and MDR"};
  app.require_subcommand(1);

  // gen-data
  cli::GenDataOptions gen;
  std::string gen_model = "additive";
  std::string gen_causal;
  std::string gen_meta;
  auto* gen_cmd = app.add_subcommand("gen-data", "Simulate a case-control dataset");
  gen_cmd->add_option("--model", gen_model, "additive | threshold")->capture_default_str();
  gen_cmd->add_option("--d", gen.spec.model.d, "Interaction order")->capture_default_str();
  gen_cmd->add_option("--maf", gen.spec.model.maf, "Causal minor-allele frequency")
      ->capture_default_str();
  gen_cmd->add_option("--h2", gen.spec.model.target_h2, "Target heritability")
      ->capture_default_str();
  gen_cmd->add_option("--baseline", gen.spec.model.baseline, "Penetrance at zero risk")
      ->capture_default_str();
  gen_cmd->add_option("--threshold-t", gen.spec.model.threshold_t,
                      "Threshold model cutoff (0 = d + 1)")
      ->capture_default_str();
  gen_cmd->add_option("--n-loci", gen.spec.n_loci, "Total loci")->capture_default_str();
  gen_cmd->add_option("--cases", gen.spec.n_cases)->capture_default_str();
  gen_cmd->add_option("--controls", gen.spec.n_controls)->capture_default_str();
  gen_cmd->add_option("--causal", gen_causal, "Comma-separated causal loci (default random)");
  gen_cmd->add_option("--noise-maf-low", gen.spec.noise_maf_low)->capture_default_str();
  gen_cmd->add_option("--noise-maf-high", gen.spec.noise_maf_high)->capture_default_str();
  gen_cmd->add_option("--draw-budget", gen.spec.draw_budget)->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset output path")->required();
  gen_cmd->add_option("--meta", gen_meta, "Metadata path (default <out>.json)");

  // detect
  cli::DetectOptions det;
  std::string det_truth;
  std::string det_truth_meta;
  auto* det_cmd = app.add_subcommand("detect", "Run FMQA on a dataset");
  det_cmd->add_option("--data", det.data, "Dataset file")->required();
  add_run_flags(det_cmd, det.run);
  det_cmd->add_option("--truth", det_truth, "Comma-separated ground-truth loci");
  det_cmd->add_option("--truth-meta", det_truth_meta, "Read ground truth from a metadata file");
  det_cmd->add_option("--result", det.result_out, "Result JSON path")->required();
  det_cmd->add_option("--trace", det.trace_out, "Trace TSV path")->required();
  det_cmd->add_flag("--record-time", det.record_time, "Include wall time in the result");

  // exhaustive
  cli::ExhaustiveOptions exh;
  std::string exh_data;
  std::size_t exh_n = 0;
  auto* exh_cmd = app.add_subcommand("exhaustive", "Exhaustive MDR baseline with CV");
  exh_cmd->add_option("--data", exh_data, "Dataset file");
  exh_cmd->add_option("--n-loci", exh_n, "Loci count when only counting");
  exh_cmd->add_option("--d", exh.cfg.d, "Interaction order")->required();
  exh_cmd->add_option("--folds", exh.cfg.folds)->capture_default_str();
  exh_cmd->add_option("--seed", exh.cfg.seed)->capture_default_str();
  exh_cmd->add_option("--cap", exh.cfg.cap, "Maximum combinations to enumerate")
      ->capture_default_str();
  exh_cmd->add_option("--top", exh.top, "Ranked models to print")->capture_default_str();
  exh_cmd->add_flag("--count-only", exh.count_only, "Only print C(N, d)");

  // bench
  cli::BenchOptions bench;
  bench.jobs = cli::default_jobs();
  std::string bench_tsv, bench_json;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark grid");
  bench_cmd->add_option("--spec", bench.spec, "BenchSpec JSON")->required();
  bench_cmd->add_option("--out-tsv", bench_tsv);
  bench_cmd->add_option("--out-json", bench_json);
  bench_cmd->add_option("--jobs", bench.jobs, "Concurrent runs (env EPIFMQA_JOBS)")
      ->capture_default_str();

  // report
  cli::ReportOptions rep;
  std::string rep_trace, rep_truth, rep_bench;
  auto* rep_cmd = app.add_subcommand("report", "Summarize emitted traces or bench JSON");
  rep_cmd->add_option("--trace", rep_trace);
  rep_cmd->add_option("--truth", rep_truth);
  rep_cmd->add_option("--bench-json", rep_bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return cli::exit_code::contract;
  }

  return cli::guarded(
      [&]() -> int {
        if (*gen_cmd) {
          gen.spec.model.kind = epifmqa::parse_model_kind(gen_model);
          if (!gen_causal.empty()) gen.spec.causal = epifmqa::LocusSet::parse(gen_causal);
          if (!gen_meta.empty()) gen.meta = gen_meta;
          return cli::cmd_gen_data(gen, std::cout);
        }
        if (*det_cmd) {
          if (!det_truth.empty()) det.truth = epifmqa::LocusSet::parse(det_truth);
          if (!det_truth_meta.empty()) det.truth = cli::truth_from_metadata(det_truth_meta);
          return cli::cmd_detect(det, std::cout);
        }
        if (*exh_cmd) {
          if (!exh_data.empty()) exh.data = exh_data;
          if (exh_n > 0) exh.n_loci = exh_n;
          return cli::cmd_exhaustive(exh, std::cout);
        }
        if (*bench_cmd) {
          if (!bench_tsv.empty()) bench.out_tsv = bench_tsv;
          if (!bench_json.empty()) bench.out_json = bench_json;
          return cli::cmd_bench(bench, std::cout);
        }
        if (!rep_trace.empty()) rep.trace = rep_trace;
        if (!rep_truth.empty()) rep.truth = epifmqa::LocusSet::parse(rep_truth);
        if (!rep_bench.empty()) rep.bench_json = rep_bench;
        return cli::cmd_report(rep, std::cout);
      },
      std::cerr);
}
