#include "epifmqa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "epifmqa/errors.hpp"

namespace epifmqa {

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace(std::ostream& out, const RunTrace& trace) {
  out << "iteration\torigin\tloci\tcer\n";
  for (const auto& r : trace.records) {
    out << r.iteration << '\t' << to_string(r.origin) << '\t' << r.loci.to_string() << '\t'
        << format_real(r.cer) << '\n';
  }
}

RunTrace parse_trace(std::istream& in) {
  RunTrace trace;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != "iteration\torigin\tloci\tcer") {
    throw ParseError("trace: missing or malformed header", 1);
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, '\t')) f.push_back(item);
    if (f.size() != 4) throw ParseError("trace: expected 4 fields", line_no);
    try {
      TraceRecord r;
      std::size_t used = 0;
      r.iteration = std::stoull(f[0], &used);
      if (used != f[0].size()) throw ContractViolation("bad iteration");
      r.origin = parse_origin(f[1]);
      r.loci = LocusSet::parse(f[2]);
      r.cer = std::stod(f[3], &used);
      if (used != f[3].size()) throw ContractViolation("bad cer");
      if (trace.records.empty() || r.cer < trace.records[trace.best].cer) {
        trace.best = trace.records.size();
      }
      trace.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(std::string("trace: ") + e.what(), line_no);
    }
  }
  return trace;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  return {
      {"d", cfg.d},
      {"lambda", cfg.lambda},
      {"n_initial", cfg.n_initial},
      {"max_iterations", cfg.max_iterations},
      {"neighbors_per_iteration", cfg.neighbors_per_iteration},
      {"latent_k", cfg.latent_k},
      {"seed", cfg.seed},
      {"warm_start", cfg.warm_start},
      {"dedupe", cfg.dedupe},
      {"stop_on_success", cfg.stop_on_success},
      {"fm",
       {{"epochs", cfg.fm.epochs},
        {"learning_rate", cfg.fm.learning_rate},
        {"init_scale", cfg.fm.init_scale},
        {"l2", cfg.fm.l2},
        {"seed", cfg.fm.seed}}},
      {"anneal",
       {{"sweeps", cfg.anneal.sweeps},
        {"beta_initial", cfg.anneal.beta_initial},
        {"beta_final", cfg.anneal.beta_final},
        {"restarts", cfg.anneal.restarts},
        {"seed", cfg.anneal.seed}}},
  };
}

namespace {

template <typename T>
void overlay(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        const std::string& context) {
  if (!j.is_object()) throw ContractViolation(context + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ContractViolation(context + ": unknown key '" + item.key() + "'");
    }
  }
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig base) {
  require_known_keys(j,
                     {"d", "lambda", "n_initial", "max_iterations", "neighbors_per_iteration",
                      "latent_k", "seed", "warm_start", "dedupe", "stop_on_success", "fm",
                      "anneal"},
                     "run config");
  overlay(j, "d", base.d);
  overlay(j, "lambda", base.lambda);
  overlay(j, "n_initial", base.n_initial);
  overlay(j, "max_iterations", base.max_iterations);
  overlay(j, "neighbors_per_iteration", base.neighbors_per_iteration);
  overlay(j, "latent_k", base.latent_k);
  overlay(j, "seed", base.seed);
  overlay(j, "warm_start", base.warm_start);
  overlay(j, "dedupe", base.dedupe);
  overlay(j, "stop_on_success", base.stop_on_success);
  if (j.contains("fm")) {
    const auto& f = j.at("fm");
    require_known_keys(f, {"epochs", "learning_rate", "init_scale", "l2", "seed"}, "fm config");
    overlay(f, "epochs", base.fm.epochs);
    overlay(f, "learning_rate", base.fm.learning_rate);
    overlay(f, "init_scale", base.fm.init_scale);
    overlay(f, "l2", base.fm.l2);
    overlay(f, "seed", base.fm.seed);
  }
  if (j.contains("anneal")) {
    const auto& a = j.at("anneal");
    require_known_keys(a, {"sweeps", "beta_initial", "beta_final", "restarts", "seed"},
                       "anneal config");
    overlay(a, "sweeps", base.anneal.sweeps);
    overlay(a, "beta_initial", base.anneal.beta_initial);
    overlay(a, "beta_final", base.anneal.beta_final);
    overlay(a, "restarts", base.anneal.restarts);
    overlay(a, "seed", base.anneal.seed);
  }
  return base;
}

nlohmann::json result_to_json(const RunResult& result, const RunConfig& cfg,
                              bool include_time) {
  nlohmann::json j;
  j["best_loci"] = result.best_loci.indices();
  j["best_cer"] = result.best_cer;
  if (result.success) {
    j["success"] = *result.success;
    j["success_iteration"] = result.success_iteration
                                 ? nlohmann::json(*result.success_iteration)
                                 : nlohmann::json(nullptr);
  }
  j["iterations_run"] = result.iterations_run;
  j["evaluations"] = result.evaluations;
  j["surrogate_rows"] = result.surrogate_rows;
  j["repair_events"] = result.repair_events;
  if (include_time) j["wall_time_s"] = result.wall_time_s;
  j["config"] = config_to_json(cfg);
  return j;
}

RunResult result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.best_loci = LocusSet(j.at("best_loci").get<std::vector<std::size_t>>());
  r.best_cer = j.at("best_cer").get<double>();
  if (j.contains("success")) {
    r.success = j.at("success").get<bool>();
    const auto& it = j.at("success_iteration");
    if (!it.is_null()) r.success_iteration = it.get<std::size_t>();
  }
  r.iterations_run = j.at("iterations_run").get<std::size_t>();
  r.evaluations = j.at("evaluations").get<std::size_t>();
  r.surrogate_rows = j.at("surrogate_rows").get<std::size_t>();
  r.repair_events = j.at("repair_events").get<std::size_t>();
  if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

}  // namespace epifmqa
