#include "epifmqa/fmqa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "epifmqa/errors.hpp"

namespace epifmqa {

void RunConfig::validate() const {
  if (d < 1) throw ContractViolation("run: d must be >= 1");
  if (!(lambda > 0.0)) throw ContractViolation("run: lambda must be > 0");
  if (max_iterations < 1) throw ContractViolation("run: max_iterations must be >= 1");
  if (n_initial < 1) throw ContractViolation("run: n_initial must be >= 1");
  if (latent_k < 1) throw ContractViolation("run: latent dimension must be >= 1");
  fm.validate();
  anneal.validate();
}

std::string to_string(Origin origin) {
  switch (origin) {
    case Origin::initial:
      return "initial";
    case Origin::annealer:
      return "annealer";
    case Origin::neighbor:
      return "neighbor";
  }
  return "?";
}

Origin parse_origin(const std::string& text) {
  if (text == "initial") return Origin::initial;
  if (text == "annealer") return Origin::annealer;
  if (text == "neighbor") return Origin::neighbor;
  throw ContractViolation("unknown origin '" + text + "'");
}

std::vector<Bits> init_points(std::size_t n_loci, std::size_t d, std::size_t count,
                              std::uint64_t seed) {
  if (d > n_loci) {
    throw ContractViolation("init_points: d=" + std::to_string(d) + " exceeds " +
                            std::to_string(n_loci) + " loci");
  }
  Rng rng = make_rng(seed, 0);
  std::vector<std::size_t> pool(n_loci);
  std::vector<Bits> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Bits bits(n_loci, 0);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t j = i + uniform_index(rng, n_loci - i);
      std::swap(pool[i], pool[j]);
      bits[pool[i]] = 1;
    }
    out.push_back(std::move(bits));
  }
  return out;
}

Bits neighborhood_swap(const Bits& bits, Rng& rng) {
  std::vector<std::size_t> ones, zeros;
  for (std::size_t i = 0; i < bits.size(); ++i) (bits[i] ? ones : zeros).push_back(i);
  if (ones.empty() || zeros.empty()) {
    throw ContractViolation("neighborhood_swap: need at least one 1 and one 0");
  }
  Bits out = bits;
  out[ones[uniform_index(rng, ones.size())]] = 0;
  out[zeros[uniform_index(rng, zeros.size())]] = 1;
  return out;
}

Bits repair_cardinality(const Bits& bits, std::size_t d, const QuboProblem& q) {
  if (bits.size() != q.size()) throw ContractViolation("repair: dimension mismatch");
  if (d > bits.size()) throw ContractViolation("repair: d exceeds variable count");
  Bits out = bits;
  std::size_t count = popcount(out);
  while (count != d) {
    const std::uint8_t want = count > d ? 1 : 0;
    std::size_t pick = out.size();
    double pick_mag = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] != want) continue;
      const double mag = std::abs(q.coeff(i, i));
      if (pick == out.size() || mag < pick_mag) {
        pick = i;
        pick_mag = mag;
      }
    }
    out[pick] ^= 1u;
    count = want ? count - 1 : count + 1;
  }
  return out;
}

std::optional<std::size_t> detect_success(const RunTrace& trace, const LocusSet& truth) {
  for (const auto& r : trace.records) {
    if (r.loci == truth) return r.iteration;
  }
  return std::nullopt;
}

RunOutput run(const GenotypeDataset& data, const std::optional<LocusSet>& truth,
              const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.n_loci();
  if (cfg.d > n) throw ContractViolation("run: d exceeds the number of loci");
  if (truth) truth->check_against(n);
  const auto start = std::chrono::steady_clock::now();

  RunOutput out;
  RunResult& res = out.result;
  RunTrace& trace = out.trace;
  SurrogateDataset surrogate;
  std::map<LocusSet, double> cache;

  auto evaluate = [&](const Bits& bits, std::size_t iteration, Origin origin) {
    LocusSet loci = LocusSet::from_bits(bits);
    double cost = 0.0;
    bool append = true;
    if (cfg.dedupe) {
      if (auto it = cache.find(loci); it != cache.end()) {
        cost = it->second;
        append = false;
      } else {
        cost = evaluate_cer(data, loci);
        cache.emplace(loci, cost);
      }
    } else {
      cost = evaluate_cer(data, loci);
    }
    if (append) surrogate.push_back({bits, cost});
    if (trace.records.empty() || cost < trace.records[trace.best].cer) {
      trace.best = trace.records.size();
    }
    if (truth && !res.success_iteration && loci == *truth) res.success_iteration = iteration;
    trace.records.push_back({iteration, origin, std::move(loci), cost});
  };

  for (const auto& bits : init_points(n, cfg.d, cfg.n_initial, mix_seed(cfg.seed, 0))) {
    evaluate(bits, 0, Origin::initial);
  }

  Rng neighbor_rng = make_rng(cfg.seed, 1);
  std::optional<FmModel> previous;
  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    if (cfg.stop_on_success && res.success_iteration) break;

    TrainConfig fm_cfg = cfg.fm;
    fm_cfg.seed = mix_seed(cfg.seed ^ cfg.fm.seed, 0x10000 + t);
    FmModel model = train(surrogate, n, cfg.latent_k, fm_cfg,
                          cfg.warm_start && previous ? &*previous : nullptr);

    const QuboProblem scaled = normalize(to_qubo(model));
    const QuboProblem constrained = add_cardinality_penalty(scaled, cfg.d, cfg.lambda);
    AnnealParams sa = cfg.anneal;
    sa.seed = mix_seed(cfg.seed ^ cfg.anneal.seed, 0x20000 + t);
    Bits candidate = solve_sa(constrained, sa).bits;
    if (popcount(candidate) != cfg.d) {
      candidate = repair_cardinality(candidate, cfg.d, scaled);
      ++res.repair_events;
    }

    std::vector<Bits> batch{candidate};
    if (cfg.d < n) {
      for (std::size_t k = 0; k < cfg.neighbors_per_iteration; ++k) {
        batch.push_back(neighborhood_swap(candidate, neighbor_rng));
      }
    }
    evaluate(batch[0], t, Origin::annealer);
    for (std::size_t k = 1; k < batch.size(); ++k) evaluate(batch[k], t, Origin::neighbor);

    res.iterations_run = t;
    if (cfg.warm_start) previous = std::move(model);
  }

  const auto& best = trace.records[trace.best];
  res.best_loci = best.loci;
  res.best_cer = best.cer;
  if (truth) res.success = res.success_iteration.has_value();
  res.evaluations = trace.records.size();
  res.surrogate_rows = surrogate.size();
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace epifmqa
