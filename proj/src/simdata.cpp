#include "epifmqa/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epifmqa/errors.hpp"
#include "epifmqa/rng.hpp"

namespace epifmqa {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::additive ? "additive" : "threshold";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "additive") return ModelKind::additive;
  if (text == "threshold") return ModelKind::threshold;
  throw ContractViolation("unknown model kind '" + text + "' (additive|threshold)");
}

void ModelSpec::validate() const {
  if (d < 1 || d > kMaxOrder) throw ContractViolation("model: order d out of range");
  if (!(maf > 0.0 && maf <= 0.5)) throw ContractViolation("model: maf must be in (0, 0.5]");
  if (!(target_h2 > 0.0 && target_h2 < 1.0)) {
    throw ContractViolation("model: heritability must be in (0, 1)");
  }
  if (!(baseline > 0.0 && baseline < 1.0)) {
    throw ContractViolation("model: baseline penetrance must be in (0, 1)");
  }
  if (kind == ModelKind::threshold) {
    const std::size_t t = effective_threshold();
    if (t < 1 || t > 2 * d) throw ContractViolation("model: threshold must be in [1, 2d]");
  }
}

std::array<double, 3> hwe_probs(double maf) {
  if (!(maf > 0.0 && maf <= 0.5)) throw ContractViolation("hwe: maf must be in (0, 0.5]");
  const double q = 1.0 - maf;
  return {q * q, 2.0 * maf * q, maf * maf};
}

std::size_t risk_score(std::span<const std::uint8_t> genotype) {
  return std::accumulate(genotype.begin(), genotype.end(), std::size_t{0});
}

std::vector<std::uint8_t> cell_genotype(std::size_t cell, std::size_t d) {
  std::vector<std::uint8_t> g(d);
  for (std::size_t j = 0; j < d; ++j) {
    g[j] = static_cast<std::uint8_t>(cell % 3);
    cell /= 3;
  }
  return g;
}

PenetranceTable make_table(const ModelSpec& spec, double beta) {
  spec.validate();
  PenetranceTable t;
  t.kind = spec.kind;
  t.d = spec.d;
  t.maf = spec.maf;
  t.beta = beta;
  const auto hw = hwe_probs(spec.maf);
  const std::size_t cells = cell_count(spec.d);
  t.penetrance.resize(cells);
  t.cell_probs.resize(cells);
  const std::size_t thr = spec.effective_threshold();
  for (std::size_t c = 0; c < cells; ++c) {
    const auto g = cell_genotype(c, spec.d);
    double p = 1.0;
    for (std::uint8_t a : g) p *= hw[a];
    t.cell_probs[c] = p;
    const auto score = static_cast<double>(risk_score(g));
    double f = 0.0;
    if (spec.kind == ModelKind::additive) {
      f = spec.baseline + beta * score;
    } else {
      f = risk_score(g) < thr ? spec.baseline : spec.baseline + beta;
    }
    t.penetrance[c] = std::clamp(f, 0.0, 1.0);
  }
  return t;
}

double max_beta(const ModelSpec& spec) {
  // Additive: at beta = 1 - baseline every cell with score >= 1 is clamped to
  // 1. Threshold: elevated cells reach 1.
  return 1.0 - spec.baseline;
}

double prevalence(const PenetranceTable& t) {
  double p = 0.0;
  for (std::size_t c = 0; c < t.penetrance.size(); ++c) p += t.cell_probs[c] * t.penetrance[c];
  return p;
}

double heritability(const PenetranceTable& t) {
  const double p = prevalence(t);
  if (!(p > 0.0 && p < 1.0)) throw ContractViolation("heritability: prevalence must be in (0, 1)");
  double var = 0.0;
  for (std::size_t c = 0; c < t.penetrance.size(); ++c) {
    const double dev = t.penetrance[c] - p;
    var += t.cell_probs[c] * dev * dev;
  }
  return var / (p * (1.0 - p));
}

PenetranceTable build_table(const ModelSpec& spec) {
  spec.validate();
  const double hi = max_beta(spec);
  auto h2_at = [&](double beta) { return heritability(make_table(spec, beta)); };

  // h2 is continuous in beta but not guaranteed monotone once clamping kicks
  // in, so scan for the first grid point past the target, then bisect.
  constexpr int kGrid = 4096;
  double lo_beta = 0.0;
  double best_h2 = 0.0;
  std::optional<double> hit;
  for (int i = 1; i <= kGrid; ++i) {
    const double beta = hi * static_cast<double>(i) / kGrid;
    const double h2 = h2_at(beta);
    best_h2 = std::max(best_h2, h2);
    if (h2 >= spec.target_h2) {
      hit = beta;
      break;
    }
    lo_beta = beta;
  }
  if (!hit) {
    throw InfeasibleError("calibration infeasible: target heritability " +
                              std::to_string(spec.target_h2) + " exceeds the maximum " +
                              std::to_string(best_h2) + " reachable with penetrance <= 1",
                          best_h2);
  }
  double a = lo_beta;
  double b = *hit;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    const double mid = 0.5 * (a + b);
    if (h2_at(mid) >= spec.target_h2) {
      b = mid;
    } else {
      a = mid;
    }
  }
  return make_table(spec, b);
}

std::array<double, 3> marginal_penetrance(const PenetranceTable& t, std::size_t position) {
  if (position >= t.d) throw ContractViolation("marginal penetrance: position out of range");
  const auto hw = hwe_probs(t.maf);
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  std::array<double, 3> weight{0.0, 0.0, 0.0};
  for (std::size_t c = 0; c < t.penetrance.size(); ++c) {
    const auto g = cell_genotype(c, t.d);
    const std::uint8_t a = g[position];
    // Probability of the other loci's genotypes.
    const double p_other = t.cell_probs[c] / hw[a];
    sum[a] += p_other * t.penetrance[c];
    weight[a] += p_other;
  }
  for (int a = 0; a < 3; ++a) sum[a] /= weight[a];
  return sum;
}

void DatasetSpec::validate() const {
  model.validate();
  if (model.d > n_loci) throw ContractViolation("dataset spec: d exceeds n_loci");
  if (n_cases == 0 || n_controls == 0) {
    throw ContractViolation("dataset spec: case and control counts must be positive");
  }
  if (!(noise_maf_low > 0.0 && noise_maf_low <= noise_maf_high && noise_maf_high <= 0.5)) {
    throw ContractViolation("dataset spec: need 0 < noise maf low <= high <= 0.5");
  }
  if (causal) {
    if (causal->size() != model.d) {
      throw ContractViolation("dataset spec: causal locus count differs from d");
    }
    causal->check_against(n_loci);
  }
}

namespace {

std::uint8_t draw_genotype(Rng& rng, const std::array<double, 3>& hw) {
  const double u = uniform01(rng);
  if (u < hw[0]) return 0;
  if (u < hw[0] + hw[1]) return 1;
  return 2;
}

}  // namespace

SimulatedDataset sample_dataset(const DatasetSpec& spec) {
  spec.validate();
  return sample_dataset(spec, build_table(spec.model));
}

SimulatedDataset sample_dataset(const DatasetSpec& spec, const PenetranceTable& table) {
  spec.validate();
  if (table.d != spec.model.d) throw ContractViolation("sample: table order differs from spec");
  const std::size_t n = spec.n_loci;
  const std::size_t d = table.d;

  SimulatedDataset out;
  out.table = table;

  Rng placement = make_rng(spec.seed, 0);
  if (spec.causal) {
    out.causal = *spec.causal;
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t j = i + uniform_index(placement, n - i);
      std::swap(all[i], all[j]);
    }
    out.causal = LocusSet({all.begin(), all.begin() + static_cast<std::ptrdiff_t>(d)});
  }
  // Causal loci in sorted order: position j of the table is causal[j].
  const auto& causal = out.causal.indices();

  Rng maf_rng = make_rng(spec.seed, 1);
  std::uniform_real_distribution<double> noise_maf(spec.noise_maf_low, spec.noise_maf_high);
  out.locus_maf.assign(n, table.maf);
  std::vector<std::uint8_t> is_causal(n, 0);
  for (std::size_t c : causal) is_causal[c] = 1;
  for (std::size_t l = 0; l < n; ++l) {
    const double m = noise_maf(maf_rng);
    if (!is_causal[l]) out.locus_maf[l] = m;
  }
  std::vector<std::array<double, 3>> hw(n);
  for (std::size_t l = 0; l < n; ++l) hw[l] = hwe_probs(out.locus_maf[l]);

  Rng rng = make_rng(spec.seed, 2);
  const std::size_t total = spec.n_cases + spec.n_controls;
  std::vector<std::uint8_t> rows;
  rows.reserve(total * n);
  std::vector<std::uint8_t> labels;
  labels.reserve(total);
  std::size_t cases = 0, controls = 0;
  std::vector<std::uint8_t> g(d), row(n);
  while (cases < spec.n_cases || controls < spec.n_controls) {
    if (out.draws >= spec.draw_budget) {
      throw BudgetExceeded("rejection sampling exceeded the budget of " +
                           std::to_string(spec.draw_budget) + " draws (" +
                           std::to_string(cases) + " cases, " + std::to_string(controls) +
                           " controls accepted)");
    }
    ++out.draws;
    std::size_t cell = 0, place = 1;
    for (std::size_t j = 0; j < d; ++j) {
      g[j] = draw_genotype(rng, hw[causal[j]]);
      cell += place * g[j];
      place *= 3;
    }
    const bool is_case_draw = uniform01(rng) < table.penetrance[cell];
    if (is_case_draw ? cases >= spec.n_cases : controls >= spec.n_controls) continue;
    // Noise genotypes are independent of the phenotype, so they are drawn only
    // for accepted individuals.
    for (std::size_t l = 0, j = 0; l < n; ++l) {
      row[l] = is_causal[l] ? g[j++] : draw_genotype(rng, hw[l]);
    }
    rows.insert(rows.end(), row.begin(), row.end());
    labels.push_back(is_case_draw ? 1 : 0);
    (is_case_draw ? cases : controls) += 1;
  }
  out.data = GenotypeDataset(n, rows, std::move(labels));
  return out;
}

nlohmann::json metadata_json(const DatasetSpec& spec, const SimulatedDataset& sim) {
  nlohmann::json j;
  j["n_loci"] = spec.n_loci;
  j["n_cases"] = spec.n_cases;
  j["n_controls"] = spec.n_controls;
  j["seed"] = spec.seed;
  j["noise_maf_range"] = {spec.noise_maf_low, spec.noise_maf_high};
  j["draw_budget"] = spec.draw_budget;
  j["causal_placement"] = spec.causal ? "fixed" : "random";
  j["model"] = {
      {"kind", to_string(spec.model.kind)},
      {"d", spec.model.d},
      {"maf", spec.model.maf},
      {"target_h2", spec.model.target_h2},
      {"baseline", spec.model.baseline},
  };
  if (spec.model.kind == ModelKind::threshold) {
    j["model"]["threshold_t"] = spec.model.effective_threshold();
  }
  j["beta"] = sim.table.beta;
  j["prevalence"] = prevalence(sim.table);
  j["heritability"] = heritability(sim.table);
  j["penetrance"] = sim.table.penetrance;
  j["causal_loci"] = sim.causal.indices();
  j["locus_maf"] = sim.locus_maf;
  j["draws"] = sim.draws;
  return j;
}

}  // namespace epifmqa
