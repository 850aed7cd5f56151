#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epifmqa/mdr.hpp"
#include "json.hpp"

namespace epifmqa {

enum class ModelKind { additive, threshold };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct ModelSpec {
  ModelKind kind = ModelKind::additive;
  std::size_t d = 3;
  double maf = 0.4;
  double target_h2 = 0.2;
  double baseline = 0.1;
  /// Minimum risk score for elevated penetrance (threshold model only);
  /// 0 means d + 1.
  std::size_t threshold_t = 0;

  std::size_t effective_threshold() const { return threshold_t == 0 ? d + 1 : threshold_t; }
  void validate() const;
};

/// Penetrance per causal multi-locus genotype (base-3 little-endian cell
/// index, as in CellTable) with matching Hardy-Weinberg cell probabilities.
struct PenetranceTable {
  ModelKind kind = ModelKind::additive;
  std::size_t d = 0;
  double maf = 0.0;
  double beta = 0.0;
  std::vector<double> penetrance;
  std::vector<double> cell_probs;
};

/// ((1-p)^2, 2p(1-p), p^2).
std::array<double, 3> hwe_probs(double maf);

/// Total minor-allele count over the causal loci.
std::size_t risk_score(std::span<const std::uint8_t> genotype);

/// Genotype tuple of a base-3 little-endian cell index.
std::vector<std::uint8_t> cell_genotype(std::size_t cell, std::size_t d);

/// Table for a fixed effect size beta (no calibration).
PenetranceTable make_table(const ModelSpec& spec, double beta);

/// Largest beta worth searching: beyond it the table no longer changes.
double max_beta(const ModelSpec& spec);

/// Calibrates beta so heritability(table) == spec.target_h2. Throws
/// InfeasibleError carrying the largest achievable heritability.
PenetranceTable build_table(const ModelSpec& spec);

double prevalence(const PenetranceTable& t);

/// Observed-scale broad-sense heritability sum_g p_g (f_g - P)^2 / (P (1 - P)).
double heritability(const PenetranceTable& t);

/// Penetrance at causal position `position` given its genotype, averaged over
/// the other causal loci under Hardy-Weinberg.
std::array<double, 3> marginal_penetrance(const PenetranceTable& t, std::size_t position);

inline constexpr std::uint64_t kDefaultDrawBudget = 100'000'000;

struct DatasetSpec {
  std::size_t n_loci = 100;
  ModelSpec model;
  std::size_t n_cases = 1000;
  std::size_t n_controls = 1000;
  /// Planted positions; random (seeded) placement when absent.
  std::optional<LocusSet> causal;
  double noise_maf_low = 0.05;
  double noise_maf_high = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t draw_budget = kDefaultDrawBudget;

  void validate() const;
};

struct SimulatedDataset {
  GenotypeDataset data;
  LocusSet causal;
  PenetranceTable table;
  std::vector<double> locus_maf;
  std::uint64_t draws = 0;
};

/// Rejection sampling of independent HWE genotypes until both the case and
/// control quotas are filled. Deterministic per seed.
SimulatedDataset sample_dataset(const DatasetSpec& spec);

/// Same, with a caller-supplied table (e.g. hand-built 0/1 penetrance).
SimulatedDataset sample_dataset(const DatasetSpec& spec, const PenetranceTable& table);

/// Sidecar metadata: spec, calibrated beta, prevalence, heritability, truth.
nlohmann::json metadata_json(const DatasetSpec& spec, const SimulatedDataset& sim);

}  // namespace epifmqa
