#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "epifmqa/qubo.hpp"

namespace epifmqa {

/// Genotype codes 0 (homozygous major), 1 (heterozygous), 2 (homozygous
/// minor) per sample and locus, with case (1) / control (0) labels.
/// Stored locus-major so per-locus columns are contiguous.
class GenotypeDataset {
 public:
  GenotypeDataset() = default;

  /// `rows` is sample-major: rows[s * n_loci + l].
  GenotypeDataset(std::size_t n_loci, std::span<const std::uint8_t> rows,
                  std::vector<std::uint8_t> labels,
                  std::vector<std::string> locus_names = {});

  std::size_t n_loci() const noexcept { return n_loci_; }
  std::size_t n_samples() const noexcept { return labels_.size(); }
  std::size_t n_cases() const noexcept { return n_cases_; }
  std::size_t n_controls() const noexcept { return labels_.size() - n_cases_; }

  std::uint8_t genotype(std::size_t sample, std::size_t locus) const {
    return columns_[locus * labels_.size() + sample];
  }
  std::span<const std::uint8_t> column(std::size_t locus) const {
    return {columns_.data() + locus * labels_.size(), labels_.size()};
  }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  bool is_case(std::size_t sample) const { return labels_[sample] != 0; }
  const std::vector<std::string>& locus_names() const noexcept { return names_; }

  /// Copy with replaced labels (same length, validated).
  GenotypeDataset with_labels(std::vector<std::uint8_t> labels) const;
  /// Copy with samples reordered: new sample s is old sample order[s].
  GenotypeDataset permuted(std::span<const std::size_t> order) const;

 private:
  void finish();

  std::size_t n_loci_ = 0;
  std::size_t n_cases_ = 0;
  std::vector<std::uint8_t> columns_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::string> names_;
};

/// Strictly increasing distinct locus indices.
class LocusSet {
 public:
  LocusSet() = default;
  /// Sorts the input; duplicates are a contract violation.
  explicit LocusSet(std::vector<std::size_t> indices);

  static LocusSet from_bits(std::span<const std::uint8_t> bits);
  Bits to_bits(std::size_t n) const;

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }

  /// Throws unless every index is below n_loci.
  void check_against(std::size_t n_loci) const;

  std::string to_string() const;  // "3,17,42"
  static LocusSet parse(const std::string& text);

  auto operator<=>(const LocusSet&) const = default;
  bool operator==(const LocusSet&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

inline constexpr std::size_t kMaxOrder = 12;

/// Multi-locus genotype cells indexed base-3 little-endian over the sorted
/// loci: cell = sum_j g(loci[j]) * 3^j.
struct CellTable {
  std::size_t d = 0;
  std::vector<std::uint32_t> cases;
  std::vector<std::uint32_t> controls;
  std::uint64_t total_cases = 0;
  std::uint64_t total_controls = 0;

  std::size_t n_cells() const noexcept { return cases.size(); }
};

std::size_t cell_count(std::size_t d);
std::size_t cell_index(const GenotypeDataset& data, const LocusSet& loci, std::size_t sample);

CellTable build_cells(const GenotypeDataset& data, const LocusSet& loci);

struct RiskLabeling {
  std::vector<std::uint8_t> high;
  double threshold = 1.0;
};

/// theta = (P_i / N_i) / (P* / N*); +inf for a case-only cell, 0 when empty.
double risk_ratio(std::uint64_t cases, std::uint64_t controls, std::uint64_t total_cases,
                  std::uint64_t total_controls);

/// High iff theta > threshold (strict); case-only cells are high, empty cells low.
RiskLabeling label_risk(const CellTable& cells, double threshold = 1.0);

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const CellTable& cells, const RiskLabeling& labeling);

/// Balanced error 0.5 * (FN / (TP + FN) + FP / (FP + TN)).
double cer(const ConfusionCounts& c);

/// Full-sample CER of the d-locus model at `loci` (no cross-validation).
double evaluate_cer(const GenotypeDataset& data, const LocusSet& loci);

/// C(n, d), or UINT64_MAX if it does not fit.
std::uint64_t combination_count(std::size_t n, std::size_t d);

/// Throws RefusalError when C(n, d) exceeds `cap`.
void check_enumeration_cap(std::size_t n, std::size_t d, std::uint64_t cap);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

struct ExhaustiveConfig {
  std::size_t d = 2;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::uint64_t cap = kDefaultEnumerationCap;
};

struct FoldSelection {
  LocusSet loci;
  double train_cer = 0.0;
  double test_cer = 0.0;
};

struct MdrModel {
  LocusSet loci;
  std::uint32_t cvc = 0;
  double mean_train_cer = 0.0;
  double mean_test_cer = 0.0;
};

struct FullSampleMinimum {
  LocusSet loci;
  double cer = 0.0;
  std::uint64_t combinations = 0;
};

struct ExhaustiveResult {
  std::uint64_t combinations = 0;
  std::vector<std::size_t> fold_of;  // fold index per sample
  std::vector<FoldSelection> folds;
  /// Models selected by at least one fold: CVC desc, mean test CER asc, loci asc.
  std::vector<MdrModel> ranked;
  FullSampleMinimum full_sample;
};

/// Stratified fold assignment: cases and controls are shuffled separately and
/// dealt round-robin into `folds` folds.
std::vector<std::size_t> stratified_folds(const GenotypeDataset& data, std::size_t folds,
                                          std::uint64_t seed);

/// Exhaustive z-fold MDR with cross-validation consistency. Throws
/// RefusalError when C(n_loci, d) exceeds cfg.cap.
ExhaustiveResult exhaustive_mdr(const GenotypeDataset& data, const ExhaustiveConfig& cfg);

/// Minimum full-sample CER over all d-locus sets; ties to the smallest set.
FullSampleMinimum exhaustive_min_cer(const GenotypeDataset& data, std::size_t d,
                                     std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace epifmqa
