#include "epifmqa/mdr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "epifmqa/errors.hpp"
#include "epifmqa/rng.hpp"

namespace epifmqa {

// ---------------------------------------------------------------------------
// GenotypeDataset

GenotypeDataset::GenotypeDataset(std::size_t n_loci, std::span<const std::uint8_t> rows,
                                 std::vector<std::uint8_t> labels,
                                 std::vector<std::string> locus_names)
    : n_loci_(n_loci), labels_(std::move(labels)), names_(std::move(locus_names)) {
  const std::size_t n = labels_.size();
  if (rows.size() != n * n_loci) {
    throw ContractViolation("dataset: genotype matrix size does not match samples x loci");
  }
  columns_.resize(rows.size());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t l = 0; l < n_loci; ++l) columns_[l * n + s] = rows[s * n_loci + l];
  }
  finish();
}

void GenotypeDataset::finish() {
  if (names_.empty()) {
    names_.reserve(n_loci_);
    for (std::size_t l = 0; l < n_loci_; ++l) names_.push_back("X" + std::to_string(l));
  }
  if (names_.size() != n_loci_) throw ContractViolation("dataset: locus name count mismatch");
  for (std::uint8_t g : columns_) {
    if (g > 2) throw ContractViolation("dataset: genotype code outside {0,1,2}");
  }
  n_cases_ = 0;
  for (std::uint8_t y : labels_) {
    if (y > 1) throw ContractViolation("dataset: label outside {0,1}");
    n_cases_ += y;
  }
  if (n_cases_ == 0 || n_cases_ == labels_.size()) {
    throw ContractViolation("dataset: need at least one case and one control");
  }
}

GenotypeDataset GenotypeDataset::with_labels(std::vector<std::uint8_t> labels) const {
  if (labels.size() != labels_.size()) throw ContractViolation("dataset: label count mismatch");
  GenotypeDataset out = *this;
  out.labels_ = std::move(labels);
  out.finish();
  return out;
}

GenotypeDataset GenotypeDataset::permuted(std::span<const std::size_t> order) const {
  const std::size_t n = labels_.size();
  if (order.size() != n) throw ContractViolation("dataset: permutation length mismatch");
  GenotypeDataset out = *this;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t src = order[s];
    if (src >= n) throw ContractViolation("dataset: permutation index out of range");
    out.labels_[s] = labels_[src];
    for (std::size_t l = 0; l < n_loci_; ++l) out.columns_[l * n + s] = columns_[l * n + src];
  }
  out.finish();
  return out;
}

// ---------------------------------------------------------------------------
// LocusSet

LocusSet::LocusSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw ContractViolation("locus set: duplicate index");
  }
}

LocusSet LocusSet::from_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) on.push_back(i);
  }
  return LocusSet(std::move(on));
}

Bits LocusSet::to_bits(std::size_t n) const {
  check_against(n);
  Bits bits(n, 0);
  for (std::size_t i : indices_) bits[i] = 1;
  return bits;
}

void LocusSet::check_against(std::size_t n_loci) const {
  if (!indices_.empty() && indices_.back() >= n_loci) {
    throw ContractViolation("locus set: index " + std::to_string(indices_.back()) +
                            " out of range for " + std::to_string(n_loci) + " loci");
  }
}

std::string LocusSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(indices_[i]);
  }
  return out;
}

LocusSet LocusSet::parse(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ContractViolation("locus set: bad index '" + item + "' in '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return LocusSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Cells and CER

std::size_t cell_count(std::size_t d) {
  std::size_t c = 1;
  for (std::size_t i = 0; i < d; ++i) c *= 3;
  return c;
}

namespace {

void check_loci(const GenotypeDataset& data, const LocusSet& loci) {
  if (loci.empty()) throw ContractViolation("MDR: empty locus set");
  if (loci.size() > kMaxOrder) {
    throw ContractViolation("MDR: order " + std::to_string(loci.size()) + " exceeds limit " +
                            std::to_string(kMaxOrder));
  }
  loci.check_against(data.n_loci());
}

// Cell index per sample for the given (sorted) loci.
void cell_indices(const GenotypeDataset& data, std::span<const std::size_t> loci,
                  std::vector<std::uint32_t>& out) {
  const std::size_t n = data.n_samples();
  out.assign(n, 0);
  std::uint32_t place = 1;
  for (std::size_t locus : loci) {
    const auto col = data.column(locus);
    for (std::size_t s = 0; s < n; ++s) out[s] += place * col[s];
    place *= 3;
  }
}

bool is_high(std::uint64_t p, std::uint64_t q, std::uint64_t total_p, std::uint64_t total_q,
             double threshold) {
  if (p == 0 && q == 0) return false;
  if (q == 0) return true;
  // theta > T  <=>  P_i * N* > T * N_i * P*
  return static_cast<double>(p) * static_cast<double>(total_q) >
         threshold * static_cast<double>(q) * static_cast<double>(total_p);
}

double balanced_error(std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
  return 0.5 * (static_cast<double>(fn) / static_cast<double>(tp + fn) +
                static_cast<double>(fp) / static_cast<double>(fp + tn));
}

// Training CER with threshold 1 directly from per-cell counts.
double cer_from_counts(std::span<const std::uint32_t> p, std::span<const std::uint32_t> q,
                       std::uint64_t total_p, std::uint64_t total_q) {
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (is_high(p[c], q[c], total_p, total_q, 1.0)) {
      tp += p[c];
      fp += q[c];
    }
  }
  return balanced_error(tp, total_p - tp, fp, total_q - fp);
}

template <typename Fn>
void for_each_combination(std::size_t n, std::size_t d, Fn&& fn) {
  if (d == 0 || d > n) return;
  std::vector<std::size_t> c(d);
  std::iota(c.begin(), c.end(), std::size_t{0});
  while (true) {
    fn(std::span<const std::size_t>(c));
    std::size_t i = d;
    while (i > 0 && c[i - 1] == n - d + (i - 1)) --i;
    if (i == 0) return;
    ++c[i - 1];
    for (std::size_t j = i; j < d; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace

void check_enumeration_cap(std::size_t n, std::size_t d, std::uint64_t cap) {
  const std::uint64_t count = combination_count(n, d);
  if (count > cap) {
    throw RefusalError("exhaustive search needs C(" + std::to_string(n) + ", " +
                           std::to_string(d) + ") = " + std::to_string(count) +
                           " combinations, above the cap of " + std::to_string(cap),
                       count);
  }
}

std::size_t cell_index(const GenotypeDataset& data, const LocusSet& loci, std::size_t sample) {
  std::size_t idx = 0;
  std::size_t place = 1;
  for (std::size_t locus : loci.indices()) {
    idx += place * data.genotype(sample, locus);
    place *= 3;
  }
  return idx;
}

CellTable build_cells(const GenotypeDataset& data, const LocusSet& loci) {
  check_loci(data, loci);
  CellTable t;
  t.d = loci.size();
  t.cases.assign(cell_count(t.d), 0);
  t.controls.assign(cell_count(t.d), 0);
  std::vector<std::uint32_t> idx;
  cell_indices(data, loci.indices(), idx);
  const auto labels = data.labels();
  for (std::size_t s = 0; s < idx.size(); ++s) {
    if (labels[s]) {
      ++t.cases[idx[s]];
    } else {
      ++t.controls[idx[s]];
    }
  }
  t.total_cases = data.n_cases();
  t.total_controls = data.n_controls();
  return t;
}

double risk_ratio(std::uint64_t cases, std::uint64_t controls, std::uint64_t total_cases,
                  std::uint64_t total_controls) {
  if (total_cases == 0 || total_controls == 0) {
    throw ContractViolation("risk ratio: need nonzero case and control totals");
  }
  if (cases == 0 && controls == 0) return 0.0;
  if (controls == 0) return std::numeric_limits<double>::infinity();
  return (static_cast<double>(cases) / static_cast<double>(controls)) /
         (static_cast<double>(total_cases) / static_cast<double>(total_controls));
}

RiskLabeling label_risk(const CellTable& cells, double threshold) {
  if (cells.total_cases == 0 || cells.total_controls == 0) {
    throw ContractViolation("label_risk: need at least one case and one control");
  }
  RiskLabeling out;
  out.threshold = threshold;
  out.high.resize(cells.n_cells());
  for (std::size_t c = 0; c < cells.n_cells(); ++c) {
    out.high[c] = is_high(cells.cases[c], cells.controls[c], cells.total_cases,
                          cells.total_controls, threshold);
  }
  return out;
}

ConfusionCounts confusion(const CellTable& cells, const RiskLabeling& labeling) {
  if (labeling.high.size() != cells.n_cells()) {
    throw ContractViolation("confusion: labeling does not cover the cell table");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < cells.n_cells(); ++i) {
    if (labeling.high[i]) {
      c.tp += cells.cases[i];
      c.fp += cells.controls[i];
    } else {
      c.fn += cells.cases[i];
      c.tn += cells.controls[i];
    }
  }
  return c;
}

double cer(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0 || c.fp + c.tn == 0) {
    throw ContractViolation("cer: zero case or control total");
  }
  return balanced_error(c.tp, c.fn, c.fp, c.tn);
}

double evaluate_cer(const GenotypeDataset& data, const LocusSet& loci) {
  const CellTable cells = build_cells(data, loci);
  return cer(confusion(cells, label_risk(cells, 1.0)));
}

// ---------------------------------------------------------------------------
// Exhaustive search

std::uint64_t combination_count(std::size_t n, std::size_t d) {
  if (d > n) return 0;
  d = std::min(d, n - d);
  unsigned __int128 c = 1;
  for (std::size_t i = 1; i <= d; ++i) {
    // c * (n - d + i) / i stays integral at every step.
    c = c * (n - d + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(c);
}

std::vector<std::size_t> stratified_folds(const GenotypeDataset& data, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw ContractViolation("cross-validation: need at least 2 folds");
  if (data.n_cases() < folds || data.n_controls() < folds) {
    throw ContractViolation("cross-validation: every fold needs at least one case and control");
  }
  std::vector<std::size_t> cases, controls;
  for (std::size_t s = 0; s < data.n_samples(); ++s) {
    (data.is_case(s) ? cases : controls).push_back(s);
  }
  Rng rng = make_rng(seed, 0);
  std::shuffle(cases.begin(), cases.end(), rng);
  std::shuffle(controls.begin(), controls.end(), rng);
  std::vector<std::size_t> fold_of(data.n_samples());
  for (std::size_t i = 0; i < cases.size(); ++i) fold_of[cases[i]] = i % folds;
  for (std::size_t i = 0; i < controls.size(); ++i) fold_of[controls[i]] = i % folds;
  return fold_of;
}

FullSampleMinimum exhaustive_min_cer(const GenotypeDataset& data, std::size_t d,
                                     std::uint64_t cap) {
  if (d == 0 || d > data.n_loci() || d > kMaxOrder) {
    throw ContractViolation("exhaustive: invalid order " + std::to_string(d));
  }
  check_enumeration_cap(data.n_loci(), d, cap);
  const std::size_t cells = cell_count(d);
  std::vector<std::uint32_t> idx, p(cells), q(cells);
  const auto labels = data.labels();
  FullSampleMinimum best;
  best.cer = std::numeric_limits<double>::infinity();
  for_each_combination(data.n_loci(), d, [&](std::span<const std::size_t> combo) {
    cell_indices(data, combo, idx);
    std::fill(p.begin(), p.end(), 0);
    std::fill(q.begin(), q.end(), 0);
    for (std::size_t s = 0; s < idx.size(); ++s) ++(labels[s] ? p : q)[idx[s]];
    const double e = cer_from_counts(p, q, data.n_cases(), data.n_controls());
    ++best.combinations;
    if (e < best.cer) {
      best.cer = e;
      best.loci = LocusSet({combo.begin(), combo.end()});
    }
  });
  return best;
}

ExhaustiveResult exhaustive_mdr(const GenotypeDataset& data, const ExhaustiveConfig& cfg) {
  const std::size_t d = cfg.d;
  const std::size_t z = cfg.folds;
  if (d == 0 || d > data.n_loci() || d > kMaxOrder) {
    throw ContractViolation("exhaustive: invalid order " + std::to_string(d));
  }
  check_enumeration_cap(data.n_loci(), d, cfg.cap);

  ExhaustiveResult result;
  result.fold_of = stratified_folds(data, z, cfg.seed);
  const auto& fold_of = result.fold_of;
  const auto labels = data.labels();

  std::vector<std::uint64_t> fold_cases(z, 0), fold_controls(z, 0);
  for (std::size_t s = 0; s < data.n_samples(); ++s) {
    ++(labels[s] ? fold_cases : fold_controls)[fold_of[s]];
  }

  const std::size_t cells = cell_count(d);
  // Per-fold counts laid out [fold][cell]; totals are the column sums.
  std::vector<std::uint32_t> idx, pf(z * cells), qf(z * cells), pt(cells), qt(cells),
      ptrain(cells), qtrain(cells);

  std::vector<FoldSelection> best(z);
  std::vector<double> best_cer(z, std::numeric_limits<double>::infinity());
  result.full_sample.cer = std::numeric_limits<double>::infinity();

  for_each_combination(data.n_loci(), d, [&](std::span<const std::size_t> combo) {
    cell_indices(data, combo, idx);
    std::fill(pf.begin(), pf.end(), 0);
    std::fill(qf.begin(), qf.end(), 0);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      ++(labels[s] ? pf : qf)[fold_of[s] * cells + idx[s]];
    }
    std::fill(pt.begin(), pt.end(), 0);
    std::fill(qt.begin(), qt.end(), 0);
    for (std::size_t f = 0; f < z; ++f) {
      for (std::size_t c = 0; c < cells; ++c) {
        pt[c] += pf[f * cells + c];
        qt[c] += qf[f * cells + c];
      }
    }
    ++result.combinations;
    const double full = cer_from_counts(pt, qt, data.n_cases(), data.n_controls());
    if (full < result.full_sample.cer) {
      result.full_sample.cer = full;
      result.full_sample.loci = LocusSet({combo.begin(), combo.end()});
    }
    for (std::size_t f = 0; f < z; ++f) {
      for (std::size_t c = 0; c < cells; ++c) {
        ptrain[c] = pt[c] - pf[f * cells + c];
        qtrain[c] = qt[c] - qf[f * cells + c];
      }
      const double e = cer_from_counts(ptrain, qtrain, data.n_cases() - fold_cases[f],
                                       data.n_controls() - fold_controls[f]);
      if (e < best_cer[f]) {
        best_cer[f] = e;
        best[f].loci = LocusSet({combo.begin(), combo.end()});
        best[f].train_cer = e;
      }
    }
  });
  result.full_sample.combinations = result.combinations;

  // Test error of each fold's selected model: training labeling applied to
  // the held-out fold.
  for (std::size_t f = 0; f < z; ++f) {
    cell_indices(data, best[f].loci.indices(), idx);
    std::vector<std::uint64_t> ptr(cells, 0), qtr(cells, 0), pte(cells, 0), qte(cells, 0);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const bool test = fold_of[s] == f;
      if (labels[s]) {
        ++(test ? pte : ptr)[idx[s]];
      } else {
        ++(test ? qte : qtr)[idx[s]];
      }
    }
    const std::uint64_t train_p = data.n_cases() - fold_cases[f];
    const std::uint64_t train_q = data.n_controls() - fold_controls[f];
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (is_high(ptr[c], qtr[c], train_p, train_q, 1.0)) {
        tp += pte[c];
        fp += qte[c];
      }
    }
    best[f].test_cer = balanced_error(tp, fold_cases[f] - tp, fp, fold_controls[f] - fp);
  }
  result.folds = best;

  std::map<LocusSet, MdrModel> models;
  for (const auto& sel : best) {
    auto& m = models[sel.loci];
    m.loci = sel.loci;
    ++m.cvc;
    m.mean_train_cer += sel.train_cer;
    m.mean_test_cer += sel.test_cer;
  }
  for (auto& [loci, m] : models) {
    m.mean_train_cer /= m.cvc;
    m.mean_test_cer /= m.cvc;
    result.ranked.push_back(m);
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const MdrModel& a, const MdrModel& b) {
                     if (a.cvc != b.cvc) return a.cvc > b.cvc;
                     if (a.mean_test_cer != b.mean_test_cer) {
                       return a.mean_test_cer < b.mean_test_cer;
                     }
                     return a.loci < b.loci;
                   });
  return result;
}

}  // namespace epifmqa
