#include <algorithm>
#include <map>
#include <numeric>

#include "catch2/catch_amalgamated.hpp"
#include "epifmqa/errors.hpp"
#include "epifmqa/mdr.hpp"
#include "epifmqa/rng.hpp"

using namespace epifmqa;
using Catch::Matchers::WithinAbs;

namespace {

GenotypeDataset random_dataset(std::size_t samples, std::size_t loci, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> rows(samples * loci);
  for (auto& g : rows) g = static_cast<std::uint8_t>(uniform_index(rng, 3));
  std::vector<std::uint8_t> labels(samples);
  for (std::size_t s = 0; s < samples; ++s) labels[s] = s % 2;
  return GenotypeDataset(loci, rows, labels);
}

// Phenotype is a deterministic function of loci a and b with no marginal
// effect at either: case iff (g_a + g_b) is odd.
GenotypeDataset planted_pair(std::size_t samples, std::size_t loci, std::size_t a,
                             std::size_t b, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> rows(samples * loci);
  std::vector<std::uint8_t> labels(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t l = 0; l < loci; ++l) {
      rows[s * loci + l] = static_cast<std::uint8_t>(uniform_index(rng, 3));
    }
    labels[s] = (rows[s * loci + a] + rows[s * loci + b]) % 2;
  }
  return GenotypeDataset(loci, rows, labels);
}

// Independent pipeline: genotype tuples as map keys, theta via division.
double manual_cer(const GenotypeDataset& data, const std::vector<std::size_t>& loci) {
  std::map<std::vector<int>, std::pair<double, double>> cells;
  double total_p = 0, total_n = 0;
  for (std::size_t s = 0; s < data.n_samples(); ++s) {
    std::vector<int> key;
    for (std::size_t l : loci) key.push_back(data.genotype(s, l));
    if (data.is_case(s)) {
      cells[key].first += 1;
      total_p += 1;
    } else {
      cells[key].second += 1;
      total_n += 1;
    }
  }
  double tp = 0, fp = 0;
  for (const auto& [key, pn] : cells) {
    const auto [p, n] = pn;
    const bool high = n == 0 ? p > 0 : (p / n) / (total_p / total_n) > 1.0;
    if (high) {
      tp += p;
      fp += n;
    }
  }
  return 0.5 * ((total_p - tp) / total_p + fp / total_n);
}

CellTable table_of(std::vector<std::uint32_t> cases, std::vector<std::uint32_t> controls) {
  CellTable t;
  t.cases = std::move(cases);
  t.controls = std::move(controls);
  t.total_cases = std::accumulate(t.cases.begin(), t.cases.end(), std::uint64_t{0});
  t.total_controls = std::accumulate(t.controls.begin(), t.controls.end(), std::uint64_t{0});
  return t;
}

}  // namespace

TEST_CASE("dataset validation", "[mdr]") {
  const std::vector<std::uint8_t> rows{0, 1, 2, 0};
  CHECK_NOTHROW(GenotypeDataset(2, rows, {0, 1}));
  CHECK_THROWS_AS(GenotypeDataset(2, rows, {1, 1}), ContractViolation);
  CHECK_THROWS_AS(GenotypeDataset(2, rows, {0, 0}), ContractViolation);
  const std::vector<std::uint8_t> bad{0, 3, 2, 0};
  CHECK_THROWS_AS(GenotypeDataset(2, bad, {0, 1}), ContractViolation);
  CHECK_THROWS_AS(GenotypeDataset(3, rows, {0, 1}), ContractViolation);
}

TEST_CASE("locus sets", "[mdr]") {
  const LocusSet s({7, 2, 5});
  CHECK(s.indices() == std::vector<std::size_t>{2, 5, 7});
  CHECK(s.to_string() == "2,5,7");
  CHECK(LocusSet::parse("7,2,5") == s);
  CHECK(LocusSet::from_bits(s.to_bits(9)) == s);
  CHECK_THROWS_AS(LocusSet({1, 1}), ContractViolation);
  CHECK_THROWS_AS(s.check_against(7), ContractViolation);
  CHECK_THROWS_AS(LocusSet::parse("1,,2"), ContractViolation);
}

TEST_CASE("build_cells worked examples", "[mdr]") {
  {
    const std::vector<std::uint8_t> rows{0, 0, 0, 0};
    const GenotypeDataset data(1, rows, {1, 0, 1, 0});
    const auto t = build_cells(data, LocusSet({0}));
    CHECK(t.cases == std::vector<std::uint32_t>{2, 0, 0});
    CHECK(t.controls == std::vector<std::uint32_t>{2, 0, 0});
  }
  {
    // (0,0),(0,0),(1,2),(1,2) with labels case, control, case, control.
    const std::vector<std::uint8_t> rows{0, 0, 0, 0, 1, 2, 1, 2};
    const GenotypeDataset data(2, rows, {1, 0, 1, 0});
    const auto t = build_cells(data, LocusSet({0, 1}));
    REQUIRE(t.n_cells() == 9);
    // Little-endian: (1,2) -> 1 + 2*3 = 7.
    CHECK(t.cases[0] == 1);
    CHECK(t.controls[0] == 1);
    CHECK(t.cases[7] == 1);
    CHECK(t.controls[7] == 1);
    CHECK(std::accumulate(t.cases.begin(), t.cases.end(), 0u) == 2);
  }
  const auto data = random_dataset(300, 6, 1);
  const auto t = build_cells(data, LocusSet({1, 3, 4}));
  CHECK(std::accumulate(t.cases.begin(), t.cases.end(), std::uint64_t{0}) == t.total_cases);
  CHECK(std::accumulate(t.controls.begin(), t.controls.end(), std::uint64_t{0}) ==
        t.total_controls);
  CHECK(t.total_cases + t.total_controls == 300);

  CHECK_THROWS_AS(build_cells(data, LocusSet()), ContractViolation);
  CHECK_THROWS_AS(build_cells(data, LocusSet({0, 6})), ContractViolation);
}

TEST_CASE("risk labeling", "[mdr]") {
  // P* = N* = 500 across four cells.
  const auto t = table_of({10, 3, 0, 5, 482}, {5, 0, 0, 5, 490});
  REQUIRE(t.total_cases == 500);
  REQUIRE(t.total_controls == 500);
  CHECK(risk_ratio(10, 5, 500, 500) == 2.0);
  CHECK(std::isinf(risk_ratio(3, 0, 500, 500)));
  CHECK(risk_ratio(0, 0, 500, 500) == 0.0);
  CHECK(risk_ratio(5, 5, 500, 500) == 1.0);

  const auto lab = label_risk(t);
  CHECK(lab.high[0] == 1);  // theta = 2
  CHECK(lab.high[1] == 1);  // case-only cell
  CHECK(lab.high[2] == 0);  // empty cell
  CHECK(lab.high[3] == 0);  // theta == T
  CHECK(lab.high[4] == 0);  // theta < 1

  CHECK_THROWS_AS(label_risk(table_of({0, 0}, {4, 1})), ContractViolation);
  CHECK_THROWS_AS(label_risk(table_of({4, 1}, {0, 0})), ContractViolation);
}

TEST_CASE("risk boundary is exact under unequal totals", "[mdr]") {
  // theta = (3/7) / (300/700) == 1 exactly in rational arithmetic.
  const auto t = table_of({3, 297}, {7, 693});
  CHECK(label_risk(t).high[0] == 0);
}

TEST_CASE("confusion and CER", "[mdr]") {
  const auto t = table_of({10, 490}, {5, 495});
  RiskLabeling lab{{1, 0}, 1.0};
  const auto c = confusion(t, lab);
  CHECK(c == ConfusionCounts{10, 5, 495, 490});

  CHECK(confusion(t, {{1, 1}, 1.0}) == ConfusionCounts{500, 500, 0, 0});
  CHECK(confusion(t, {{0, 0}, 1.0}) == ConfusionCounts{0, 0, 500, 500});
  CHECK_THROWS_AS(confusion(t, {{1}, 1.0}), ContractViolation);

  CHECK_THAT(cer({400, 100, 400, 100}), WithinAbs(0.2, 1e-15));
  CHECK(cer({400, 0, 400, 0}) == 0.0);
  CHECK(cer({500, 500, 0, 0}) == 0.5);
  CHECK(cer({0, 0, 500, 500}) == 0.5);
  CHECK_THROWS_AS(cer({0, 3, 3, 0}), ContractViolation);
}

TEST_CASE("evaluate_cer against a hand-rolled pipeline", "[mdr][oracle]") {
  // 12 samples, 3 loci.
  const std::vector<std::uint8_t> rows{0, 1, 2, 0, 1, 2, 1, 1, 0, 2, 0, 1, 0, 0, 0, 1, 2, 2,
                                       1, 1, 0, 2, 2, 2, 0, 1, 2, 1, 0, 0, 2, 0, 1, 0, 1, 2};
  const GenotypeDataset data(3, rows, {1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1});
  for (const auto& loci : std::vector<std::vector<std::size_t>>{{0}, {1}, {0, 1}, {0, 2}, {0, 1, 2}}) {
    CHECK_THAT(evaluate_cer(data, LocusSet(loci)), WithinAbs(manual_cer(data, loci), 1e-15));
  }
  const auto big = random_dataset(500, 8, 9);
  for (const auto& loci : std::vector<std::vector<std::size_t>>{{2, 5}, {0, 3, 7}, {1, 2, 4, 6}}) {
    CHECK_THAT(evaluate_cer(big, LocusSet(loci)), WithinAbs(manual_cer(big, loci), 1e-15));
  }
}

TEST_CASE("CER properties", "[mdr][property]") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto data = random_dataset(120 + s, 6, s);
    Rng rng(s);
    std::vector<std::size_t> order(data.n_samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto shuffled = data.permuted(order);
    const LocusSet loci({s % 6, (s + 2) % 6});
    const double e = evaluate_cer(data, loci);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    CHECK(evaluate_cer(shuffled, loci) == e);
    CHECK(evaluate_cer(data, LocusSet({(s + 2) % 6, s % 6})) == e);

    const auto cells = build_cells(data, loci);
    const auto c = confusion(cells, label_risk(cells));
    CHECK(c.tp + c.fn + c.fp + c.tn == data.n_samples());
  }
}

TEST_CASE("label-permuted data gives CER near 0.5", "[mdr][oracle]") {
  const auto data = planted_pair(2000, 10, 2, 7, 4);
  Rng rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::uint8_t> labels(data.labels().begin(), data.labels().end());
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto null = data.with_labels(labels);
    CHECK_THAT(evaluate_cer(null, LocusSet({2, 7})), WithinAbs(0.5, 0.05));
  }
}

TEST_CASE("planted 0/1 model: truth has zero CER and beats disjoint sets", "[mdr][property]") {
  const auto data = planted_pair(600, 8, 1, 5, 21);
  CHECK(evaluate_cer(data, LocusSet({1, 5})) == 0.0);
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = a + 1; b < 8; ++b) {
      if (a == 1 || a == 5 || b == 1 || b == 5) continue;
      CHECK(evaluate_cer(data, LocusSet({a, b})) > 0.0);
    }
  }
}

TEST_CASE("combination counts", "[mdr]") {
  CHECK(combination_count(20, 3) == 1140);
  CHECK(combination_count(100, 3) == 161700);
  CHECK(combination_count(1000, 5) == 8250291250200ULL);
  CHECK(combination_count(5, 0) == 1);
  CHECK(combination_count(3, 5) == 0);
  CHECK(combination_count(200, 100) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("stratified folds balance cases and controls", "[mdr]") {
  const auto data = random_dataset(203, 3, 2);
  const auto fold_of = stratified_folds(data, 10, 5);
  std::vector<int> cases(10), controls(10);
  for (std::size_t s = 0; s < data.n_samples(); ++s) ++(data.is_case(s) ? cases : controls)[fold_of[s]];
  CHECK(*std::max_element(cases.begin(), cases.end()) - *std::min_element(cases.begin(), cases.end()) <= 1);
  CHECK(*std::max_element(controls.begin(), controls.end()) -
            *std::min_element(controls.begin(), controls.end()) <= 1);
  CHECK_THROWS_AS(stratified_folds(data, 1, 0), ContractViolation);
  CHECK_THROWS_AS(stratified_folds(random_dataset(10, 2, 1), 10, 0), ContractViolation);
}

TEST_CASE("exhaustive MDR selects a planted pair in every fold", "[mdr][oracle]") {
  const auto data = planted_pair(800, 20, 4, 13, 33);
  ExhaustiveConfig cfg;
  cfg.d = 2;
  cfg.folds = 10;
  cfg.seed = 1;
  const auto r = exhaustive_mdr(data, cfg);
  CHECK(r.combinations == 190);
  REQUIRE_FALSE(r.ranked.empty());
  CHECK(r.ranked[0].loci == LocusSet({4, 13}));
  CHECK(r.ranked[0].cvc == 10);
  CHECK(r.ranked[0].mean_test_cer == 0.0);
  CHECK(r.full_sample.loci == LocusSet({4, 13}));
  CHECK(r.full_sample.cer == 0.0);

  const auto again = exhaustive_mdr(data, cfg);
  REQUIRE(again.ranked.size() == r.ranked.size());
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    CHECK(again.ranked[i].loci == r.ranked[i].loci);
    CHECK(again.ranked[i].mean_test_cer == r.ranked[i].mean_test_cer);
  }
}

TEST_CASE("exhaustive training CER matches the direct pipeline per fold", "[mdr][oracle]") {
  const auto data = random_dataset(240, 7, 77);
  ExhaustiveConfig cfg;
  cfg.d = 2;
  cfg.folds = 4;
  cfg.seed = 8;
  const auto r = exhaustive_mdr(data, cfg);
  CHECK(r.combinations == 21);
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    std::vector<std::uint8_t> rows;
    std::vector<std::uint8_t> labels;
    for (std::size_t s = 0; s < data.n_samples(); ++s) {
      if (r.fold_of[s] == f) continue;
      for (std::size_t l = 0; l < data.n_loci(); ++l) rows.push_back(data.genotype(s, l));
      labels.push_back(data.labels()[s]);
    }
    const GenotypeDataset train(data.n_loci(), rows, labels);
    const auto best = exhaustive_min_cer(train, 2);
    CHECK(r.folds[f].loci == best.loci);
    CHECK_THAT(r.folds[f].train_cer, WithinAbs(best.cer, 1e-15));
  }
}

TEST_CASE("exhaustive enumeration for d = 3 and the cap", "[mdr]") {
  const auto data = random_dataset(200, 20, 3);
  ExhaustiveConfig cfg;
  cfg.d = 3;
  cfg.folds = 5;
  CHECK(exhaustive_mdr(data, cfg).combinations == 1140);

  const auto wide = random_dataset(40, 100, 4);
  cfg.cap = 161699;
  try {
    exhaustive_mdr(wide, cfg);
    FAIL("expected refusal");
  } catch (const RefusalError& e) {
    CHECK(e.required() == 161700);
    CHECK(std::string(e.what()).find("161700") != std::string::npos);
  }
  CHECK(exhaustive_min_cer(wide, 3, 161700).combinations == 161700);
  CHECK_THROWS_AS(exhaustive_min_cer(wide, 3, 161699), RefusalError);
}
