#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "epifmqa/errors.hpp"
#include "epifmqa/qubo.hpp"
#include "epifmqa/rng.hpp"

using namespace epifmqa;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

QuboProblem random_qubo(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  QuboProblem q(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) q.set(i, j, u(rng));
  }
  return q;
}

Bits random_bits(std::size_t n, Rng& rng) {
  Bits b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1u);
  return b;
}

// Independent energy: full double loop over both triangles of a dense copy.
double naive_energy(const QuboProblem& q, const Bits& x) {
  double e = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (i <= j) e += q.coeff(i, j) * x[i] * x[j];
    }
  }
  return e;
}

}  // namespace

TEST_CASE("energy worked examples", "[qubo]") {
  QuboProblem q(2);
  q.set(0, 0, 1.0);
  q.set(0, 1, -2.0);
  q.set(1, 1, 1.0);
  CHECK(energy(q, Bits{1, 1}) == 0.0);
  CHECK(energy(q, Bits{0, 0}) == 0.0);

  QuboProblem p(2);
  p.set(0, 0, 0.5);
  p.set(1, 1, -0.3);
  p.set(0, 1, 0.5);
  CHECK(energy(p, Bits{1, 0}) == 0.5);

  CHECK_THROWS_AS(energy(q, Bits{1, 0, 1}), ContractViolation);
}

TEST_CASE("coefficients live on the upper triangle only", "[qubo]") {
  QuboProblem q(3);
  CHECK_THROWS_AS(q.set(2, 1, 1.0), ContractViolation);
  CHECK_THROWS_AS(q.coeff(0, 3), ContractViolation);
  CHECK_THROWS_AS(q.set(0, 1, std::nan("")), ContractViolation);
  q.set(1, 2, 4.0);
  CHECK(q.coeff(1, 2) == 4.0);
}

TEST_CASE("packed energy agrees with a dense double loop", "[qubo]") {
  Rng rng(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto q = random_qubo(9, s);
    const auto x = random_bits(9, rng);
    CHECK_THAT(energy(q, x), WithinAbs(naive_energy(q, x), 1e-12));
  }
}

TEST_CASE("cardinality penalty coefficients", "[qubo]") {
  QuboProblem q(4);
  const auto p = add_cardinality_penalty(q, 3, 2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(p.coeff(i, i) == -10.0);
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(p.coeff(i, j) == 4.0);
  }
  REQUIRE(p.penalties().size() == 1);
  CHECK(p.penalties()[0].dropped_constant == 18.0);
  CHECK(p.dropped_constant() == 18.0);

  // Four ones with d = 3: penalty contribution 2 * (4 - 3)^2.
  CHECK(energy(p, Bits{1, 1, 1, 1}) + 18.0 == 2.0);
  CHECK(energy(p, Bits{1, 1, 1, 0}) + 18.0 == 0.0);

  CHECK_THROWS_AS(add_cardinality_penalty(q, 5, 2.0), ContractViolation);
  CHECK_THROWS_AS(add_cardinality_penalty(q, 2, 0.0), ContractViolation);
  CHECK_THROWS_AS(add_cardinality_penalty(q, 2, -1.0), ContractViolation);
}

TEST_CASE("penalty identity holds for every assignment", "[qubo][property]") {
  Rng rng(11);
  for (std::uint64_t s = 0; s < 25; ++s) {
    const std::size_t n = 3 + s % 8;
    const std::size_t d = 1 + s % n;
    const double lambda = 0.25 + static_cast<double>(s % 5);
    const auto q = random_qubo(n, 100 + s);
    const auto p = add_cardinality_penalty(q, d, lambda);
    for (int trial = 0; trial < 30; ++trial) {
      const auto x = random_bits(n, rng);
      const double k = static_cast<double>(popcount(x)) - static_cast<double>(d);
      const double lhs = energy(p, x) + p.dropped_constant() - energy(q, x);
      const double rhs = lambda * k * k;
      CHECK_THAT(lhs, WithinAbs(rhs, 1e-9 * std::max(1.0, std::abs(rhs))));
    }
  }
}

TEST_CASE("normalize", "[qubo]") {
  QuboProblem q(2);
  q.set(0, 0, 2.0);
  q.set(0, 1, -4.0);
  const auto n = normalize(q);
  CHECK(n.coeff(0, 0) == 0.5);
  CHECK(n.coeff(0, 1) == -1.0);
  CHECK(n.coeff(1, 1) == 0.0);
  CHECK(n.max_abs_coeff() == 1.0);
  CHECK(normalize(n) == n);

  const QuboProblem zero(3);
  CHECK(normalize(zero) == zero);
}

TEST_CASE("normalize preserves the argmin", "[qubo][property]") {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto q = random_qubo(4 + s % 10, 500 + s);
    const auto a = brute_force(q);
    const auto b = brute_force(normalize(q));
    CHECK(a.bits == b.bits);
    CHECK_THAT(b.energy * q.max_abs_coeff(), WithinRel(a.energy, 1e-12));
  }
}

TEST_CASE("brute force", "[qubo]") {
  QuboProblem one(1);
  one.set(0, 0, 5.0);
  auto s = brute_force(one);
  CHECK(s.bits == Bits{0});
  CHECK(s.energy == 0.0);

  // Four cases: 00 -> 0, 01 -> -1, 10 -> -1, 11 -> 1. Tie goes to (0,1).
  QuboProblem two(2);
  two.set(0, 0, -1.0);
  two.set(1, 1, -1.0);
  two.set(0, 1, 3.0);
  s = brute_force(two);
  CHECK(s.bits == Bits{0, 1});
  CHECK(s.energy == -1.0);

  s = brute_force(QuboProblem(6));
  CHECK(s.bits == Bits(6, 0));
  CHECK(s.energy == 0.0);

  CHECK_THROWS_AS(brute_force(QuboProblem(25)), RefusalError);
}

TEST_CASE("annealing finds a unique optimum", "[qubo][sa]") {
  QuboProblem q(5);
  q.set(0, 0, -1.0);
  const auto s = solve_sa(q, AnnealParams{});
  CHECK(s.bits == Bits{1, 0, 0, 0, 0});
  CHECK(s.energy == -1.0);
}

TEST_CASE("annealing is deterministic and reports its own energy", "[qubo][sa]") {
  const auto q = random_qubo(30, 9);
  AnnealParams a;
  a.sweeps = 200;
  a.seed = 77;
  const auto s1 = solve_sa(q, a);
  const auto s2 = solve_sa(q, a);
  CHECK(s1.bits == s2.bits);
  CHECK(s1.energy == s2.energy);
  CHECK_THAT(s1.energy, WithinAbs(energy(q, s1.bits), 1e-10 * std::max(1.0, std::abs(s1.energy))));
}

TEST_CASE("annealing matches exhaustive enumeration at n = 12", "[qubo][sa]") {
  int matches = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto q = random_qubo(12, 1000 + s);
    AnnealParams a;
    a.seed = s;
    const auto got = solve_sa(q, a);
    const auto want = brute_force(q);
    if (std::abs(got.energy - want.energy) <= 1e-9) ++matches;
  }
  CHECK(matches >= 28);
}

TEST_CASE("anneal parameter validation", "[qubo][sa]") {
  AnnealParams a;
  a.beta_final = a.beta_initial;
  CHECK_THROWS_AS(solve_sa(QuboProblem(2), a), ContractViolation);
  a = {};
  a.sweeps = 0;
  CHECK_THROWS_AS(solve_sa(QuboProblem(2), a), ContractViolation);
  a = {};
  a.restarts = 0;
  CHECK_THROWS_AS(solve_sa(QuboProblem(2), a), ContractViolation);
  CHECK_THROWS_AS(solve_sa(QuboProblem(0), AnnealParams{}), ContractViolation);
}
