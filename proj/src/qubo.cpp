#include "epifmqa/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "epifmqa/errors.hpp"
#include "epifmqa/rng.hpp"

namespace epifmqa {

std::size_t popcount(std::span<const std::uint8_t> bits) {
  return static_cast<std::size_t>(
      std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

QuboProblem::QuboProblem(std::size_t n) : n_(n), coeffs_(n * (n + 1) / 2, 0.0) {}

std::size_t QuboProblem::index(std::size_t i, std::size_t j) const {
  if (i > j || j >= n_) {
    throw ContractViolation("QUBO index (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") outside upper triangle of size " +
                            std::to_string(n_));
  }
  // Row i starts after rows 0..i-1, which hold n, n-1, ..., n-i+1 entries.
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

double QuboProblem::coeff(std::size_t i, std::size_t j) const {
  return coeffs_[index(i, j)];
}

void QuboProblem::set(std::size_t i, std::size_t j, double value) {
  if (!std::isfinite(value)) throw ContractViolation("QUBO coefficient must be finite");
  coeffs_[index(i, j)] = value;
}

void QuboProblem::add(std::size_t i, std::size_t j, double value) {
  set(i, j, coeff(i, j) + value);
}

double QuboProblem::max_abs_coeff() const noexcept {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

double QuboProblem::dropped_constant() const noexcept {
  double total = 0.0;
  for (const auto& p : penalties_) total += p.dropped_constant;
  return total;
}

double energy(const QuboProblem& q, std::span<const std::uint8_t> bits) {
  const std::size_t n = q.size();
  if (bits.size() != n) {
    throw ContractViolation("energy: bit vector has length " + std::to_string(bits.size()) +
                            ", QUBO has " + std::to_string(n) + " variables");
  }
  const auto& c = q.packed();
  double e = 0.0;
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (bits[i]) {
      for (std::size_t j = i; j < n; ++j) {
        if (bits[j]) e += c[row + (j - i)];
      }
    }
    row += n - i;
  }
  return e;
}

QuboProblem add_cardinality_penalty(const QuboProblem& q, std::size_t d, double lambda) {
  if (d > q.size()) {
    throw ContractViolation("cardinality penalty: d=" + std::to_string(d) +
                            " exceeds variable count " + std::to_string(q.size()));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation("cardinality penalty: lambda must be positive");
  }
  // lambda * (sum x - d)^2 = lambda * [sum_i (1 - 2d) x_i + 2 sum_{i<j} x_i x_j + d^2]
  QuboProblem out = q;
  const double diag = lambda * (1.0 - 2.0 * static_cast<double>(d));
  const double off = 2.0 * lambda;
  const std::size_t n = q.size();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.coeffs_[k++] += diag;
    for (std::size_t j = i + 1; j < n; ++j) out.coeffs_[k++] += off;
  }
  const double dd = static_cast<double>(d);
  out.penalties_.push_back({d, lambda, lambda * dd * dd});
  return out;
}

QuboProblem normalize(const QuboProblem& q) {
  const double scale = q.max_abs_coeff();
  if (scale == 0.0) return q;
  QuboProblem out = q;
  for (double& c : out.coeffs_) c /= scale;
  for (auto& p : out.penalties_) {
    p.lambda /= scale;
    p.dropped_constant /= scale;
  }
  return out;
}

void AnnealParams::validate() const {
  if (sweeps < 1) throw ContractViolation("anneal: sweeps must be >= 1");
  if (restarts < 1) throw ContractViolation("anneal: restarts must be >= 1");
  if (!(beta_initial > 0.0)) throw ContractViolation("anneal: beta_initial must be > 0");
  if (!(beta_final > beta_initial)) {
    throw ContractViolation("anneal: beta_final must exceed beta_initial");
  }
}

namespace {

bool better(const BinarySolution& a, const BinarySolution& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  return std::lexicographical_compare(a.bits.begin(), a.bits.end(), b.bits.begin(),
                                      b.bits.end());
}

// Dense symmetric coupling matrix with a zero diagonal, plus the linear terms.
struct Couplings {
  std::size_t n;
  std::vector<double> linear;
  std::vector<double> sym;

  explicit Couplings(const QuboProblem& q) : n(q.size()), linear(n), sym(n * n, 0.0) {
    const auto& c = q.packed();
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      linear[i] = c[k++];
      for (std::size_t j = i + 1; j < n; ++j) {
        sym[i * n + j] = c[k];
        sym[j * n + i] = c[k];
        ++k;
      }
    }
  }
};

BinarySolution anneal_once(const QuboProblem& q, const Couplings& cp,
                           const AnnealParams& params, std::uint64_t restart) {
  const std::size_t n = cp.n;
  Rng rng = make_rng(params.seed, restart);

  Bits x(n);
  for (auto& b : x) b = static_cast<std::uint8_t>(rng() >> 63);

  // field[i] = sum_{j != i} S_ij x_j
  std::vector<double> field(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!x[j]) continue;
    const double* row = &cp.sym[j * n];
    for (std::size_t i = 0; i < n; ++i) field[i] += row[i];
  }
  double e = energy(q, x);

  Bits best = x;
  double best_e = e;

  const double ratio = params.beta_final / params.beta_initial;
  const double denom = params.sweeps > 1 ? static_cast<double>(params.sweeps - 1) : 1.0;
  for (std::uint32_t s = 0; s < params.sweeps; ++s) {
    const double frac = params.sweeps > 1 ? static_cast<double>(s) / denom : 1.0;
    const double beta = params.beta_initial * std::pow(ratio, frac);
    for (std::size_t i = 0; i < n; ++i) {
      const double local = cp.linear[i] + field[i];
      const double delta = x[i] ? -local : local;
      if (delta > 0.0 && uniform01(rng) >= std::exp(-beta * delta)) continue;
      const double sign = x[i] ? -1.0 : 1.0;
      x[i] ^= 1u;
      e += delta;
      const double* row = &cp.sym[i * n];
      for (std::size_t j = 0; j < n; ++j) field[j] += sign * row[j];
    }
    if (e < best_e) {
      best_e = e;
      best = x;
    }
  }
  return {best, energy(q, best)};
}

}  // namespace

BinarySolution solve_sa(const QuboProblem& q, const AnnealParams& params) {
  params.validate();
  if (q.size() == 0) throw ContractViolation("solve_sa: empty QUBO");
  const Couplings cp(q);
  BinarySolution best = anneal_once(q, cp, params, 0);
  for (std::uint32_t r = 1; r < params.restarts; ++r) {
    BinarySolution cand = anneal_once(q, cp, params, r);
    if (better(cand, best)) best = std::move(cand);
  }
  return best;
}

BinarySolution brute_force(const QuboProblem& q) {
  const std::size_t n = q.size();
  if (n > kBruteForceMaxVars) {
    throw RefusalError("brute_force: " + std::to_string(n) + " variables exceeds the limit of " +
                           std::to_string(kBruteForceMaxVars),
                       std::uint64_t{1} << std::min<std::size_t>(n, 63));
  }
  // Enumerate in increasing integer order with bits[0] as the most significant
  // digit, which is lexicographic order over vectors. Strict improvement keeps
  // the earliest (lexicographically smallest) minimizer.
  Bits x(n, 0);
  BinarySolution best{x, 0.0};
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t m = 1; m < total; ++m) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((m >> (n - 1 - i)) & 1u);
    const double e = energy(q, x);
    if (e < best.energy) best = {x, e};
  }
  return best;
}

}  // namespace epifmqa
