#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace epifmqa {

using Bits = std::vector<std::uint8_t>;

std::size_t popcount(std::span<const std::uint8_t> bits);

/// Bookkeeping for a folded-in lambda * (sum(x) - d)^2 term. The constant
/// lambda * d^2 is not part of the QUBO energy and is kept here instead.
struct CardinalityPenalty {
  std::size_t d = 0;
  double lambda = 0.0;
  double dropped_constant = 0.0;

  bool operator==(const CardinalityPenalty&) const = default;
};

/// Upper-triangular QUBO over n binary variables. Diagonal entries are the
/// linear terms (x_i^2 == x_i). Storage is packed row-major over i <= j.
class QuboProblem {
 public:
  QuboProblem() = default;
  explicit QuboProblem(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// Requires i <= j < size().
  double coeff(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);
  void add(std::size_t i, std::size_t j, double value);

  double max_abs_coeff() const noexcept;

  const std::vector<CardinalityPenalty>& penalties() const noexcept {
    return penalties_;
  }
  /// Sum of every penalty's dropped constant.
  double dropped_constant() const noexcept;

  const std::vector<double>& packed() const noexcept { return coeffs_; }

  bool operator==(const QuboProblem&) const = default;

 private:
  friend QuboProblem add_cardinality_penalty(const QuboProblem&, std::size_t,
                                             double);
  friend QuboProblem normalize(const QuboProblem&);

  std::size_t index(std::size_t i, std::size_t j) const;

  std::size_t n_ = 0;
  std::vector<double> coeffs_;
  std::vector<CardinalityPenalty> penalties_;
};

/// sum_{i<=j} Q_ij x_i x_j.
double energy(const QuboProblem& q, std::span<const std::uint8_t> bits);

/// Folds lambda * (sum(x) - d)^2 into q, minus its constant lambda * d^2.
QuboProblem add_cardinality_penalty(const QuboProblem& q, std::size_t d,
                                    double lambda);

/// Divides every coefficient by the largest magnitude. All-zero input is
/// returned unchanged. Penalty metadata is rescaled alongside.
QuboProblem normalize(const QuboProblem& q);

struct BinarySolution {
  Bits bits;
  double energy = 0.0;
};

struct AnnealParams {
  std::uint32_t sweeps = 2000;
  double beta_initial = 0.1;
  double beta_final = 10.0;
  std::uint32_t restarts = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Single-bit-flip Metropolis annealing with a geometric inverse-temperature
/// schedule. Each restart draws from its own stream derived from
/// (seed, restart index), so the result does not depend on execution order.
/// Among equal energies the lexicographically smallest bit vector wins.
BinarySolution solve_sa(const QuboProblem& q, const AnnealParams& params);

inline constexpr std::size_t kBruteForceMaxVars = 24;

/// Exact minimum over all 2^n assignments; ties go to the lexicographically
/// smallest vector. Throws RefusalError when n > kBruteForceMaxVars.
BinarySolution brute_force(const QuboProblem& q);

}  // namespace epifmqa
