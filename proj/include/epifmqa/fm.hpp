#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "epifmqa/qubo.hpp"

namespace epifmqa {

/// Second-order factorization machine
///   y(x) = w0 + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j
/// over binary inputs. `v` is row-major n x k.
struct FmModel {
  std::size_t n = 0;
  std::size_t k = 0;
  double w0 = 0.0;
  std::vector<double> w;
  std::vector<double> v;

  FmModel() = default;
  FmModel(std::size_t n_vars, std::size_t latent);

  double& latent(std::size_t i, std::size_t f) { return v[i * k + f]; }
  double latent(std::size_t i, std::size_t f) const { return v[i * k + f]; }

  void validate() const;

  bool operator==(const FmModel&) const = default;
};

/// Same shape as FmModel; holds d(loss)/d(parameter).
using FmGradient = FmModel;

struct TrainConfig {
  std::uint32_t epochs = 300;
  double learning_rate = 0.01;
  double init_scale = 0.01;
  double l2 = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SurrogateRow {
  Bits bits;
  double cost = 0.0;
};

using SurrogateDataset = std::vector<SurrogateRow>;

/// Uses the O(nk) identity for the pairwise sum.
double predict(const FmModel& m, std::span<const std::uint8_t> bits);

/// Gradient of 0.5 * (predict - target)^2 with respect to every parameter.
FmGradient gradient(const FmModel& m, std::span<const std::uint8_t> bits, double target);

/// Training-set mean squared error.
double mse(const FmModel& m, const SurrogateDataset& data);

/// Fresh model: w0 = w = 0, v ~ Normal(0, init_scale^2) from the config seed.
FmModel init_model(std::size_t n, std::size_t k, const TrainConfig& cfg);

/// Plain SGD on squared error, one shuffled pass per epoch. Starts from
/// `init_model` unless a warm-start model is supplied.
FmModel train(const SurrogateDataset& data, std::size_t n, std::size_t k,
              const TrainConfig& cfg, const FmModel* warm_start = nullptr);

/// Q_ii = w_i, Q_ij = <v_i, v_j>. The bias w0 has no QUBO counterpart.
QuboProblem to_qubo(const FmModel& m);

}  // namespace epifmqa
