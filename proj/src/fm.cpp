#include "epifmqa/fm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "epifmqa/errors.hpp"
#include "epifmqa/rng.hpp"

namespace epifmqa {

FmModel::FmModel(std::size_t n_vars, std::size_t latent)
    : n(n_vars), k(latent), w(n_vars, 0.0), v(n_vars * latent, 0.0) {}

void FmModel::validate() const {
  if (k < 1) throw ContractViolation("FM: latent dimension must be >= 1");
  if (w.size() != n || v.size() != n * k) throw ContractViolation("FM: parameter shape mismatch");
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::isfinite(w0) || !std::all_of(w.begin(), w.end(), finite) ||
      !std::all_of(v.begin(), v.end(), finite)) {
    throw ContractViolation("FM: non-finite parameter");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractViolation("train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractViolation("train: learning_rate must be > 0");
  if (!(init_scale > 0.0)) throw ContractViolation("train: init_scale must be > 0");
  if (!(l2 >= 0.0)) throw ContractViolation("train: l2 must be >= 0");
}

namespace {

void check_dims(const FmModel& m, std::size_t len) {
  if (len != m.n) {
    throw ContractViolation("FM: bit vector has length " + std::to_string(len) +
                            ", model has " + std::to_string(m.n) + " variables");
  }
}

std::vector<std::size_t> active_indices(std::span<const std::uint8_t> bits) {
  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) on.push_back(i);
  }
  return on;
}

// Prediction over the active set; fills sums[f] = sum_{i active} v_if.
double predict_sparse(const FmModel& m, std::span<const std::size_t> on,
                      std::vector<double>& sums) {
  sums.assign(m.k, 0.0);
  double y = m.w0;
  double sq = 0.0;
  for (std::size_t i : on) {
    y += m.w[i];
    const double* vi = &m.v[i * m.k];
    for (std::size_t f = 0; f < m.k; ++f) {
      sums[f] += vi[f];
      sq += vi[f] * vi[f];
    }
  }
  double total = 0.0;
  for (double s : sums) total += s * s;
  return y + 0.5 * (total - sq);
}

}  // namespace

double predict(const FmModel& m, std::span<const std::uint8_t> bits) {
  check_dims(m, bits.size());
  std::vector<double> sums;
  const auto on = active_indices(bits);
  return predict_sparse(m, on, sums);
}

FmGradient gradient(const FmModel& m, std::span<const std::uint8_t> bits, double target) {
  check_dims(m, bits.size());
  std::vector<double> sums;
  const auto on = active_indices(bits);
  const double residual = predict_sparse(m, on, sums) - target;

  FmGradient g(m.n, m.k);
  g.w0 = residual;
  for (std::size_t i : on) {
    g.w[i] = residual;
    for (std::size_t f = 0; f < m.k; ++f) {
      g.latent(i, f) = residual * (sums[f] - m.latent(i, f));
    }
  }
  return g;
}

double mse(const FmModel& m, const SurrogateDataset& data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& row : data) {
    const double r = predict(m, row.bits) - row.cost;
    total += r * r;
  }
  return total / static_cast<double>(data.size());
}

FmModel init_model(std::size_t n, std::size_t k, const TrainConfig& cfg) {
  if (k < 1) throw ContractViolation("FM: latent dimension must be >= 1");
  FmModel m(n, k);
  Rng rng = make_rng(cfg.seed, 0);
  std::normal_distribution<double> normal(0.0, cfg.init_scale);
  for (double& x : m.v) x = normal(rng);
  return m;
}

FmModel train(const SurrogateDataset& data, std::size_t n, std::size_t k,
              const TrainConfig& cfg, const FmModel* warm_start) {
  cfg.validate();
  if (data.empty()) throw ContractViolation("train: empty dataset");
  for (const auto& row : data) {
    if (row.bits.size() != n) throw ContractViolation("train: row length differs from n");
    if (!std::isfinite(row.cost)) throw ContractViolation("train: non-finite cost");
  }

  FmModel m;
  if (warm_start != nullptr) {
    if (warm_start->n != n || warm_start->k != k) {
      throw ContractViolation("train: warm-start model shape mismatch");
    }
    m = *warm_start;
  } else {
    m = init_model(n, k, cfg);
  }

  std::vector<std::vector<std::size_t>> active;
  active.reserve(data.size());
  for (const auto& row : data) active.push_back(active_indices(row.bits));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(cfg.seed, 1);

  const double lr = cfg.learning_rate;
  const double l2 = cfg.l2;
  std::vector<double> sums;
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t r : order) {
      const auto& on = active[r];
      const double residual = predict_sparse(m, on, sums) - data[r].cost;
      m.w0 -= lr * residual;
      // Only parameters touched by this row are updated (and regularized).
      for (std::size_t i : on) {
        m.w[i] -= lr * (residual + l2 * m.w[i]);
        double* vi = &m.v[i * k];
        for (std::size_t f = 0; f < k; ++f) {
          const double g = residual * (sums[f] - vi[f]);
          vi[f] -= lr * (g + l2 * vi[f]);
        }
      }
    }
  }
  return m;
}

QuboProblem to_qubo(const FmModel& m) {
  QuboProblem q(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    q.set(i, i, m.w[i]);
    const double* vi = &m.v[i * m.k];
    for (std::size_t j = i + 1; j < m.n; ++j) {
      const double* vj = &m.v[j * m.k];
      double dot = 0.0;
      for (std::size_t f = 0; f < m.k; ++f) dot += vi[f] * vj[f];
      q.set(i, j, dot);
    }
  }
  return q;
}

}  // namespace epifmqa
