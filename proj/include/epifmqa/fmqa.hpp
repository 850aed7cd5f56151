#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epifmqa/fm.hpp"
#include "epifmqa/mdr.hpp"
#include "epifmqa/qubo.hpp"
#include "epifmqa/rng.hpp"

namespace epifmqa {

struct RunConfig {
  std::size_t d = 3;
  double lambda = 2.0;
  std::size_t n_initial = 10;
  std::size_t max_iterations = 1000;
  std::size_t neighbors_per_iteration = 1;
  std::size_t latent_k = 10;
  TrainConfig fm;
  AnnealParams anneal;
  std::uint64_t seed = 0;
  /// Start each iteration's training from the previous model.
  bool warm_start = false;
  /// Reuse cached CER for repeated locus sets and keep them out of the
  /// surrogate dataset.
  bool dedupe = false;
  /// End the loop after the iteration in which the truth is first evaluated.
  bool stop_on_success = false;

  void validate() const;
};

enum class Origin { initial, annealer, neighbor };

std::string to_string(Origin origin);
Origin parse_origin(const std::string& text);

struct TraceRecord {
  std::size_t iteration = 0;
  Origin origin = Origin::initial;
  LocusSet loci;
  double cer = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

/// Evaluations in order. Records from the initial design carry iteration 0.
struct RunTrace {
  std::vector<TraceRecord> records;
  /// Index of the incumbent (lowest CER, earliest on ties).
  std::size_t best = 0;

  bool operator==(const RunTrace&) const = default;
};

struct RunResult {
  LocusSet best_loci;
  double best_cer = 0.0;
  /// Present only when a ground truth was supplied.
  std::optional<bool> success;
  std::optional<std::size_t> success_iteration;
  std::size_t iterations_run = 0;
  std::size_t evaluations = 0;
  std::size_t surrogate_rows = 0;
  /// Annealer outputs that violated the cardinality and were repaired.
  std::size_t repair_events = 0;
  double wall_time_s = 0.0;
};

struct RunOutput {
  RunResult result;
  RunTrace trace;
};

/// `count` vectors of length n_loci with exactly d ones at uniformly random
/// distinct positions. Duplicates across vectors are possible.
std::vector<Bits> init_points(std::size_t n_loci, std::size_t d, std::size_t count,
                              std::uint64_t seed);

/// Swaps one random 1 with one random 0.
Bits neighborhood_swap(const Bits& bits, Rng& rng);

/// Moves an infeasible vector to exactly d ones by repeatedly flipping the
/// candidate bit with the smallest |linear coefficient| (lowest index on ties):
/// ones are switched off while above d, zeros switched on while below.
Bits repair_cardinality(const Bits& bits, std::size_t d, const QuboProblem& q);

/// Earliest iteration whose evaluated set equals `truth`.
std::optional<std::size_t> detect_success(const RunTrace& trace, const LocusSet& truth);

/// The FMQA loop with full-sample CER as the black-box cost.
RunOutput run(const GenotypeDataset& data, const std::optional<LocusSet>& truth,
              const RunConfig& cfg);

}  // namespace epifmqa
