#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftlab/colored.hpp"
#include "shiftlab/models.hpp"
#include "shiftlab/penalties.hpp"

namespace shiftlab::train {

struct TrialConfig {
  penalties::ObjectiveConfig objective;
  data::DatasetKind dataset_kind = data::DatasetKind::cs_cmnist;
  double lr = 0.1;
  int64_t batch_size = 128;
  int64_t total_steps = 2000;
  int64_t lr_decay_at = 600;
  double lr_decay_factor = 0.1;
  uint64_t seed = 0;
};

// Inclusive log-uniform range; fixed value when lo == hi.
struct LogRange {
  double lo = 0.0, hi = 0.0;
  bool fixed() const { return lo == hi; }
};

struct SearchSpec {
  penalties::Algorithm algorithm = penalties::Algorithm::erm;
  data::DatasetKind dataset_kind = data::DatasetKind::cs_cmnist;
  int64_t n_trials = 25;
  int64_t repeats = 5;
  LogRange alpha_range{1e-1, 1e4};
  LogRange beta_range{1e-1, 1e4};
  LogRange lr_range{0.1, 0.1};
  int batch_pow_lo = 7;  // batch = 2^k, k uniform on [lo, hi]
  int batch_pow_hi = 7;
  int64_t total_steps = 2000;
  int64_t lr_decay_at = 600;
  int64_t warmup_steps = 500;
  double val_fraction = 0.2;
  uint64_t base_seed = 0;
};

struct TrialResult {
  TrialConfig config;
  int64_t repeat_index = 0;
  int64_t trial_index = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_train_risk = 0.0;
  double wall_time_s = 0.0;
  bool failed = false;    // diverged (non-finite loss); scores zero
  bool selected = false;  // marked by the protocol runner
};

// Train/val index splits for the two seen domains, shared by every trial of
// a search so validation accuracies are comparable.
struct PreparedSplits {
  std::array<data::SplitIndices, 2> seen;
};
PreparedSplits prepare_splits(const data::DomainTriple& data,
                              double val_fraction, uint64_t seed);

// One full training run at a fixed configuration. Deterministic in
// (config.seed, data): per-step batches, init and evaluation all derive from
// the trial seed's streams.
TrialResult run_trial(const TrialConfig& config,
                      const data::DomainTriple& data,
                      const PreparedSplits& splits);

// Draws the trial-t hyperparameters for a repeat; exposed for tests.
TrialConfig sample_trial_config(const SearchSpec& spec, int64_t repeat,
                                int64_t trial);

// n_trials results for one repeat. jobs > 1 runs trials on a thread pool;
// results are identical to the serial order.
std::vector<TrialResult> hyperparameter_search(const SearchSpec& spec,
                                               const data::DomainTriple& data,
                                               int64_t repeat, int jobs = 1);

// Highest validation accuracy, ties to the lowest trial index.
const TrialResult& select_model(std::span<const TrialResult> results);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1); zero for a single repeat
  int64_t n = 0;
};
Aggregate aggregate_repeats(std::span<const TrialResult> selected);

// Search -> select per repeat -> aggregate. all_trials holds
// repeats * n_trials rows with the selected ones flagged.
struct ProtocolResult {
  std::vector<TrialResult> all_trials;
  std::vector<TrialResult> selected;
  Aggregate test_accuracy;
};
ProtocolResult run_protocol(const SearchSpec& spec,
                            const data::DomainTriple& data, int jobs = 1);

// Argmax accuracy of a trained model over the given rows (all rows when
// indices is empty). Batch-size invariant and deterministic.
double evaluate(models::Model& model, const data::ColoredDataset& ds,
                std::span<const int64_t> indices = {});

// One row per trial, config fields plus metrics; wall_time_s is the only
// non-deterministic column.
void write_results_csv(const std::string& path,
                       std::span<const TrialResult> trials);

}  // namespace shiftlab::train
