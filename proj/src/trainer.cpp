#include "shiftlab/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <thread>

#include "shiftlab/errors.hpp"
#include "shiftlab/models.hpp"
#include "shiftlab/optimizer.hpp"

namespace shiftlab::train {
namespace {

double log_uniform(Philox& rng, const LogRange& range) {
  if (range.lo <= 0.0 || range.hi < range.lo) {
    throw ConfigError("log-uniform range needs 0 < lo <= hi");
  }
  if (range.fixed()) return range.lo;
  const double u = rng.next_double();
  return std::exp(std::log(range.lo) +
                  u * (std::log(range.hi) - std::log(range.lo)));
}

models::Model build_model(data::DatasetKind kind, const Philox& rng) {
  return kind == data::DatasetKind::cmnist ? models::build_cmnist_convnet(rng)
                                           : models::build_cs_cmnist_net(rng);
}

int64_t correct_count(models::Model& model, const data::ColoredDataset& ds,
                      std::span<const int64_t> indices) {
  std::vector<int64_t> all;
  if (indices.empty()) {
    all.resize(ds.count());
    for (int64_t i = 0; i < ds.count(); ++i) all[i] = i;
    indices = all;
  }
  constexpr int64_t kEvalBatch = 512;
  int64_t correct = 0;
  for (int64_t start = 0; start < static_cast<int64_t>(indices.size());
       start += kEvalBatch) {
    const int64_t n = std::min<int64_t>(
        kEvalBatch, static_cast<int64_t>(indices.size()) - start);
    const std::span<const int64_t> chunk = indices.subspan(start, n);
    Graph g;
    const NodeId x = g.input(ds.images(chunk));
    const auto [z, logits] = model.forward(g, x);
    (void)z;
    const Tensor& out = g.value(logits);
    const int64_t classes = out.extent(1);
    for (int64_t i = 0; i < n; ++i) {
      const double* row = out.data() + i * classes;
      int64_t best = 0;
      for (int64_t c = 1; c < classes; ++c) {
        if (row[c] > row[best]) best = c;
      }
      correct += best == ds.labels[chunk[i]];
    }
  }
  return correct;
}

}  // namespace

PreparedSplits prepare_splits(const data::DomainTriple& data,
                              double val_fraction, uint64_t seed) {
  return PreparedSplits{{
      data::split_train_val(data.domains[0], val_fraction, seed),
      data::split_train_val(data.domains[1], val_fraction, seed),
  }};
}

TrialResult run_trial(const TrialConfig& config, const data::DomainTriple& data,
                      const PreparedSplits& splits) {
  if (config.total_steps < 1) {
    throw ArgumentError("run_trial: total_steps must be >= 1");
  }
  if (config.batch_size < 2) {
    throw ArgumentError("run_trial: batch_size must be >= 2");
  }
  if (config.dataset_kind != data.kind) {
    throw ArgumentError("run_trial: config/dataset kind mismatch");
  }
  const auto t0 = std::chrono::steady_clock::now();

  const Philox root(config.seed);
  models::Model model = build_model(config.dataset_kind, root);
  const std::vector<Parameter*> params = model.parameters();
  const LrSchedule schedule{config.lr_decay_at, config.lr_decay_factor};

  std::array<Philox, 2> batch_rng{root.stream("batch").stream(uint64_t(1)),
                                  root.stream("batch").stream(uint64_t(2))};

  TrialResult result;
  result.config = config;
  double last_risk = std::numeric_limits<double>::quiet_NaN();

  for (int64_t step = 1; step <= config.total_steps; ++step) {
    try {
      Graph g;
      std::array<penalties::FeatureBatch, 2> batches;
      for (int d = 0; d < 2; ++d) {
        const data::ColoredDataset& ds = data.domains[d];
        const std::vector<int64_t>& train = splits.seen[d].train;
        std::vector<int64_t> idx(config.batch_size);
        std::vector<int> y(config.batch_size);
        for (int64_t i = 0; i < config.batch_size; ++i) {
          idx[i] = train[batch_rng[d].below(train.size())];
          y[i] = ds.labels[idx[i]];
        }
        const NodeId x = g.input(ds.images(idx));
        const auto [z, logits] = model.forward(g, x);
        batches[d] = penalties::FeatureBatch{ds.domain.domain_index, z,
                                             std::move(y), logits};
      }
      const auto composite =
          penalties::composite_objective(g, config.objective, batches, step);
      last_risk = g.value(composite.risk).item();
      model.zero_grads();
      g.backward(composite.objective);
      sgd_step(params, config.lr, step, schedule);
    } catch (const NumericError&) {
      result.failed = true;
      break;
    }
  }

  if (!result.failed) {
    try {
      result.final_train_risk = last_risk;
      int64_t correct = 0, total = 0;
      for (int d = 0; d < 2; ++d) {
        correct += correct_count(model, data.domains[d], splits.seen[d].val);
        total += static_cast<int64_t>(splits.seen[d].val.size());
      }
      result.val_accuracy = double(correct) / double(total);
      result.test_accuracy = evaluate(model, data.domains[2]);
    } catch (const NumericError&) {
      result.failed = true;  // params drifted far enough to overflow at eval
    }
  }
  if (result.failed) {
    result.val_accuracy = 0.0;
    result.test_accuracy = 0.0;
    result.final_train_risk = std::numeric_limits<double>::quiet_NaN();
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

TrialConfig sample_trial_config(const SearchSpec& spec, int64_t repeat,
                                int64_t trial) {
  Philox rng = Philox(spec.base_seed)
                   .stream("search")
                   .stream(uint64_t(repeat))
                   .stream(uint64_t(trial));
  TrialConfig cfg;
  cfg.objective.algorithm = spec.algorithm;
  cfg.objective.alpha = log_uniform(rng, spec.alpha_range);
  cfg.objective.beta = log_uniform(rng, spec.beta_range);
  cfg.objective.warmup_steps = spec.warmup_steps;
  cfg.dataset_kind = spec.dataset_kind;
  cfg.lr = log_uniform(rng, spec.lr_range);
  if (spec.batch_pow_lo > spec.batch_pow_hi || spec.batch_pow_lo < 1 ||
      spec.batch_pow_hi > 20) {
    throw ConfigError("batch power range must satisfy 1 <= lo <= hi <= 20");
  }
  const int pow = spec.batch_pow_lo +
                  static_cast<int>(rng.below(
                      uint64_t(spec.batch_pow_hi - spec.batch_pow_lo + 1)));
  cfg.batch_size = int64_t(1) << pow;
  cfg.total_steps = spec.total_steps;
  cfg.lr_decay_at = spec.lr_decay_at;
  cfg.seed = rng.stream("trial-seed").seed();
  return cfg;
}

std::vector<TrialResult> hyperparameter_search(const SearchSpec& spec,
                                               const data::DomainTriple& data,
                                               int64_t repeat, int jobs) {
  if (spec.n_trials < 1) throw ArgumentError("search: n_trials must be >= 1");
  const uint64_t split_seed =
      Philox(spec.base_seed).stream("val-split").stream(uint64_t(repeat)).seed();
  const PreparedSplits splits =
      prepare_splits(data, spec.val_fraction, split_seed);

  std::vector<TrialResult> results(spec.n_trials);
  std::atomic<int64_t> next{0};
  auto worker = [&] {
    while (true) {
      const int64_t t = next.fetch_add(1);
      if (t >= spec.n_trials) return;
      TrialResult r = run_trial(sample_trial_config(spec, repeat, t), data, splits);
      r.repeat_index = repeat;
      r.trial_index = t;
      results[t] = std::move(r);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = static_cast<int>(std::min<int64_t>(jobs, spec.n_trials));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  return results;
}

const TrialResult& select_model(std::span<const TrialResult> results) {
  if (results.empty()) throw ArgumentError("select_model: empty result list");
  const TrialResult* best = &results[0];
  for (const TrialResult& r : results) {
    if (r.val_accuracy > best->val_accuracy ||
        (r.val_accuracy == best->val_accuracy &&
         r.trial_index < best->trial_index)) {
      best = &r;
    }
  }
  return *best;
}

Aggregate aggregate_repeats(std::span<const TrialResult> selected) {
  if (selected.empty()) throw ArgumentError("aggregate_repeats: empty list");
  Aggregate agg;
  agg.n = static_cast<int64_t>(selected.size());
  double sum = 0.0;
  for (const TrialResult& r : selected) sum += r.test_accuracy;
  agg.mean = sum / double(agg.n);
  if (agg.n > 1) {
    double ss = 0.0;
    for (const TrialResult& r : selected) {
      const double d = r.test_accuracy - agg.mean;
      ss += d * d;
    }
    agg.stddev = std::sqrt(ss / double(agg.n - 1));
  }
  return agg;
}

ProtocolResult run_protocol(const SearchSpec& spec,
                            const data::DomainTriple& data, int jobs) {
  ProtocolResult out;
  for (int64_t r = 0; r < spec.repeats; ++r) {
    std::vector<TrialResult> results =
        hyperparameter_search(spec, data, r, jobs);
    const TrialResult& best = select_model(results);
    for (TrialResult& t : results) {
      t.selected = t.trial_index == best.trial_index;
    }
    out.selected.push_back(best);
    out.selected.back().selected = true;
    out.all_trials.insert(out.all_trials.end(), results.begin(), results.end());
  }
  out.test_accuracy = aggregate_repeats(out.selected);
  return out;
}

double evaluate(models::Model& model, const data::ColoredDataset& ds,
                std::span<const int64_t> indices) {
  const int64_t total =
      indices.empty() ? ds.count() : static_cast<int64_t>(indices.size());
  if (total == 0) throw ArgumentError("evaluate: empty dataset");
  return double(correct_count(model, ds, indices)) / double(total);
}

void write_results_csv(const std::string& path,
                       std::span<const TrialResult> trials) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw ArgumentError("cannot open " + tmp + " for write");
  std::fprintf(f,
               "algorithm,dataset,repeat,trial,alpha,beta,lr,batch_size,"
               "total_steps,lr_decay_at,warmup_steps,seed,failed,selected,"
               "val_accuracy,test_accuracy,final_train_risk,wall_time_s\n");
  for (const TrialResult& t : trials) {
    std::fprintf(
        f, "%s,%s,%lld,%lld,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld,%llu,%d,%d,"
           "%.17g,%.17g,%.17g,%.3f\n",
        penalties::algorithm_name(t.config.objective.algorithm),
        data::kind_name(t.config.dataset_kind),
        static_cast<long long>(t.repeat_index),
        static_cast<long long>(t.trial_index), t.config.objective.alpha,
        t.config.objective.beta, t.config.lr,
        static_cast<long long>(t.config.batch_size),
        static_cast<long long>(t.config.total_steps),
        static_cast<long long>(t.config.lr_decay_at),
        static_cast<long long>(t.config.objective.warmup_steps),
        static_cast<unsigned long long>(t.config.seed), int(t.failed),
        int(t.selected), t.val_accuracy, t.test_accuracy, t.final_train_risk,
        t.wall_time_s);
  }
  if (std::fclose(f) != 0) throw ArgumentError("short write to " + tmp);
  std::filesystem::rename(tmp, path);
}

}  // namespace shiftlab::train
