// Reduced-scale end-to-end training demonstrations. These run the genuine
// pipeline (datasets -> models -> objectives -> search -> selection) at a
// scale a single desktop core can finish, with their own thresholds; the
// full-scale protocol lives in the acceptance suite.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "shiftlab/trainer.hpp"

using namespace shiftlab;
using namespace shiftlab::data;
using namespace shiftlab::train;
namespace pen = shiftlab::penalties;

namespace {

const GrayMnist& pool() {
  static const GrayMnist p = synth_mnist(70000, 1);
  return p;
}

SearchSpec reduced_cs_spec(pen::Algorithm alg) {
  SearchSpec spec;
  spec.algorithm = alg;
  spec.dataset_kind = DatasetKind::cs_cmnist;
  spec.n_trials = 3;
  spec.repeats = 1;
  spec.alpha_range = {1e-1, 1e4};
  spec.beta_range = {1e-1, 1e4};
  spec.lr_range = {0.1, 0.1};
  spec.batch_pow_lo = spec.batch_pow_hi = 6;  // 64
  spec.total_steps = 800;
  spec.lr_decay_at = 600;
  spec.warmup_steps = 250;
  spec.val_fraction = 0.2;
  spec.base_seed = 519;
  return spec;
}

}  // namespace

TEST_CASE("cs-cmnist, reduced scale: joint alignment beats plain risk") {
  const DomainTriple triple = make_cs_cmnist(pool(), 7);

  auto best_of = [&](pen::Algorithm alg) {
    const ProtocolResult res = run_protocol(reduced_cs_spec(alg), triple, 1);
    return res;
  };
  const ProtocolResult erm = best_of(pen::Algorithm::erm);
  const ProtocolResult mmd_cem = best_of(pen::Algorithm::mmd_cem);
  const ProtocolResult coral_cem = best_of(pen::Algorithm::coral_cem);

  CAPTURE(erm.test_accuracy.mean);
  CAPTURE(mmd_cem.test_accuracy.mean);
  CAPTURE(coral_cem.test_accuracy.mean);

  // spurious color hurts the unseen domain, so plain risk lands mid-range
  CHECK(erm.test_accuracy.mean >= 0.35);
  CHECK(erm.test_accuracy.mean <= 0.85);
  // covariate + concept alignment recovers a clear margin
  CHECK(mmd_cem.test_accuracy.mean >= erm.test_accuracy.mean + 0.10);
  CHECK(coral_cem.test_accuracy.mean >= erm.test_accuracy.mean + 0.10);

  // the selected plain-risk model did actually train
  CHECK(erm.selected[0].final_train_risk < std::log(10.0));
}

TEST_CASE("cmnist, reduced scale: nothing escapes the color trap") {
  const DomainTriple triple = make_cmnist(pool(), 7);

  SearchSpec spec;
  spec.dataset_kind = DatasetKind::cmnist;
  spec.n_trials = 3;
  spec.repeats = 1;
  spec.alpha_range = {1e-1, 1e4};
  spec.beta_range = {1e-1, 1e4};
  spec.lr_range = {std::pow(10.0, -4.5), std::pow(10.0, -3.5)};
  spec.batch_pow_lo = 3;
  spec.batch_pow_hi = 9;
  spec.total_steps = 400;
  spec.lr_decay_at = 600;
  spec.warmup_steps = 250;
  spec.val_fraction = 0.2;
  spec.base_seed = 516;

  for (const pen::Algorithm alg :
       {pen::Algorithm::erm, pen::Algorithm::irm, pen::Algorithm::mmd_cem}) {
    spec.algorithm = alg;
    const ProtocolResult res = run_protocol(spec, triple, 1);
    CAPTURE(pen::algorithm_name(alg));
    CAPTURE(res.test_accuracy.mean);
    CHECK(res.test_accuracy.mean >= 0.35);
    CHECK(res.test_accuracy.mean <= 0.65);
  }
}

TEST_CASE("full pipeline is bit-deterministic, including across thread counts") {
  const DomainTriple triple = make_cs_cmnist(pool(), 9);
  SearchSpec spec = reduced_cs_spec(pen::Algorithm::mmd_cem);
  spec.n_trials = 2;
  spec.total_steps = 25;
  spec.batch_pow_lo = spec.batch_pow_hi = 4;
  spec.warmup_steps = 10;

  const ProtocolResult a = run_protocol(spec, triple, 1);
  const ProtocolResult b = run_protocol(spec, triple, 1);
  const ProtocolResult c = run_protocol(spec, triple, 2);
  CHECK(a.test_accuracy.mean == b.test_accuracy.mean);
  CHECK(a.test_accuracy.mean == c.test_accuracy.mean);
  REQUIRE(a.all_trials.size() == c.all_trials.size());
  for (size_t i = 0; i < a.all_trials.size(); ++i) {
    CHECK(a.all_trials[i].val_accuracy == c.all_trials[i].val_accuracy);
    CHECK(a.all_trials[i].test_accuracy == c.all_trials[i].test_accuracy);
  }
}
