#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shiftlab/rng.hpp"

// Exact evaluation of the unseen-domain risk bound and its corollary on
// finite discrete latent spaces, plus a randomized verification harness.

namespace shiftlab::bound {

// Finite latent space: a pmf over m points and a row-stochastic optimal
// labeling table over C labels.
struct DiscreteDomain {
  int64_t m = 0;
  int64_t num_classes = 0;
  std::vector<double> pmf;      // m entries, sums to 1
  std::vector<double> labeler;  // m x C, rows sum to 1

  void validate() const;  // ArgumentError on bad shapes/normalization
};

struct StochasticClassifier {
  int64_t m = 0;
  int64_t num_classes = 0;
  std::vector<double> table;  // m x C, rows sum to 1

  void validate() const;
};

struct DiscreteDGInstance {
  DiscreteDomain seen;
  DiscreteDomain unseen;  // same m and C, different measure/labeler
  StochasticClassifier g;

  void validate() const;
};

// P(A != B) for independent A ~ q1, B ~ q2: 1 - sum_c q1[c] q2[c].
// Non-negative, symmetric, and satisfies the triangle inequality.
double disagreement_loss(std::span<const double> q1,
                         std::span<const double> q2);

// sum_z pmf[z] * d(g[z], labeler[z]); pass the unseen labeler with the seen
// pmf for the cross-domain risk.
double risk(const DiscreteDomain& domain, const StochasticClassifier& g,
            std::span<const double> labeler);

struct Theorem1Terms {
  double seen_risk = 0.0;        // t1
  double marginal_gap_term = 0.0;  // t2: sum_z |pu - ps| d(g, lu)
  double labeler_gap_term = 0.0;   // t3: sum_z ps d(lu, ls)
  double unseen_risk = 0.0;        // lhs
  double rhs() const { return seen_risk + marginal_gap_term + labeler_gap_term; }
  double slack() const { return rhs() - unseen_risk; }
};
Theorem1Terms theorem1_terms(const DiscreteDGInstance& inst);

double delta1(const DiscreteDGInstance& inst);  // max_z |ps - pu|
double delta2(const DiscreteDGInstance& inst);  // max_z d(lu, ls)

// t1 + delta1 * sum_z d(g, lu) + delta2 (counting measure on the latent set).
double corollary1_rhs(const DiscreteDGInstance& inst);

// Strictly positive pmfs (normalized exponentials) and stochastic tables.
DiscreteDGInstance random_instance(int64_t m, int64_t num_classes, Philox& rng);

struct VerifyReport {
  int64_t checked = 0;
  int64_t violations = 0;   // either inequality below -1e-12 slack
  double min_slack = 0.0;   // most negative margin seen across both bounds
};
VerifyReport verify_random_instances(int64_t n, int64_t m, int64_t num_classes,
                                     uint64_t seed);

inline constexpr double kSlackTolerance = -1e-12;

}  // namespace shiftlab::bound
