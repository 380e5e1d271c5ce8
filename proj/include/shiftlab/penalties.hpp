#pragma once

#include <span>
#include <string>
#include <vector>

#include "shiftlab/graph.hpp"

// Alignment penalties and the weighted composite objectives built from them.
// Each penalty is a fused graph op with a closed-form gradient; all of them
// are pure functions of their inputs and safe to evaluate concurrently on
// distinct graphs.

namespace shiftlab::penalties {

enum class Algorithm {
  erm,
  irm,
  ib_erm,
  ib_irm,
  mmd,
  coral,
  cem,
  mmd_irm,
  mmd_cem,
  coral_cem,
};

Algorithm algorithm_from_string(const std::string& name);  // ConfigError
const char* algorithm_name(Algorithm a);
// All ten accepted configurations.
std::span<const Algorithm> all_algorithms();
// The eight compared methods, report column order.
std::span<const Algorithm> reported_algorithms();

struct ObjectiveConfig {
  Algorithm algorithm = Algorithm::erm;
  double alpha = 0.0;          // covariate-alignment weight
  double beta = 0.0;           // concept-alignment weight
  int64_t warmup_steps = 500;  // alpha, beta forced to 0 below this step
};

// One seen-domain minibatch in featurizer space.
struct FeatureBatch {
  int domain_id = 0;
  NodeId z = -1;       // [n, d']
  std::vector<int> y;  // n labels
  NodeId logits = -1;  // [n, C]
};

// Multi-scale RBF bandwidths (fixed; no data-dependent state).
inline constexpr double kMmdGammas[] = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3};
// Variance floor inside the class-conditional entropy estimator.
inline constexpr double kEntropyVarFloor = 1e-5;

// Biased (V-statistic) squared MMD under a sum of RBF kernels
// k_g(u,v) = exp(-g*|u-v|^2): mean(K_AA) + mean(K_BB) - 2 mean(K_AB),
// summed over gammas.
NodeId mmd2(Graph& g, NodeId za, NodeId zb,
            std::span<const double> gammas = kMmdGammas);

// |mu_A - mu_B|^2 + |C_A - C_B|^2_F with population (1/n) covariances.
NodeId coral(Graph& g, NodeId za, NodeId zb);

// Mean over domains of s_e^2, where s_e is the derivative at w=1 of the
// w-scaled cross-entropy mean: s_e = mean_i <softmax(o_i) - onehot(y_i), o_i>.
NodeId irm_penalty(Graph& g, std::span<const FeatureBatch> batches);

// Class-conditional diagonal-Gaussian entropy with variance floor:
// sum_c (n_c/n) * 1/2 sum_j ln(2*pi*e * max(var_cj, floor)).
NodeId conditional_entropy(Graph& g, NodeId z, std::span<const int> y);

// Mean over feature dimensions of the population variance of z.
NodeId ib_variance_penalty(Graph& g, NodeId z);

// irm_penalty(batches) + conditional_entropy over the pooled batches.
NodeId cem_loss(Graph& g, std::span<const FeatureBatch> batches);

struct CompositeResult {
  NodeId objective = -1;  // scalar to minimize
  NodeId risk = -1;       // plain ERM risk term (mean seen-domain xent)
};

// R + alpha * covariate + beta * concept, with the term mix selected by the
// algorithm. Zero-weight terms are not built, so ERM-equivalent configs are
// bit-identical to the plain risk.
CompositeResult composite_objective(Graph& g, const ObjectiveConfig& config,
                                    std::span<const FeatureBatch> batches,
                                    int64_t step);

// Value-only forms for callers without a graph.
double mmd2_value(const Tensor& za, const Tensor& zb,
                  std::span<const double> gammas = kMmdGammas);
double coral_value(const Tensor& za, const Tensor& zb);
double conditional_entropy_value(const Tensor& z, std::span<const int> y);
double ib_variance_value(const Tensor& z);

}  // namespace shiftlab::penalties
