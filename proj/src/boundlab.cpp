#include "shiftlab/boundlab.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "shiftlab/errors.hpp"

namespace shiftlab::bound {
namespace {

constexpr double kNormTol = 1e-9;

void check_rows(const std::vector<double>& table, int64_t rows, int64_t cols,
                const char* what) {
  if (static_cast<int64_t>(table.size()) != rows * cols) {
    throw ArgumentError(std::string(what) + ": table size " +
                        std::to_string(table.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (int64_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      const double v = table[i * cols + c];
      if (v < 0.0) {
        throw ArgumentError(std::string(what) + ": negative entry in row " +
                            std::to_string(i));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTol) {
      throw ArgumentError(std::string(what) + ": row " + std::to_string(i) +
                          " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

void DiscreteDomain::validate() const {
  if (m < 1 || num_classes < 1) {
    throw ArgumentError("DiscreteDomain: need m >= 1 and classes >= 1");
  }
  if (static_cast<int64_t>(pmf.size()) != m) {
    throw ArgumentError("DiscreteDomain: pmf size != m");
  }
  double sum = 0.0;
  for (const double p : pmf) {
    if (p < 0.0) throw ArgumentError("DiscreteDomain: negative pmf entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ArgumentError("DiscreteDomain: pmf sums to " + std::to_string(sum));
  }
  check_rows(labeler, m, num_classes, "DiscreteDomain labeler");
}

void StochasticClassifier::validate() const {
  check_rows(table, m, num_classes, "StochasticClassifier");
}

void DiscreteDGInstance::validate() const {
  seen.validate();
  unseen.validate();
  g.validate();
  if (seen.m != unseen.m || seen.m != g.m ||
      seen.num_classes != unseen.num_classes ||
      seen.num_classes != g.num_classes) {
    throw ArgumentError("DiscreteDGInstance: shape disagreement across triple");
  }
}

double disagreement_loss(std::span<const double> q1,
                         std::span<const double> q2) {
  if (q1.size() != q2.size() || q1.empty()) {
    throw ArgumentError("disagreement_loss: distributions must match");
  }
  double s1 = 0.0, s2 = 0.0, overlap = 0.0;
  for (size_t c = 0; c < q1.size(); ++c) {
    if (q1[c] < 0.0 || q2[c] < 0.0) {
      throw ArgumentError("disagreement_loss: negative probability");
    }
    s1 += q1[c];
    s2 += q2[c];
    overlap += q1[c] * q2[c];
  }
  if (std::abs(s1 - 1.0) > kNormTol || std::abs(s2 - 1.0) > kNormTol) {
    throw ArgumentError("disagreement_loss: non-normalized distribution");
  }
  return 1.0 - overlap;
}

double risk(const DiscreteDomain& domain, const StochasticClassifier& g,
            std::span<const double> labeler) {
  if (g.m != domain.m || g.num_classes != domain.num_classes) {
    throw ArgumentError("risk: classifier shape disagrees with domain");
  }
  if (static_cast<int64_t>(labeler.size()) != domain.m * domain.num_classes) {
    throw ArgumentError("risk: labeler size mismatch");
  }
  const int64_t c = domain.num_classes;
  double out = 0.0;
  for (int64_t z = 0; z < domain.m; ++z) {
    out += domain.pmf[z] *
           disagreement_loss({g.table.data() + z * c, size_t(c)},
                             {labeler.data() + z * c, size_t(c)});
  }
  return out;
}

Theorem1Terms theorem1_terms(const DiscreteDGInstance& inst) {
  inst.validate();
  const int64_t c = inst.seen.num_classes;
  Theorem1Terms t;
  t.seen_risk = risk(inst.seen, inst.g, inst.seen.labeler);
  t.unseen_risk = risk(inst.unseen, inst.g, inst.unseen.labeler);
  for (int64_t z = 0; z < inst.seen.m; ++z) {
    const std::span<const double> gz{inst.g.table.data() + z * c, size_t(c)};
    const std::span<const double> lu{inst.unseen.labeler.data() + z * c,
                                     size_t(c)};
    const std::span<const double> ls{inst.seen.labeler.data() + z * c,
                                     size_t(c)};
    t.marginal_gap_term += std::abs(inst.unseen.pmf[z] - inst.seen.pmf[z]) *
                           disagreement_loss(gz, lu);
    t.labeler_gap_term += inst.seen.pmf[z] * disagreement_loss(lu, ls);
  }
  return t;
}

double delta1(const DiscreteDGInstance& inst) {
  double d = 0.0;
  for (int64_t z = 0; z < inst.seen.m; ++z) {
    d = std::max(d, std::abs(inst.seen.pmf[z] - inst.unseen.pmf[z]));
  }
  return d;
}

double delta2(const DiscreteDGInstance& inst) {
  const int64_t c = inst.seen.num_classes;
  double d = 0.0;
  for (int64_t z = 0; z < inst.seen.m; ++z) {
    d = std::max(
        d, disagreement_loss(
               {inst.unseen.labeler.data() + z * c, size_t(c)},
               {inst.seen.labeler.data() + z * c, size_t(c)}));
  }
  return d;
}

double corollary1_rhs(const DiscreteDGInstance& inst) {
  inst.validate();
  const int64_t c = inst.seen.num_classes;
  double integral = 0.0;  // counting measure over the finite latent set
  for (int64_t z = 0; z < inst.seen.m; ++z) {
    integral += disagreement_loss(
        {inst.g.table.data() + z * c, size_t(c)},
        {inst.unseen.labeler.data() + z * c, size_t(c)});
  }
  return risk(inst.seen, inst.g, inst.seen.labeler) +
         delta1(inst) * integral + delta2(inst);
}

namespace {

// strictly positive rows via normalized exponentials
void fill_stochastic(std::vector<double>& table, int64_t rows, int64_t cols,
                     Philox& rng) {
  table.resize(rows * cols);
  for (int64_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      const double e = -std::log(1.0 - rng.next_double());
      table[i * cols + j] = e;
      sum += e;
    }
    for (int64_t j = 0; j < cols; ++j) table[i * cols + j] /= sum;
  }
}

}  // namespace

DiscreteDGInstance random_instance(int64_t m, int64_t num_classes,
                                   Philox& rng) {
  if (m < 1 || num_classes < 1) {
    throw ArgumentError("random_instance: need m >= 1 and classes >= 1");
  }
  DiscreteDGInstance inst;
  for (DiscreteDomain* d : {&inst.seen, &inst.unseen}) {
    d->m = m;
    d->num_classes = num_classes;
    std::vector<double> pmf_row;
    fill_stochastic(pmf_row, 1, m, rng);
    d->pmf = std::move(pmf_row);
    fill_stochastic(d->labeler, m, num_classes, rng);
  }
  inst.g.m = m;
  inst.g.num_classes = num_classes;
  fill_stochastic(inst.g.table, m, num_classes, rng);
  return inst;
}

VerifyReport verify_random_instances(int64_t n, int64_t m, int64_t num_classes,
                                     uint64_t seed) {
  if (n < 0) throw ArgumentError("verify_random_instances: n must be >= 0");
  VerifyReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  Philox rng = Philox(seed).stream("bound-verify");
  for (int64_t i = 0; i < n; ++i) {
    const DiscreteDGInstance inst = random_instance(m, num_classes, rng);
    const Theorem1Terms t = theorem1_terms(inst);
    const double slack_theorem = t.slack();
    const double slack_corollary = corollary1_rhs(inst) - t.unseen_risk;
    const double worst = std::min(slack_theorem, slack_corollary);
    report.min_slack = std::min(report.min_slack, worst);
    if (worst < kSlackTolerance) ++report.violations;
    ++report.checked;
  }
  if (report.checked == 0) report.min_slack = 0.0;
  return report;
}

}  // namespace shiftlab::bound
