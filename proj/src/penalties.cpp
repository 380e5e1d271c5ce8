#include "shiftlab/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "shiftlab/errors.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab::penalties {
namespace {

const kernels::KernelTable& K() { return kernels::active(); }

constexpr Algorithm kAll[] = {
    Algorithm::erm,     Algorithm::irm,     Algorithm::ib_erm,
    Algorithm::ib_irm,  Algorithm::mmd,     Algorithm::coral,
    Algorithm::cem,     Algorithm::mmd_irm, Algorithm::mmd_cem,
    Algorithm::coral_cem,
};

constexpr Algorithm kReported[] = {
    Algorithm::erm,     Algorithm::irm, Algorithm::ib_erm,
    Algorithm::ib_irm,  Algorithm::mmd_irm, Algorithm::cem,
    Algorithm::mmd_cem, Algorithm::coral_cem,
};

// Squared euclidean distances between row sets: out[i,j] = |a_i - b_j|^2,
// via the gram expansion, clamped at zero against cancellation.
void sqdist(const double* a, int64_t na, const double* b, int64_t nb,
            int64_t d, double* out) {
  K().gemm(false, true, na, nb, d, -2.0, a, d, b, d, 0.0, out, nb);
  std::vector<double> sa(na), sb(nb);
  for (int64_t i = 0; i < na; ++i) sa[i] = K().sumsq(a + i * d, d);
  for (int64_t j = 0; j < nb; ++j) sb[j] = K().sumsq(b + j * d, d);
  for (int64_t i = 0; i < na; ++i) {
    double* row = out + i * nb;
    for (int64_t j = 0; j < nb; ++j) {
      row[j] = std::max(0.0, row[j] + sa[i] + sb[j]);
    }
  }
}

void check_feature_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": features must be [n,d'], got " +
                     shape_str(t.shape()));
  }
  if (t.extent(0) < 1) {
    throw ArgumentError(std::string(op) + ": empty batch");
  }
}

struct ClassStats {
  std::vector<int64_t> counts;       // per class
  std::vector<double> means;         // class-major [c][j]
  std::vector<double> variances;     // class-major [c][j], population
  std::vector<int32_t> class_of;     // row -> dense class index
};

ClassStats class_stats(const Tensor& z, std::span<const int> y) {
  const int64_t n = z.extent(0), d = z.extent(1);
  std::map<int, int32_t> dense;
  for (const int label : y) dense.emplace(label, 0);
  int32_t next = 0;
  for (auto& [label, idx] : dense) idx = next++;
  ClassStats s;
  const int64_t nc = next;
  s.counts.assign(nc, 0);
  s.means.assign(nc * d, 0.0);
  s.variances.assign(nc * d, 0.0);
  s.class_of.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    const int32_t c = dense.at(y[i]);
    s.class_of[i] = c;
    s.counts[c]++;
    K().axpy(1.0, z.data() + i * d, s.means.data() + c * d, d);
  }
  for (int64_t c = 0; c < nc; ++c) {
    K().scal(1.0 / static_cast<double>(s.counts[c]), s.means.data() + c * d, d);
  }
  for (int64_t i = 0; i < n; ++i) {
    const int32_t c = s.class_of[i];
    const double* zrow = z.data() + i * d;
    const double* mu = s.means.data() + c * d;
    double* var = s.variances.data() + c * d;
    for (int64_t j = 0; j < d; ++j) {
      const double dev = zrow[j] - mu[j];
      var[j] += dev * dev;
    }
  }
  for (int64_t c = 0; c < nc; ++c) {
    K().scal(1.0 / static_cast<double>(s.counts[c]),
             s.variances.data() + c * d, d);
  }
  return s;
}

void validate_batches(std::span<const FeatureBatch> batches, const Graph& g,
                      const char* op) {
  if (batches.empty()) {
    throw ArgumentError(std::string(op) + ": needs at least one domain batch");
  }
  const int64_t d = g.value(batches[0].z).extent(1);
  for (const FeatureBatch& b : batches) {
    const Tensor& z = g.value(b.z);
    check_feature_matrix(z, op);
    if (z.extent(1) != d) {
      throw ShapeError(std::string(op) + ": feature dim mismatch across domains: " +
                       std::to_string(z.extent(1)) + " vs " + std::to_string(d));
    }
    if (static_cast<int64_t>(b.y.size()) != z.extent(0)) {
      throw ShapeError(std::string(op) + ": label count " +
                       std::to_string(b.y.size()) + " does not match batch of " +
                       std::to_string(z.extent(0)));
    }
  }
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::erm: return "ERM";
    case Algorithm::irm: return "IRM";
    case Algorithm::ib_erm: return "IB-ERM";
    case Algorithm::ib_irm: return "IB-IRM";
    case Algorithm::mmd: return "MMD";
    case Algorithm::coral: return "CORAL";
    case Algorithm::cem: return "CEM";
    case Algorithm::mmd_irm: return "MMD-IRM";
    case Algorithm::mmd_cem: return "MMD-CEM";
    case Algorithm::coral_cem: return "CORAL-CEM";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (const Algorithm a : kAll) {
    if (up == algorithm_name(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::span<const Algorithm> all_algorithms() { return kAll; }
std::span<const Algorithm> reported_algorithms() { return kReported; }

NodeId mmd2(Graph& g, NodeId za, NodeId zb, std::span<const double> gammas) {
  const Tensor& a = g.value(za);
  const Tensor& b = g.value(zb);
  check_feature_matrix(a, "mmd2");
  check_feature_matrix(b, "mmd2");
  if (a.extent(1) != b.extent(1)) {
    throw ShapeError("mmd2: feature dims differ: " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  if (gammas.empty()) throw ArgumentError("mmd2: no bandwidths");
  for (const double gam : gammas) {
    if (!(gam > 0.0)) throw ArgumentError("mmd2: bandwidth gammas must be positive");
  }
  const int64_t na = a.extent(0), nb = b.extent(0), d = a.extent(1);

  std::vector<double> daa(na * na), dbb(nb * nb), dab(na * nb);
  sqdist(a.data(), na, a.data(), na, d, daa.data());
  sqdist(b.data(), nb, b.data(), nb, d, dbb.data());
  sqdist(a.data(), na, b.data(), nb, d, dab.data());

  // gamma-weighted kernel sums retained for the backward pass
  auto saa = std::make_shared<std::vector<double>>(na * na, 0.0);
  auto sbb = std::make_shared<std::vector<double>>(nb * nb, 0.0);
  auto sab = std::make_shared<std::vector<double>>(na * nb, 0.0);

  double value = 0.0;
  std::vector<double> kmat;
  for (const double gam : gammas) {
    kmat.resize(daa.size());
    for (size_t i = 0; i < daa.size(); ++i) kmat[i] = std::exp(-gam * daa[i]);
    value += K().sum(kmat.data(), na * na) / double(na * na);
    K().axpy(gam, kmat.data(), saa->data(), na * na);

    kmat.resize(dbb.size());
    for (size_t i = 0; i < dbb.size(); ++i) kmat[i] = std::exp(-gam * dbb[i]);
    value += K().sum(kmat.data(), nb * nb) / double(nb * nb);
    K().axpy(gam, kmat.data(), sbb->data(), nb * nb);

    kmat.resize(dab.size());
    for (size_t i = 0; i < dab.size(); ++i) kmat[i] = std::exp(-gam * dab[i]);
    value -= 2.0 * K().sum(kmat.data(), na * nb) / double(na * nb);
    K().axpy(gam, kmat.data(), sab->data(), na * nb);
  }

  auto backward = [za, zb, saa, sbb, sab, na, nb, d](Graph& g, NodeId self) {
    const double gout = g.grad(self).item();
    const double* av = g.value(za).data();
    const double* bv = g.value(zb).data();
    if (g.wants_grad(za)) {
      std::vector<double> ga(na * d, 0.0);
      // within-A part: -(4/na^2) * (diag(rowsum S_AA) A - S_AA A)
      std::vector<double> sa_a(na * d);
      K().gemm(false, false, na, d, na, 1.0, saa->data(), na, av, d, 0.0,
               sa_a.data(), d);
      const double ca = -4.0 / double(na) / double(na);
      const double cx = 4.0 / double(na) / double(nb);
      std::vector<double> sab_b(na * d);
      K().gemm(false, false, na, d, nb, 1.0, sab->data(), nb, bv, d, 0.0,
               sab_b.data(), d);
      for (int64_t i = 0; i < na; ++i) {
        const double rs_aa = K().sum(saa->data() + i * na, na);
        const double rs_ab = K().sum(sab->data() + i * nb, nb);
        for (int64_t j = 0; j < d; ++j) {
          ga[i * d + j] =
              gout * (ca * (rs_aa * av[i * d + j] - sa_a[i * d + j]) +
                      cx * (rs_ab * av[i * d + j] - sab_b[i * d + j]));
        }
      }
      g.accumulate_grad(za, ga);
    }
    if (g.wants_grad(zb)) {
      std::vector<double> gb(nb * d, 0.0);
      std::vector<double> sb_b(nb * d);
      K().gemm(false, false, nb, d, nb, 1.0, sbb->data(), nb, bv, d, 0.0,
               sb_b.data(), d);
      std::vector<double> sabt_a(nb * d);
      K().gemm(true, false, nb, d, na, 1.0, sab->data(), nb, av, d, 0.0,
               sabt_a.data(), d);
      std::vector<double> colsum(nb, 0.0);
      for (int64_t i = 0; i < na; ++i) {
        K().axpy(1.0, sab->data() + i * nb, colsum.data(), nb);
      }
      const double cb = -4.0 / double(nb) / double(nb);
      const double cx = 4.0 / double(na) / double(nb);
      for (int64_t i = 0; i < nb; ++i) {
        const double rs_bb = K().sum(sbb->data() + i * nb, nb);
        for (int64_t j = 0; j < d; ++j) {
          gb[i * d + j] =
              gout * (cb * (rs_bb * bv[i * d + j] - sb_b[i * d + j]) +
                      cx * (colsum[i] * bv[i * d + j] - sabt_a[i * d + j]));
        }
      }
      g.accumulate_grad(zb, gb);
    }
  };
  return g.custom("mmd2", {za, zb}, Tensor::scalar(value), std::move(backward));
}

NodeId coral(Graph& g, NodeId za, NodeId zb) {
  const Tensor& a = g.value(za);
  const Tensor& b = g.value(zb);
  check_feature_matrix(a, "coral");
  check_feature_matrix(b, "coral");
  if (a.extent(1) != b.extent(1)) {
    throw ShapeError("coral: feature dims differ: " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  const int64_t na = a.extent(0), nb = b.extent(0), d = a.extent(1);

  auto mean_of = [d](const Tensor& t) {
    std::vector<double> mu(d, 0.0);
    for (int64_t i = 0; i < t.extent(0); ++i) {
      K().axpy(1.0, t.data() + i * d, mu.data(), d);
    }
    K().scal(1.0 / static_cast<double>(t.extent(0)), mu.data(), d);
    return mu;
  };
  auto mu_a = std::make_shared<std::vector<double>>(mean_of(a));
  auto mu_b = std::make_shared<std::vector<double>>(mean_of(b));

  auto centered = [d](const Tensor& t, const std::vector<double>& mu) {
    std::vector<double> c(t.extent(0) * d);
    for (int64_t i = 0; i < t.extent(0); ++i) {
      K().vsub(t.data() + i * d, mu.data(), c.data() + i * d, d);
    }
    return c;
  };
  const std::vector<double> ca = centered(a, *mu_a);
  const std::vector<double> cb = centered(b, *mu_b);

  // cov_diff = (1/na) ca^T ca - (1/nb) cb^T cb
  auto cov_diff = std::make_shared<std::vector<double>>(d * d, 0.0);
  K().gemm(true, false, d, d, na, 1.0 / double(na), ca.data(), d, ca.data(), d,
           0.0, cov_diff->data(), d);
  K().gemm(true, false, d, d, nb, -1.0 / double(nb), cb.data(), d, cb.data(),
           d, 1.0, cov_diff->data(), d);

  std::vector<double> dmu(d);
  K().vsub(mu_a->data(), mu_b->data(), dmu.data(), d);
  const double value = K().sumsq(dmu.data(), d) + K().sumsq(cov_diff->data(), d * d);

  auto backward = [za, zb, mu_a, mu_b, cov_diff, na, nb, d](Graph& g,
                                                            NodeId self) {
    const double gout = g.grad(self).item();
    std::vector<double> dmu(d);
    K().vsub(mu_a->data(), mu_b->data(), dmu.data(), d);
    auto side = [&](NodeId zid, const std::vector<double>& mu, int64_t n,
                    double sign) {
      if (!g.wants_grad(zid)) return;
      const Tensor& t = g.value(zid);
      std::vector<double> cz(n * d);
      for (int64_t i = 0; i < n; ++i) {
        K().vsub(t.data() + i * d, mu.data(), cz.data() + i * d, d);
      }
      // sign * (4/n) * centered * cov_diff  (cov_diff symmetric)
      std::vector<double> gz(n * d);
      K().gemm(false, false, n, d, d, sign * 4.0 / double(n), cz.data(), d,
               cov_diff->data(), d, 0.0, gz.data(), d);
      for (int64_t i = 0; i < n; ++i) {
        K().axpy(sign * 2.0 / double(n), dmu.data(), gz.data() + i * d, d);
      }
      K().scal(gout, gz.data(), n * d);
      g.accumulate_grad(zid, gz);
    };
    side(za, *mu_a, na, 1.0);
    side(zb, *mu_b, nb, -1.0);
  };
  return g.custom("coral", {za, zb}, Tensor::scalar(value), std::move(backward));
}

NodeId irm_penalty(Graph& g, std::span<const FeatureBatch> batches) {
  validate_batches(batches, g, "irm_penalty");
  const int64_t ndom = static_cast<int64_t>(batches.size());

  struct DomainState {
    NodeId logits;
    std::vector<int> y;
    std::vector<double> probs;
    double s = 0.0;
    int64_t n = 0, c = 0;
  };
  auto states = std::make_shared<std::vector<DomainState>>();
  double penalty = 0.0;
  for (const FeatureBatch& b : batches) {
    const Tensor& logits = g.value(b.logits);
    if (logits.rank() != 2 || logits.extent(0) == 0) {
      throw ShapeError("irm_penalty: logits must be [n>=1,C], got " +
                       shape_str(logits.shape()));
    }
    const int64_t n = logits.extent(0), c = logits.extent(1);
    DomainState st;
    st.logits = b.logits;
    st.y = b.y;
    st.n = n;
    st.c = c;
    st.probs.resize(n * c);
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const int label = b.y[i];
      if (label < 0 || label >= c) {
        throw IndexError("irm_penalty: label " + std::to_string(label) +
                         " outside [0," + std::to_string(c) + ")");
      }
      const double* o = logits.data() + i * c;
      double m = o[0];
      for (int64_t j = 1; j < c; ++j) m = std::max(m, o[j]);
      double z = 0.0;
      for (int64_t j = 0; j < c; ++j) z += std::exp(o[j] - m);
      double po = 0.0;
      double* p = st.probs.data() + i * c;
      for (int64_t j = 0; j < c; ++j) {
        p[j] = std::exp(o[j] - m) / z;
        po += p[j] * o[j];
      }
      s += po - o[label];
    }
    st.s = s / static_cast<double>(n);
    penalty += st.s * st.s;
    states->push_back(std::move(st));
  }
  penalty /= static_cast<double>(ndom);

  auto backward = [states, ndom](Graph& g, NodeId self) {
    const double gout = g.grad(self).item();
    for (const auto& st : *states) {
      if (!g.wants_grad(st.logits)) continue;
      const Tensor& logits = g.value(st.logits);
      std::vector<double> gl(st.n * st.c);
      const double coef = gout * 2.0 * st.s /
                          (static_cast<double>(ndom) * static_cast<double>(st.n));
      for (int64_t i = 0; i < st.n; ++i) {
        const double* o = logits.data() + i * st.c;
        const double* p = st.probs.data() + i * st.c;
        const double po = K().dot(p, o, st.c);
        double* out = gl.data() + i * st.c;
        for (int64_t j = 0; j < st.c; ++j) {
          out[j] = coef * (p[j] + p[j] * (o[j] - po));
        }
        out[st.y[i]] -= coef;
      }
      g.accumulate_grad(st.logits, gl);
    }
  };

  std::vector<NodeId> inputs;
  for (const FeatureBatch& b : batches) inputs.push_back(b.logits);
  return g.custom("irm_penalty", std::move(inputs), Tensor::scalar(penalty),
                  std::move(backward));
}

NodeId conditional_entropy(Graph& g, NodeId zid, std::span<const int> y) {
  const Tensor& z = g.value(zid);
  check_feature_matrix(z, "conditional_entropy");
  const int64_t n = z.extent(0), d = z.extent(1);
  if (static_cast<int64_t>(y.size()) != n) {
    throw ShapeError("conditional_entropy: " + std::to_string(y.size()) +
                     " labels for batch of " + std::to_string(n));
  }
  auto stats = std::make_shared<ClassStats>(class_stats(z, y));
  const int64_t nc = static_cast<int64_t>(stats->counts.size());

  constexpr double k2pie = 2.0 * std::numbers::pi * std::numbers::e;
  double h = 0.0;
  for (int64_t c = 0; c < nc; ++c) {
    double hc = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      hc += std::log(k2pie * std::max(stats->variances[c * d + j],
                                      kEntropyVarFloor));
    }
    h += 0.5 * hc * static_cast<double>(stats->counts[c]) / static_cast<double>(n);
  }

  auto backward = [zid, stats, n, d](Graph& g, NodeId self) {
    if (!g.wants_grad(zid)) return;
    const double gout = g.grad(self).item();
    const Tensor& z = g.value(zid);
    std::vector<double> gz(n * d, 0.0);
    for (int64_t i = 0; i < n; ++i) {
      const int32_t c = stats->class_of[i];
      const double* mu = stats->means.data() + c * d;
      const double* var = stats->variances.data() + c * d;
      double* out = gz.data() + i * d;
      for (int64_t j = 0; j < d; ++j) {
        if (var[j] > kEntropyVarFloor) {
          out[j] = gout * (z.data()[i * d + j] - mu[j]) /
                   (static_cast<double>(n) * var[j]);
        }
      }
    }
    g.accumulate_grad(zid, gz);
  };
  return g.custom("conditional_entropy", {zid}, Tensor::scalar(h),
                  std::move(backward));
}

NodeId ib_variance_penalty(Graph& g, NodeId zid) {
  const Tensor& z = g.value(zid);
  check_feature_matrix(z, "ib_variance_penalty");
  const int64_t n = z.extent(0), d = z.extent(1);
  auto mu = std::make_shared<std::vector<double>>(d, 0.0);
  for (int64_t i = 0; i < n; ++i) K().axpy(1.0, z.data() + i * d, mu->data(), d);
  K().scal(1.0 / static_cast<double>(n), mu->data(), d);
  double value = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      const double dev = z.data()[i * d + j] - (*mu)[j];
      value += dev * dev;
    }
  }
  value /= static_cast<double>(n) * static_cast<double>(d);

  auto backward = [zid, mu, n, d](Graph& g, NodeId self) {
    if (!g.wants_grad(zid)) return;
    const double gout = g.grad(self).item();
    const Tensor& z = g.value(zid);
    std::vector<double> gz(n * d);
    const double coef = gout * 2.0 / (static_cast<double>(n) * static_cast<double>(d));
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        gz[i * d + j] = coef * (z.data()[i * d + j] - (*mu)[j]);
      }
    }
    g.accumulate_grad(zid, gz);
  };
  return g.custom("ib_variance_penalty", {zid}, Tensor::scalar(value),
                  std::move(backward));
}

NodeId cem_loss(Graph& g, std::span<const FeatureBatch> batches) {
  validate_batches(batches, g, "cem_loss");
  const NodeId irm = irm_penalty(g, batches);
  std::vector<NodeId> zs;
  std::vector<int> ys;
  for (const FeatureBatch& b : batches) {
    zs.push_back(b.z);
    ys.insert(ys.end(), b.y.begin(), b.y.end());
  }
  const NodeId pooled = zs.size() == 1 ? zs[0] : g.concat_rows(zs);
  return g.add(irm, conditional_entropy(g, pooled, ys));
}

CompositeResult composite_objective(Graph& g, const ObjectiveConfig& config,
                                    std::span<const FeatureBatch> batches,
                                    int64_t step) {
  validate_batches(batches, g, "composite_objective");
  if (config.alpha < 0.0 || config.beta < 0.0) {
    throw ConfigError("composite_objective: alpha and beta must be >= 0");
  }
  const bool warm = step < config.warmup_steps;
  const double alpha = warm ? 0.0 : config.alpha;
  const double beta = warm ? 0.0 : config.beta;
  const int64_t ndom = static_cast<int64_t>(batches.size());

  NodeId acc = g.softmax_cross_entropy(batches[0].logits, batches[0].y);
  for (int64_t e = 1; e < ndom; ++e) {
    acc = g.add(acc, g.softmax_cross_entropy(batches[e].logits, batches[e].y));
  }
  const NodeId risk = g.scale(acc, 1.0 / static_cast<double>(ndom));

  enum class Cov { none, mmd, coral };
  enum class Concept { none, irm, cem, ib, ib_irm };
  Cov cov = Cov::none;
  Concept concept_kind = Concept::none;
  switch (config.algorithm) {
    case Algorithm::erm: break;
    case Algorithm::mmd: cov = Cov::mmd; break;
    case Algorithm::coral: cov = Cov::coral; break;
    case Algorithm::irm: concept_kind = Concept::irm; break;
    case Algorithm::cem: concept_kind = Concept::cem; break;
    case Algorithm::ib_erm: concept_kind = Concept::ib; break;
    case Algorithm::ib_irm: concept_kind = Concept::ib_irm; break;
    case Algorithm::mmd_irm: cov = Cov::mmd; concept_kind = Concept::irm; break;
    case Algorithm::mmd_cem: cov = Cov::mmd; concept_kind = Concept::cem; break;
    case Algorithm::coral_cem: cov = Cov::coral; concept_kind = Concept::cem; break;
  }

  NodeId total = risk;
  if (cov != Cov::none && alpha > 0.0 && ndom >= 2) {
    NodeId cacc = -1;
    int64_t pairs = 0;
    for (int64_t i = 0; i < ndom; ++i) {
      for (int64_t j = i + 1; j < ndom; ++j) {
        const NodeId pen = cov == Cov::mmd
                               ? mmd2(g, batches[i].z, batches[j].z)
                               : coral(g, batches[i].z, batches[j].z);
        cacc = pairs == 0 ? pen : g.add(cacc, pen);
        ++pairs;
      }
    }
    const NodeId cov_term = g.scale(cacc, 1.0 / static_cast<double>(pairs));
    total = g.add(total, g.scale(cov_term, alpha));
  }
  if (concept_kind != Concept::none && beta > 0.0) {
    NodeId cnode = -1;
    switch (concept_kind) {
      case Concept::irm: cnode = irm_penalty(g, batches); break;
      case Concept::cem: cnode = cem_loss(g, batches); break;
      case Concept::ib: {
        NodeId iacc = ib_variance_penalty(g, batches[0].z);
        for (int64_t e = 1; e < ndom; ++e) {
          iacc = g.add(iacc, ib_variance_penalty(g, batches[e].z));
        }
        cnode = g.scale(iacc, 1.0 / static_cast<double>(ndom));
        break;
      }
      case Concept::ib_irm: {
        NodeId iacc = ib_variance_penalty(g, batches[0].z);
        for (int64_t e = 1; e < ndom; ++e) {
          iacc = g.add(iacc, ib_variance_penalty(g, batches[e].z));
        }
        cnode = g.add(g.scale(iacc, 1.0 / static_cast<double>(ndom)),
                      irm_penalty(g, batches));
        break;
      }
      case Concept::none: break;
    }
    total = g.add(total, g.scale(cnode, beta));
  }
  return {total, risk};
}

double mmd2_value(const Tensor& za, const Tensor& zb,
                  std::span<const double> gammas) {
  Graph g;
  return g.value(mmd2(g, g.input(za), g.input(zb), gammas)).item();
}

double coral_value(const Tensor& za, const Tensor& zb) {
  Graph g;
  return g.value(coral(g, g.input(za), g.input(zb))).item();
}

double conditional_entropy_value(const Tensor& z, std::span<const int> y) {
  Graph g;
  return g.value(conditional_entropy(g, g.input(z), y)).item();
}

double ib_variance_value(const Tensor& z) {
  Graph g;
  return g.value(ib_variance_penalty(g, g.input(z))).item();
}

}  // namespace shiftlab::penalties
