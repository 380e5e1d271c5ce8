#include "shiftlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "shiftlab/errors.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab {

namespace {
const kernels::KernelTable& K() { return kernels::active(); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}
}  // namespace

NodeId Graph::push(const char* op, std::vector<NodeId> inputs, Tensor value,
                   BackwardFn backward, Parameter* parameter) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite values in output");
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  node.parameter = parameter;
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value, bool needs_grad) {
  const NodeId id = push("input", {}, std::move(value), nullptr);
  nodes_[id].needs_grad = needs_grad;
  return id;
}

NodeId Graph::param(Parameter& p) {
  for (NodeId id = 0; id < size(); ++id) {
    if (nodes_[id].parameter == &p) return id;
  }
  Tensor copy = p.value;  // leaf snapshots the current value
  const NodeId id = push("param", {}, std::move(copy), nullptr, &p);
  nodes_[id].needs_grad = true;
  return id;
}

bool Graph::wants_grad(NodeId id) const { return nodes_[id].needs_grad; }

bool Graph::any_input_wants_grad(const std::vector<NodeId>& inputs) const {
  return std::any_of(inputs.begin(), inputs.end(),
                     [&](NodeId i) { return nodes_[i].needs_grad; });
}

Tensor& Graph::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (!n.grad_touched) {
    n.grad = Tensor::zeros_like(n.value);
    n.grad_touched = true;
  }
  return n.grad;
}

const Tensor& Graph::grad(NodeId id) { return grad_buffer(id); }

void Graph::accumulate_grad(NodeId id, std::span<const double> g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (static_cast<int64_t>(g.size()) != n.value.numel()) {
    throw ShapeError(std::string("accumulate_grad(") + n.op + "): got " +
                     std::to_string(g.size()) + " values for shape " +
                     shape_str(n.value.shape()));
  }
  Tensor& buf = grad_buffer(id);
  K().axpy(1.0, g.data(), buf.data(), buf.numel());
}

void Graph::backward(NodeId loss) {
  if (backward_done_) {
    throw StateError("backward: record already replayed; build a new graph");
  }
  if (nodes_[loss].value.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(nodes_[loss].value.shape()));
  }
  grad_buffer(loss).data()[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.grad_touched || !n.needs_grad || !n.backward) continue;
    n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.parameter && n.grad_touched) {
      Parameter& p = *n.parameter;
      K().axpy(1.0, n.grad.data(), p.grad.data(), p.grad.numel());
      p.grad_ready = true;
    }
  }
  backward_done_ = true;
}

NodeId Graph::custom(const char* op, std::vector<NodeId> inputs, Tensor value,
                     BackwardFn backward) {
  const bool needs = any_input_wants_grad(inputs);
  const NodeId id = push(op, std::move(inputs), std::move(value),
                         needs ? std::move(backward) : BackwardFn{});
  nodes_[id].needs_grad = needs;
  return id;
}

// ---------------------------------------------------------------------------
// conv2d: cross-correlation via im2col + GEMM, batch images side by side in
// the column dimension. The column matrix is retained for the weight-gradient
// GEMM in backward.
// ---------------------------------------------------------------------------
NodeId Graph::conv2d(NodeId xid, NodeId wid, int64_t stride, int64_t padding) {
  const Tensor& x = value(xid);
  const Tensor& w = value(wid);
  require(x.rank() == 4, "conv2d: input must be [N,C,H,W], got " +
                             shape_str(x.shape()));
  require(w.rank() == 4, "conv2d: kernel must be [F,C,kH,kW], got " +
                             shape_str(w.shape()));
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  if (padding < 0) throw ArgumentError("conv2d: padding must be >= 0");
  const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2),
                wd = x.extent(3);
  const int64_t f = w.extent(0), kc = w.extent(1), kh = w.extent(2),
                kw = w.extent(3);
  require(kc == c, "conv2d: channel axes disagree: input axis 1 is " +
                       std::to_string(c) + ", kernel axis 1 is " +
                       std::to_string(kc));
  require(kh <= h + 2 * padding && kw <= wd + 2 * padding,
          "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
              " exceeds padded input " + std::to_string(h + 2 * padding) +
              "x" + std::to_string(wd + 2 * padding) + " (axes 2,3)");
  const int64_t oh = kernels::conv_out_extent(h, kh, stride, padding);
  const int64_t ow = kernels::conv_out_extent(wd, kw, stride, padding);
  const int64_t kdim = c * kh * kw;
  const int64_t patch = oh * ow;
  const int64_t ncols = n * patch;

  auto cols = std::make_shared<std::vector<double>>(
      static_cast<size_t>(kdim) * ncols);
  for (int64_t img = 0; img < n; ++img) {
    kernels::im2col(x.data() + img * c * h * wd, c, h, wd, kh, kw, stride,
                    padding, cols->data() + img * patch, ncols);
  }
  std::vector<double> tmp(static_cast<size_t>(f) * ncols);
  K().gemm(false, false, f, ncols, kdim, 1.0, w.data(), kdim, cols->data(),
           ncols, 0.0, tmp.data(), ncols);
  Tensor out({n, f, oh, ow});
  for (int64_t img = 0; img < n; ++img) {
    for (int64_t ff = 0; ff < f; ++ff) {
      std::memcpy(out.data() + (img * f + ff) * patch,
                  tmp.data() + ff * ncols + img * patch,
                  static_cast<size_t>(patch) * sizeof(double));
    }
  }

  auto backward = [xid, wid, cols, stride, padding, n, c, h, wd, f, kh, kw,
                   kdim, patch, ncols](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    std::vector<double> gy_mat(static_cast<size_t>(f) * ncols);
    for (int64_t img = 0; img < n; ++img) {
      for (int64_t ff = 0; ff < f; ++ff) {
        std::memcpy(gy_mat.data() + ff * ncols + img * patch,
                    gy.data() + (img * f + ff) * patch,
                    static_cast<size_t>(patch) * sizeof(double));
      }
    }
    if (g.wants_grad(wid)) {
      std::vector<double> gw(static_cast<size_t>(f) * kdim);
      K().gemm(false, true, f, kdim, ncols, 1.0, gy_mat.data(), ncols,
               cols->data(), ncols, 0.0, gw.data(), kdim);
      g.accumulate_grad(wid, gw);
    }
    if (g.wants_grad(xid)) {
      const Tensor& wv = g.value(wid);
      std::vector<double> gcols(static_cast<size_t>(kdim) * ncols);
      K().gemm(true, false, kdim, ncols, f, 1.0, wv.data(), kdim,
               gy_mat.data(), ncols, 0.0, gcols.data(), ncols);
      std::vector<double> gx(static_cast<size_t>(n) * c * h * wd, 0.0);
      for (int64_t img = 0; img < n; ++img) {
        kernels::col2im_add(gcols.data() + img * patch, ncols, c, h, wd, kh,
                            kw, stride, padding, gx.data() + img * c * h * wd);
      }
      g.accumulate_grad(xid, gx);
    }
  };
  return custom("conv2d", {xid, wid}, std::move(out), std::move(backward));
}

NodeId Graph::bias_channels(NodeId xid, NodeId bid) {
  const Tensor& x = value(xid);
  const Tensor& b = value(bid);
  require(x.rank() == 4 && b.rank() == 1 && b.extent(0) == x.extent(1),
          "bias_channels: need [N,F,H,W] plus [F]; got " +
              shape_str(x.shape()) + " and " + shape_str(b.shape()));
  const int64_t n = x.extent(0), f = x.extent(1),
                plane = x.extent(2) * x.extent(3);
  Tensor out = x;
  for (int64_t img = 0; img < n; ++img) {
    for (int64_t ff = 0; ff < f; ++ff) {
      double* dst = out.data() + (img * f + ff) * plane;
      const double bv = b.data()[ff];
      for (int64_t i = 0; i < plane; ++i) dst[i] += bv;
    }
  }
  auto backward = [xid, bid, n, f, plane](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    if (g.wants_grad(xid)) g.accumulate_grad(xid, gy.span());
    if (g.wants_grad(bid)) {
      std::vector<double> gb(static_cast<size_t>(f), 0.0);
      for (int64_t img = 0; img < n; ++img) {
        for (int64_t ff = 0; ff < f; ++ff) {
          gb[ff] += K().sum(gy.data() + (img * f + ff) * plane, plane);
        }
      }
      g.accumulate_grad(bid, gb);
    }
  };
  return custom("bias_channels", {xid, bid}, std::move(out),
                std::move(backward));
}

NodeId Graph::dense(NodeId xid, NodeId wid, NodeId bid) {
  const Tensor& x = value(xid);
  const Tensor& w = value(wid);
  const Tensor& b = value(bid);
  require(x.rank() == 2, "dense: input must be [N,D], got " +
                             shape_str(x.shape()));
  require(w.rank() == 2 && w.extent(1) == x.extent(1),
          "dense: weight axis 1 must match input axis 1; got " +
              shape_str(w.shape()) + " vs " + shape_str(x.shape()));
  require(b.rank() == 1 && b.extent(0) == w.extent(0),
          "dense: bias must be [" + std::to_string(w.extent(0)) + "], got " +
              shape_str(b.shape()));
  const int64_t n = x.extent(0), din = x.extent(1), dout = w.extent(0);
  Tensor out({n, dout});
  K().gemm(false, true, n, dout, din, 1.0, x.data(), din, w.data(), din, 0.0,
           out.data(), dout);
  for (int64_t i = 0; i < n; ++i) {
    K().axpy(1.0, b.data(), out.data() + i * dout, dout);
  }
  auto backward = [xid, wid, bid, n, din, dout](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    if (g.wants_grad(xid)) {
      std::vector<double> gx(static_cast<size_t>(n) * din);
      K().gemm(false, false, n, din, dout, 1.0, gy.data(), dout,
               g.value(wid).data(), din, 0.0, gx.data(), din);
      g.accumulate_grad(xid, gx);
    }
    if (g.wants_grad(wid)) {
      std::vector<double> gw(static_cast<size_t>(dout) * din);
      K().gemm(true, false, dout, din, n, 1.0, gy.data(), dout,
               g.value(xid).data(), din, 0.0, gw.data(), din);
      g.accumulate_grad(wid, gw);
    }
    if (g.wants_grad(bid)) {
      std::vector<double> gb(static_cast<size_t>(dout), 0.0);
      for (int64_t i = 0; i < n; ++i) {
        K().axpy(1.0, gy.data() + i * dout, gb.data(), dout);
      }
      g.accumulate_grad(bid, gb);
    }
  };
  return custom("dense", {xid, wid, bid}, std::move(out), std::move(backward));
}

NodeId Graph::relu(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.shape());
  K().relu(x.data(), out.data(), x.numel());
  auto backward = [xid](Graph& g, NodeId self) {
    if (!g.wants_grad(xid)) return;
    const Tensor& y = g.value(self);
    const Tensor& gy = g.grad(self);
    std::vector<double> gx(static_cast<size_t>(y.numel()), 0.0);
    K().relu_grad(y.data(), gy.data(), gx.data(), y.numel());
    g.accumulate_grad(xid, gx);
  };
  return custom("relu", {xid}, std::move(out), std::move(backward));
}

NodeId Graph::global_mean_pool(NodeId xid) {
  const Tensor& x = value(xid);
  require(x.rank() == 4, "global_mean_pool: input must be [N,C,H,W], got " +
                             shape_str(x.shape()));
  const int64_t n = x.extent(0), c = x.extent(1),
                plane = x.extent(2) * x.extent(3);
  Tensor out({n, c});
  const double inv = 1.0 / static_cast<double>(plane);
  for (int64_t i = 0; i < n * c; ++i) {
    out.data()[i] = K().sum(x.data() + i * plane, plane) * inv;
  }
  auto backward = [xid, n, c, plane, inv](Graph& g, NodeId self) {
    if (!g.wants_grad(xid)) return;
    const Tensor& gy = g.grad(self);
    std::vector<double> gx(static_cast<size_t>(n) * c * plane);
    for (int64_t i = 0; i < n * c; ++i) {
      const double v = gy.data()[i] * inv;
      double* dst = gx.data() + i * plane;
      for (int64_t p = 0; p < plane; ++p) dst[p] = v;
    }
    g.accumulate_grad(xid, gx);
  };
  return custom("global_mean_pool", {xid}, std::move(out),
                std::move(backward));
}

NodeId Graph::flatten(NodeId xid) {
  const Tensor& x = value(xid);
  require(x.rank() >= 1, "flatten: rank-0 input");
  const int64_t n = x.extent(0);
  const int64_t rest = n == 0 ? 0 : x.numel() / n;
  Tensor out({n, rest}, std::vector<double>(x.data(), x.data() + x.numel()));
  auto backward = [xid](Graph& g, NodeId self) {
    g.accumulate_grad(xid, g.grad(self).span());
  };
  return custom("flatten", {xid}, std::move(out), std::move(backward));
}

NodeId Graph::add(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  require(a.same_shape(b), "add: shapes differ: " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  K().vadd(a.data(), b.data(), out.data(), a.numel());
  auto backward = [aid, bid](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    g.accumulate_grad(aid, gy.span());
    g.accumulate_grad(bid, gy.span());
  };
  return custom("add", {aid, bid}, std::move(out), std::move(backward));
}

NodeId Graph::sub(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  require(a.same_shape(b), "sub: shapes differ: " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  K().vsub(a.data(), b.data(), out.data(), a.numel());
  auto backward = [aid, bid](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    g.accumulate_grad(aid, gy.span());
    if (g.wants_grad(bid)) {
      std::vector<double> neg(gy.data(), gy.data() + gy.numel());
      K().scal(-1.0, neg.data(), static_cast<int64_t>(neg.size()));
      g.accumulate_grad(bid, neg);
    }
  };
  return custom("sub", {aid, bid}, std::move(out), std::move(backward));
}

NodeId Graph::mul(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  require(a.same_shape(b), "mul: shapes differ: " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  K().vmul(a.data(), b.data(), out.data(), a.numel());
  auto backward = [aid, bid](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    if (g.wants_grad(aid)) {
      std::vector<double> ga(static_cast<size_t>(gy.numel()));
      K().vmul(gy.data(), g.value(bid).data(), ga.data(), gy.numel());
      g.accumulate_grad(aid, ga);
    }
    if (g.wants_grad(bid)) {
      std::vector<double> gb(static_cast<size_t>(gy.numel()));
      K().vmul(gy.data(), g.value(aid).data(), gb.data(), gy.numel());
      g.accumulate_grad(bid, gb);
    }
  };
  return custom("mul", {aid, bid}, std::move(out), std::move(backward));
}

NodeId Graph::scale(NodeId aid, double c) {
  const Tensor& a = value(aid);
  Tensor out = a;
  K().scal(c, out.data(), out.numel());
  auto backward = [aid, c](Graph& g, NodeId self) {
    if (!g.wants_grad(aid)) return;
    const Tensor& gy = g.grad(self);
    std::vector<double> ga(gy.data(), gy.data() + gy.numel());
    K().scal(c, ga.data(), static_cast<int64_t>(ga.size()));
    g.accumulate_grad(aid, ga);
  };
  return custom("scale", {aid}, std::move(out), std::move(backward));
}

NodeId Graph::batch_mean(NodeId xid) {
  const Tensor& x = value(xid);
  require(x.rank() == 2 && x.extent(0) >= 1,
          "batch_mean: input must be [N>=1,D], got " + shape_str(x.shape()));
  const int64_t n = x.extent(0), d = x.extent(1);
  Tensor out({d});
  for (int64_t i = 0; i < n; ++i) K().axpy(1.0, x.data() + i * d, out.data(), d);
  K().scal(1.0 / static_cast<double>(n), out.data(), d);
  auto backward = [xid, n, d](Graph& g, NodeId self) {
    if (!g.wants_grad(xid)) return;
    const Tensor& gy = g.grad(self);
    std::vector<double> gx(static_cast<size_t>(n) * d);
    const double inv = 1.0 / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) gx[i * d + j] = gy.data()[j] * inv;
    }
    g.accumulate_grad(xid, gx);
  };
  return custom("batch_mean", {xid}, std::move(out), std::move(backward));
}

NodeId Graph::batch_variance(NodeId xid) {
  const Tensor& x = value(xid);
  require(x.rank() == 2 && x.extent(0) >= 1,
          "batch_variance: input must be [N>=1,D], got " +
              shape_str(x.shape()));
  const int64_t n = x.extent(0), d = x.extent(1);
  auto mean = std::make_shared<std::vector<double>>(d, 0.0);
  for (int64_t i = 0; i < n; ++i) K().axpy(1.0, x.data() + i * d, mean->data(), d);
  K().scal(1.0 / static_cast<double>(n), mean->data(), d);
  Tensor out({d});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      const double dev = x.data()[i * d + j] - (*mean)[j];
      out.data()[j] += dev * dev;
    }
  }
  K().scal(1.0 / static_cast<double>(n), out.data(), d);
  auto backward = [xid, mean, n, d](Graph& g, NodeId self) {
    if (!g.wants_grad(xid)) return;
    const Tensor& gy = g.grad(self);
    const Tensor& x = g.value(xid);
    std::vector<double> gx(static_cast<size_t>(n) * d);
    const double inv2 = 2.0 / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        gx[i * d + j] = gy.data()[j] * inv2 * (x.data()[i * d + j] - (*mean)[j]);
      }
    }
    g.accumulate_grad(xid, gx);
  };
  return custom("batch_variance", {xid}, std::move(out), std::move(backward));
}

NodeId Graph::concat_rows(std::vector<NodeId> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no parts");
  const int64_t d = value(parts[0]).rank() == 2 ? value(parts[0]).extent(1) : -1;
  int64_t total = 0;
  for (const NodeId pid : parts) {
    const Tensor& t = value(pid);
    require(t.rank() == 2 && t.extent(1) == d,
            "concat_rows: every part must be [n," + std::to_string(d) +
                "], got " + shape_str(t.shape()));
    total += t.extent(0);
  }
  Tensor out({total, d});
  int64_t row = 0;
  for (const NodeId pid : parts) {
    const Tensor& t = value(pid);
    std::memcpy(out.data() + row * d, t.data(),
                static_cast<size_t>(t.numel()) * sizeof(double));
    row += t.extent(0);
  }
  auto backward = [parts, d](Graph& g, NodeId self) {
    const Tensor& gy = g.grad(self);
    int64_t row = 0;
    for (const NodeId pid : parts) {
      const int64_t n = g.value(pid).extent(0);
      g.accumulate_grad(pid,
                        std::span<const double>(gy.data() + row * d,
                                                static_cast<size_t>(n) * d));
      row += n;
    }
  };
  std::vector<NodeId> inputs(parts.begin(), parts.end());
  return custom("concat_rows", std::move(inputs), std::move(out),
                std::move(backward));
}

NodeId Graph::weighted_sum(NodeId xid, Tensor weights) {
  const Tensor& x = value(xid);
  if (weights.numel() != x.numel()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.numel()) +
                     " weights for " + std::to_string(x.numel()) + " values");
  }
  const double v = K().dot(x.data(), weights.data(), x.numel());
  auto w = std::make_shared<Tensor>(std::move(weights));
  auto backward = [xid, w](Graph& g, NodeId self) {
    if (!g.wants_grad(xid)) return;
    const double gout = g.grad(self).item();
    std::vector<double> gx(w->data(), w->data() + w->numel());
    K().scal(gout, gx.data(), static_cast<int64_t>(gx.size()));
    g.accumulate_grad(xid, gx);
  };
  return custom("weighted_sum", {xid}, Tensor::scalar(v), std::move(backward));
}

NodeId Graph::softmax_cross_entropy(NodeId lid, std::vector<int> labels) {
  const Tensor& logits = value(lid);
  require(logits.rank() == 2, "softmax_cross_entropy: logits must be [N,C], got " +
                                  shape_str(logits.shape()));
  const int64_t n = logits.extent(0), c = logits.extent(1);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(n));
  }
  for (int64_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw IndexError("softmax_cross_entropy: label " +
                       std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0," + std::to_string(c) +
                       ")");
    }
  }
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n) * c);
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * c;
    double m = row[0];
    for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double logz = std::log(z);
    loss += logz - (row[labels[i]] - m);
    double* prow = probs->data() + i * c;
    for (int64_t j = 0; j < c; ++j) prow[j] = std::exp(row[j] - m) / z;
  }
  loss /= static_cast<double>(n);
  auto backward = [lid, probs, labels = std::move(labels), n,
                   c](Graph& g, NodeId self) {
    if (!g.wants_grad(lid)) return;
    const double gout = g.grad(self).item();
    std::vector<double> gl(static_cast<size_t>(n) * c);
    const double inv = gout / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      const double* prow = probs->data() + i * c;
      double* grow = gl.data() + i * c;
      for (int64_t j = 0; j < c; ++j) grow[j] = prow[j] * inv;
      grow[labels[i]] -= inv;
    }
    g.accumulate_grad(lid, gl);
  };
  return custom("softmax_cross_entropy", {lid}, Tensor::scalar(loss),
                std::move(backward));
}

}  // namespace shiftlab
