#include "vcell/ndmath/tape.hpp"

#include <cmath>

#include "vcell/ndmath/ops.hpp"
#include "vcell/ndmath/params.hpp"

namespace vcell {

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::leaf(const std::string& name, const Tensor& value) {
  if (auto it = leaves_.find(name); it != leaves_.end()) {
    return Var{this, it->second};
  }
  Var v = record(value, true, nullptr);
  leaves_.emplace(name, v.id);
  return v;
}

Var Tape::param(const ParamSet& params, const std::string& name) {
  const bool frozen = !params.trainable(name) || (frozen_ && frozen_(name));
  if (!frozen) {
    return leaf(name, params.at(name));
  }
  if (auto it = buffers_.find(name); it != buffers_.end()) {
    return Var{this, it->second};
  }
  Var v = constant(params.at(name));
  buffers_.emplace(name, v.id);
  return v;
}

Var Tape::record(Tensor value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backward = requires_grad ? std::move(backward) : nullptr;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) {
    return Tensor::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) {
    return;
  }
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw DimensionError("tape: gradient shape " + shape_str(g.rows(), g.cols()) + " does not match node shape " +
                         shape_str(n.value.rows(), n.value.cols()));
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var output, const Tensor& seed) {
  const Tensor& out = nodes_.at(output.id).value;
  if (seed.rows() != out.rows() || seed.cols() != out.cols()) {
    throw DimensionError("backward: seed shape " + shape_str(seed.rows(), seed.cols()) + " does not match output " +
                         shape_str(out.rows(), out.cols()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(output.id, seed);
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) {
      n.backward(*this, i);
    }
  }
}

void Tape::backward(Var scalar_output) { backward(scalar_output, Tensor::Ones(1, 1)); }

std::map<std::string, Tensor> Tape::leaf_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : leaves_) {
    out.emplace(name, grad(Var{const_cast<Tape*>(this), id}));
  }
  return out;
}

std::vector<Index> repeat_each(Index count, Index times) {
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(count * times));
  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < times; ++j) {
      idx.push_back(i);
    }
  }
  return idx;
}

std::vector<Index> tile_index(Index count, Index period) {
  std::vector<Index> idx(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    idx[static_cast<std::size_t>(i)] = i % period;
  }
  return idx;
}

namespace ad {
namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw ArgumentError("tape ops: operands recorded on different tapes");
  }
  return *a.tape;
}

bool any_grad(Tape& t, std::initializer_list<Var> vs) {
  for (Var v : vs) {
    if (t.requires_grad(v)) return true;
  }
  return false;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Tensor out = vcell::matmul(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), any_grad(t, {a, b}), [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() + b.value(), any_grad(t, {a, b}), [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self));
    tp.accumulate(ib, tp.upstream(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() - b.value(), any_grad(t, {a, b}), [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self));
    if (tp.requires_grad(ib)) tp.accumulate(ib, -tp.upstream(self));
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value().cwiseProduct(b.value()), any_grad(t, {a, b}), [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  const std::size_t ia = a.id;
  return t.record(a.value() * s, t.requires_grad(a),
                  [ia, s](Tape& tp, std::size_t self) { tp.accumulate(ia, tp.upstream(self) * s); });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                         shape_str(row.rows(), row.cols()));
  }
  Tensor out = a.value().rowwise() + row.value().row(0);
  const std::size_t ia = a.id, ir = row.id;
  return t.record(std::move(out), any_grad(t, {a, row}), [ia, ir](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    tp.accumulate(ia, g);
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var silu(Var a) {
  Tape& t = *a.tape;
  Tensor out = a.value().unaryExpr([](double x) { return vcell::silu(x); });
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia](Tape& tp, std::size_t self) {
    Tensor d = tp.value(ia).unaryExpr([](double x) {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    });
    tp.accumulate(ia, tp.upstream(self).cwiseProduct(d));
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape;
  Tensor out = a.value().array().tanh().matrix();
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia](Tape& tp, std::size_t self) {
    const Tensor& y = tp.value(self);
    tp.accumulate(ia, tp.upstream(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var rmsnorm_rows(Var x, Var gain, double eps) {
  Tape& t = same_tape(x, gain);
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  if (gv.rows() != 1 || gv.cols() != xv.cols()) {
    throw DimensionError("rmsnorm: gain must be 1x" + std::to_string(xv.cols()));
  }
  const double n = static_cast<double>(xv.cols());
  Vector<double> inv(xv.rows());
  Tensor out(xv.rows(), xv.cols());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double denom = std::sqrt(xv.row(r).squaredNorm() / n + eps);
    inv(r) = denom > 0.0 ? 1.0 / denom : 0.0;
    out.row(r) = xv.row(r).cwiseProduct(gv.row(0)) * inv(r);
  }
  const std::size_t ix = x.id, ig = gain.id;
  return t.record(std::move(out), any_grad(t, {x, gain}), [ix, ig, inv, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& xv = tp.value(ix);
    const Tensor& gv = tp.value(ig);
    if (tp.requires_grad(ig)) {
      Tensor dg = Tensor::Zero(1, xv.cols());
      for (Index r = 0; r < xv.rows(); ++r) {
        dg.row(0) += g.row(r).cwiseProduct(xv.row(r)) * inv(r);
      }
      tp.accumulate(ig, dg);
    }
    if (tp.requires_grad(ix)) {
      Tensor dx(xv.rows(), xv.cols());
      for (Index r = 0; r < xv.rows(); ++r) {
        const auto gg = g.row(r).cwiseProduct(gv.row(0));
        const double dot = gg.dot(xv.row(r));
        const double inv3 = inv(r) * inv(r) * inv(r);
        dx.row(r) = gg * inv(r) - xv.row(r) * (dot * inv3 / n);
      }
      tp.accumulate(ix, dx);
    }
  });
}

Var attention(Var q, Var k, Var v, const AttentionLayout& layout) {
  Tape& t = same_tape(q, k);
  same_tape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const Index qg = layout.query_group, kg = layout.key_group, heads = layout.heads;
  if (qg < 1 || heads < 1) {
    throw ArgumentError("attention: group sizes and head count must be positive");
  }
  const Index visible = layout.mask_last_key ? kg - 1 : kg;
  if (kg < 1 || visible < 1) {
    throw ArgumentError("attention: zero-length key sequence");
  }
  if (qv.cols() != kv.cols() || qv.cols() != vv.cols() || kv.rows() != vv.rows()) {
    throw DimensionError("attention: Q/K/V widths or key/value lengths differ");
  }
  if (qv.rows() % qg != 0 || kv.rows() % kg != 0 || qv.rows() / qg != kv.rows() / kg) {
    throw DimensionError("attention: row counts do not split into matching groups");
  }
  if (qv.cols() % heads != 0) {
    throw DimensionError("attention: width not divisible by head count");
  }
  const Index groups = qv.rows() / qg;
  const Index hd = qv.cols() / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(hd));

  // Cached probabilities, one block per (group, head).
  std::vector<Tensor> probs(static_cast<std::size_t>(groups * heads));
  Tensor out(qv.rows(), qv.cols());
  for (Index g = 0; g < groups; ++g) {
    for (Index h = 0; h < heads; ++h) {
      auto qb = qv.block(g * qg, h * hd, qg, hd);
      auto kb = kv.block(g * kg, h * hd, visible, hd);
      auto vb = vv.block(g * kg, h * hd, visible, hd);
      Tensor a = softmax_rows(Tensor(qb * kb.transpose() * sc));
      out.block(g * qg, h * hd, qg, hd) = a * vb;
      probs[static_cast<std::size_t>(g * heads + h)] = std::move(a);
    }
  }
  const std::size_t iq = q.id, ik = k.id, iv = v.id;
  return t.record(std::move(out), any_grad(t, {q, k, v}),
                  [iq, ik, iv, qg, kg, visible, heads, hd, groups, sc, probs = std::move(probs)](Tape& tp,
                                                                                                 std::size_t self) {
                    const Tensor& g = tp.upstream(self);
                    const Tensor& qv = tp.value(iq);
                    const Tensor& kv = tp.value(ik);
                    const Tensor& vv = tp.value(iv);
                    Tensor dq = Tensor::Zero(qv.rows(), qv.cols());
                    Tensor dk = Tensor::Zero(kv.rows(), kv.cols());
                    Tensor dv = Tensor::Zero(vv.rows(), vv.cols());
                    for (Index gi = 0; gi < groups; ++gi) {
                      for (Index h = 0; h < heads; ++h) {
                        const Tensor& a = probs[static_cast<std::size_t>(gi * heads + h)];
                        auto go = g.block(gi * qg, h * hd, qg, hd);
                        auto qb = qv.block(gi * qg, h * hd, qg, hd);
                        auto kb = kv.block(gi * kg, h * hd, visible, hd);
                        auto vb = vv.block(gi * kg, h * hd, visible, hd);
                        dv.block(gi * kg, h * hd, visible, hd) += a.transpose() * go;
                        Tensor da = go * vb.transpose();
                        Tensor ds = a.cwiseProduct(da);
                        const Vector<double> rowdot = ds.rowwise().sum();
                        ds -= a.cwiseProduct(rowdot.replicate(1, a.cols()));
                        dq.block(gi * qg, h * hd, qg, hd) += ds * kb * sc;
                        dk.block(gi * kg, h * hd, visible, hd) += ds.transpose() * qb * sc;
                      }
                    }
                    if (tp.requires_grad(iq)) tp.accumulate(iq, dq);
                    if (tp.requires_grad(ik)) tp.accumulate(ik, dk);
                    if (tp.requires_grad(iv)) tp.accumulate(iv, dv);
                  });
}

Var gather_rows(Var a, std::vector<Index> index) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  Tensor out(static_cast<Index>(index.size()), av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= av.rows()) {
      throw ArgumentError("gather_rows: row index " + std::to_string(index[i]) + " out of range");
    }
    out.row(static_cast<Index>(i)) = av.row(index[i]);
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia, index = std::move(index)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    Tensor da = Tensor::Zero(tp.value(ia).rows(), g.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
      da.row(index[i]) += g.row(static_cast<Index>(i));
    }
    tp.accumulate(ia, da);
  });
}

Var vstack(Var top, Var bottom) {
  Tape& t = same_tape(top, bottom);
  if (top.cols() != bottom.cols()) {
    throw DimensionError("vstack: column counts differ");
  }
  Tensor out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.value();
  out.bottomRows(bottom.rows()) = bottom.value();
  const std::size_t it = top.id, ib = bottom.id;
  const Index split = top.rows();
  return t.record(std::move(out), any_grad(t, {top, bottom}), [it, ib, split](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (tp.requires_grad(it)) tp.accumulate(it, g.topRows(split));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.bottomRows(g.rows() - split));
  });
}

Var group_mean(Var a, Index group) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (group < 1 || av.rows() % group != 0) {
    throw DimensionError("group_mean: " + std::to_string(av.rows()) + " rows do not split into groups of " +
                         std::to_string(group));
  }
  const Index groups = av.rows() / group;
  Tensor out(groups, av.cols());
  for (Index g = 0; g < groups; ++g) {
    out.row(g) = av.middleRows(g * group, group).colwise().sum() / static_cast<double>(group);
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia, group, groups](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    Tensor da(groups * group, g.cols());
    for (Index gi = 0; gi < groups; ++gi) {
      da.middleRows(gi * group, group) = g.row(gi).replicate(group, 1) / static_cast<double>(group);
    }
    tp.accumulate(ia, da);
  });
}

Var softmax_pool(Var scores, Var values, Index group) {
  Tape& t = same_tape(scores, values);
  const Tensor& sv = scores.value();
  const Tensor& vv = values.value();
  if (sv.cols() != 1 || sv.rows() != vv.rows() || group < 1 || sv.rows() % group != 0) {
    throw DimensionError("softmax_pool: expected scores Rx1 and values Rxd with R divisible by the group size");
  }
  const Index groups = sv.rows() / group;
  Tensor alpha(groups, group);
  Tensor out(groups, vv.cols());
  for (Index g = 0; g < groups; ++g) {
    alpha.row(g) = softmax(sv.middleRows(g * group, group).transpose());
    out.row(g) = alpha.row(g) * vv.middleRows(g * group, group);
  }
  const std::size_t is = scores.id, iv = values.id;
  return t.record(std::move(out), any_grad(t, {scores, values}),
                  [is, iv, group, groups, alpha](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.upstream(self);
                    const Tensor& vv = tp.value(iv);
                    Tensor ds(groups * group, 1);
                    Tensor dv(groups * group, vv.cols());
                    for (Index gi = 0; gi < groups; ++gi) {
                      dv.middleRows(gi * group, group) = alpha.row(gi).transpose() * g.row(gi);
                      const RowVector<double> da = g.row(gi) * vv.middleRows(gi * group, group).transpose();
                      const double dot = da.dot(alpha.row(gi));
                      for (Index j = 0; j < group; ++j) {
                        ds(gi * group + j, 0) = alpha(gi, j) * (da(j) - dot);
                      }
                    }
                    if (tp.requires_grad(is)) tp.accumulate(is, ds);
                    if (tp.requires_grad(iv)) tp.accumulate(iv, dv);
                  });
}

Var mean_square(Var a) {
  Tape& t = *a.tape;
  const double n = static_cast<double>(a.value().size());
  if (n == 0) {
    throw ArgumentError("mean_square: empty tensor");
  }
  Tensor out(1, 1);
  out(0, 0) = a.value().squaredNorm() / n;
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia, n](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.value(ia) * (2.0 * tp.upstream(self)(0, 0) / n));
  });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id;
  return t.record(std::move(out), t.requires_grad(a), [ia](Tape& tp, std::size_t self) {
    const Tensor& av = tp.value(ia);
    tp.accumulate(ia, Tensor::Constant(av.rows(), av.cols(), tp.upstream(self)(0, 0)));
  });
}

}  // namespace ad
}  // namespace vcell
