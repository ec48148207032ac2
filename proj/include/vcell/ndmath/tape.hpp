#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vcell/ndmath/tensor.hpp"

namespace vcell {

class Tape;
class ParamSet;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

/// Records primitive applications in execution order. Backward visits nodes in
/// reverse recorded order, so the record is a topological order by construction.
/// A tape belongs to one thread for its whole lifetime.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);

  /// Named differentiable input. Requesting the same name twice returns the same node.
  Var leaf(const std::string& name, const Tensor& value);

  /// Leaf for a trainable parameter, constant for a frozen buffer.
  Var param(const ParamSet& params, const std::string& name);

  Var record(Tensor value, bool requires_grad, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward pass; zero for nodes it never reached.
  Tensor grad(Var v) const;
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  /// Adds g into the gradient buffer of node id (no-op for constants).
  void accumulate(std::size_t id, const Tensor& g);
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    accumulate(id, Tensor(g));
  }

  void backward(Var output, const Tensor& seed);
  /// Seeds a 1x1 output with 1.
  void backward(Var scalar_output);

  /// Gradients of every named leaf after backward(); unreached leaves are zero.
  std::map<std::string, Tensor> leaf_grads() const;

  std::size_t size() const { return nodes_.size(); }
  void set_frozen(std::function<bool(const std::string&)> frozen) { frozen_ = std::move(frozen); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> leaves_;
  std::map<std::string, std::size_t> buffers_;
  std::function<bool(const std::string&)> frozen_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

/// Attention over independent row groups: query group g is rows
/// [g*query_group, (g+1)*query_group) of Q and attends to the matching key group.
struct AttentionLayout {
  Index query_group = 1;
  Index key_group = 1;
  Index heads = 1;
  /// Excludes the last key of every group (test harness for condition injection).
  bool mask_last_key = false;
};

namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// a + 1 * row, row is 1 x cols(a).
Var add_row(Var a, Var row);
Var silu(Var a);
Var tanh(Var a);
/// Row-wise y = gain * x / sqrt(mean(x^2) + eps); gain is 1 x cols.
Var rmsnorm_rows(Var x, Var gain, double eps);
Var attention(Var q, Var k, Var v, const AttentionLayout& layout);
/// out.row(i) = a.row(index[i]); gradients scatter-add back.
Var gather_rows(Var a, std::vector<Index> index);
Var vstack(Var top, Var bottom);
/// Mean of consecutive blocks of `group` rows.
Var group_mean(Var a, Index group);
/// Per group of rows: softmax over the scores column, then the weighted sum of value rows.
Var softmax_pool(Var scores, Var values, Index group);
/// Mean of squared entries, 1x1.
Var mean_square(Var a);
/// Sum of all entries, 1x1.
Var sum(Var a);

}  // namespace ad

/// Row-index helpers for the stacked-row rank-3 layout.
std::vector<Index> repeat_each(Index count, Index times);
std::vector<Index> tile_index(Index count, Index period);

}  // namespace vcell
