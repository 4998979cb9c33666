#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "groundnet/tensor.hpp"

namespace groundnet {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid for the tape
// that created it.
struct Var {
  std::int32_t id = -1;
};

// Reverse-mode gradient tape. Ops append nodes in execution order;
// backward() replays them in exact reverse order, accumulating gradients
// additively into every parent. A tape is single-threaded; distinct
// tapes over shared read-only tensors may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf with gradient tracking (inputs, parameters).
  Var leaf(Tensor value);
  // Leaf that never receives a gradient (data constants).
  Var constant(Tensor value);

  // --- differentiable ops ---
  // matmul supports (m,k)x(k,n)->(m,n), (m,k)x(k)->(m) and (m)x(m,n)->(n).
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var concat(std::span<const Var> parts);
  Var elementwise_mul(Var a, Var b);
  Var softmax(Var x);       // over the last axis; rank 1 or 2
  Var l2_normalize(Var x);  // x / (||x||_2 + eps), eps = 1e-8; zero maps to zero
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var embedding_lookup(Var table, std::int64_t row);  // (V,E) -> (E)
  Var scalar_scale(Var x, double c);
  Var sum(Var x);                                    // -> (1)
  Var slice(Var x, std::int64_t offset, std::int64_t len);  // rank 1
  Var reshape(Var x, std::vector<std::int64_t> shape);
  Var log(Var x);
  Var pick(Var x, std::int64_t index);  // -> (1)
  Var normalize_sum(Var x);             // x / sum(x); VanishingMass if |sum| < 1e-12

  // Seeds d(root)/d(root) = 1 and walks the tape backwards. root must
  // have size 1.
  void backward(Var root);

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  // Gradient accumulated for v by the last backward() call (zeros if
  // the node was never reached).
  const Tensor& grad(Var v);

  std::size_t node_count() const { return nodes_.size(); }

  static constexpr double kL2Eps = 1e-8;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_live = false;  // grad tensor allocated & meaningful
    std::vector<std::int32_t> parents;
    std::function<void(Tape&, std::int32_t)> backward_fn;
  };

  Var push(Tensor value, std::vector<std::int32_t> parents,
           std::function<void(Tape&, std::int32_t)> backward_fn);
  Tensor& grad_buffer(std::int32_t id);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  std::vector<Node> nodes_;
};

// Max relative finite-difference error of d(fn)/d(inputs) at the given
// points, over all coordinates of all inputs: |g_ad - g_fd| /
// max(1, |g_ad| + |g_fd|). fn must return a size-1 Var. Central
// differences with step h.
double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& fn,
                  const std::vector<Tensor>& points, double h = 1e-5);
double grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point,
                  double h = 1e-5);

}  // namespace groundnet
