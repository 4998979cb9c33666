#include "groundnet/tape.hpp"

#include <cmath>
#include <utility>

#include "groundnet/errors.hpp"

namespace groundnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatch(msg);
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NonFiniteValue(std::string(op) + " produced a non-finite value");
}

}  // namespace

Var Tape::push(Tensor value, std::vector<std::int32_t> parents,
               std::function<void(Tape&, std::int32_t)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buffer(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad_live) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

Var Tape::leaf(Tensor value) {
  check_finite(value, "leaf");
  return push(std::move(value), {}, nullptr);
}

Var Tape::constant(Tensor value) {
  check_finite(value, "constant");
  return push(std::move(value), {}, nullptr);
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Tensor out;
  if (A.rank() == 2 && B.rank() == 2) {
    require(A.dim(1) == B.dim(0), "matmul " + A.shape_string() + " x " + B.shape_string());
    const std::int64_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    out = Tensor::zeros({m, n});
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t p = 0; p < k; ++p) {
        const double aip = A.at(i, p);
        for (std::int64_t j = 0; j < n; ++j) out.at(i, j) += aip * B.at(p, j);
      }
  } else if (A.rank() == 2 && B.rank() == 1) {
    require(A.dim(1) == B.dim(0), "matmul " + A.shape_string() + " x " + B.shape_string());
    const std::int64_t m = A.dim(0), k = A.dim(1);
    out = Tensor::zeros({m});
    for (std::int64_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* row = A.data() + i * k;
      for (std::int64_t p = 0; p < k; ++p) acc += row[p] * B.at(p);
      out.at(i) = acc;
    }
  } else if (A.rank() == 1 && B.rank() == 2) {
    require(A.dim(0) == B.dim(0), "matmul " + A.shape_string() + " x " + B.shape_string());
    const std::int64_t m = B.dim(0), n = B.dim(1);
    out = Tensor::zeros({n});
    for (std::int64_t p = 0; p < m; ++p) {
      const double ap = A.at(p);
      const double* row = B.data() + p * n;
      for (std::int64_t j = 0; j < n; ++j) out.at(j) += ap * row[j];
    }
  } else {
    throw ShapeMismatch("matmul requires rank 1 or 2 operands, got " + A.shape_string() +
                        " x " + B.shape_string());
  }
  check_finite(out, "matmul");
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    Tensor& ga = t.grad_buffer(a.id);
    Tensor& gb = t.grad_buffer(b.id);
    if (A.rank() == 2 && B.rank() == 2) {
      const std::int64_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
      for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::int64_t j = 0; j < n; ++j) acc += g.at(i, j) * B.at(p, j);
          ga.at(i, p) += acc;
        }
      for (std::int64_t p = 0; p < k; ++p)
        for (std::int64_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < m; ++i) acc += A.at(i, p) * g.at(i, j);
          gb.at(p, j) += acc;
        }
    } else if (A.rank() == 2 && B.rank() == 1) {
      const std::int64_t m = A.dim(0), k = A.dim(1);
      for (std::int64_t i = 0; i < m; ++i) {
        const double gi = g.at(i);
        for (std::int64_t p = 0; p < k; ++p) {
          ga.at(i, p) += gi * B.at(p);
          gb.at(p) += gi * A.at(i, p);
        }
      }
    } else {
      const std::int64_t m = B.dim(0), n = B.dim(1);
      for (std::int64_t p = 0; p < m; ++p) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
          acc += g.at(j) * B.at(p, j);
          gb.at(p, j) += g.at(j) * A.at(p);
        }
        ga.at(p) += acc;
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.same_shape(B), "add " + A.shape_string() + " vs " + B.shape_string());
  Tensor out = A;
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) += B.at(i);
  check_finite(out, "add");
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    Tensor& ga = t.grad_buffer(a.id);
    Tensor& gb = t.grad_buffer(b.id);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i);
      gb.at(i) += g.at(i);
    }
  });
}

Var Tape::sub(Var a, Var b) { return add(a, scalar_scale(b, -1.0)); }

Var Tape::concat(std::span<const Var> parts) {
  require(!parts.empty(), "concat of zero tensors");
  std::int64_t total = 0;
  for (Var p : parts) {
    require(value(p).rank() == 1, "concat requires rank-1 parts");
    total += value(p).size();
  }
  Tensor out = Tensor::zeros({total});
  std::int64_t off = 0;
  std::vector<std::int32_t> parents;
  parents.reserve(parts.size());
  for (Var p : parts) {
    const Tensor& v = value(p);
    for (std::int64_t i = 0; i < v.size(); ++i) out.at(off + i) = v.at(i);
    off += v.size();
    parents.push_back(p.id);
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return push(std::move(out), std::move(parents), [owned](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    std::int64_t off = 0;
    for (Var p : owned) {
      Tensor& gp = t.grad_buffer(p.id);
      for (std::int64_t i = 0; i < gp.size(); ++i) gp.at(i) += g.at(off + i);
      off += gp.size();
    }
  });
}

Var Tape::elementwise_mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.same_shape(B), "elementwise_mul " + A.shape_string() + " vs " + B.shape_string());
  Tensor out = A;
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) *= B.at(i);
  check_finite(out, "elementwise_mul");
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    Tensor& ga = t.grad_buffer(a.id);
    Tensor& gb = t.grad_buffer(b.id);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i) * B.at(i);
      gb.at(i) += g.at(i) * A.at(i);
    }
  });
}

Var Tape::softmax(Var x) {
  const Tensor& X = value(x);
  require(X.rank() == 1 || X.rank() == 2, "softmax requires rank 1 or 2");
  const std::int64_t rows = X.rank() == 2 ? X.dim(0) : 1;
  const std::int64_t cols = X.rank() == 2 ? X.dim(1) : X.dim(0);
  Tensor out = X;
  for (std::int64_t r = 0; r < rows; ++r) {
    double* p = out.data() + r * cols;
    double mx = p[0];
    for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, p[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) {
      p[j] = std::exp(p[j] - mx);
      z += p[j];
    }
    for (std::int64_t j = 0; j < cols; ++j) p[j] /= z;
  }
  check_finite(out, "softmax");
  return push(std::move(out), {x.id}, [x, rows, cols](Tape& t, std::int32_t self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& g = n.grad;
    const Tensor& y = n.value;
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* yp = y.data() + r * cols;
      const double* gp = g.data() + r * cols;
      double dot = 0.0;
      for (std::int64_t j = 0; j < cols; ++j) dot += yp[j] * gp[j];
      double* gxp = gx.data() + r * cols;
      for (std::int64_t j = 0; j < cols; ++j) gxp[j] += yp[j] * (gp[j] - dot);
    }
  });
}

Var Tape::l2_normalize(Var x) {
  const Tensor& X = value(x);
  require(X.rank() == 1, "l2_normalize requires rank 1");
  double sq = 0.0;
  for (std::int64_t i = 0; i < X.size(); ++i) sq += X.at(i) * X.at(i);
  const double norm = std::sqrt(sq);
  const double scale = 1.0 / (norm + kL2Eps);
  Tensor out = X;
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) *= scale;
  check_finite(out, "l2_normalize");
  return push(std::move(out), {x.id}, [x, norm, scale](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Tensor& X = t.value(x);
    Tensor& gx = t.grad_buffer(x.id);
    if (norm == 0.0) {
      // One-sided limit at the origin: d(x_i / (|x| + eps)) -> I / eps.
      for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * scale;
      return;
    }
    double dot = 0.0;
    for (std::int64_t i = 0; i < g.size(); ++i) dot += g.at(i) * X.at(i);
    const double k = dot * scale * scale / norm;
    for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * scale - k * X.at(i);
  });
}

Var Tape::sigmoid(Var x) {
  Tensor out = value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) = 1.0 / (1.0 + std::exp(-out.at(i)));
  check_finite(out, "sigmoid");
  return push(std::move(out), {x.id}, [x](Tape& t, std::int32_t self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < n.grad.size(); ++i) {
      const double y = n.value.at(i);
      gx.at(i) += n.grad.at(i) * y * (1.0 - y);
    }
  });
}

Var Tape::tanh(Var x) {
  Tensor out = value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
  check_finite(out, "tanh");
  return push(std::move(out), {x.id}, [x](Tape& t, std::int32_t self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < n.grad.size(); ++i) {
      const double y = n.value.at(i);
      gx.at(i) += n.grad.at(i) * (1.0 - y * y);
    }
  });
}

Var Tape::embedding_lookup(Var table, std::int64_t row) {
  const Tensor& T = value(table);
  require(T.rank() == 2, "embedding_lookup requires a 2-D table");
  require(row >= 0 && row < T.dim(0), "embedding row out of range");
  const std::int64_t e = T.dim(1);
  Tensor out = Tensor::zeros({e});
  for (std::int64_t j = 0; j < e; ++j) out.at(j) = T.at(row, j);
  return push(std::move(out), {table.id}, [table, row, e](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    Tensor& gt = t.grad_buffer(table.id);
    for (std::int64_t j = 0; j < e; ++j) gt.at(row, j) += g.at(j);
  });
}

Var Tape::scalar_scale(Var x, double c) {
  Tensor out = value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) *= c;
  check_finite(out, "scalar_scale");
  return push(std::move(out), {x.id}, [x, c](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * c;
  });
}

Var Tape::sum(Var x) {
  const Tensor& X = value(x);
  double acc = 0.0;
  for (std::int64_t i = 0; i < X.size(); ++i) acc += X.at(i);
  Tensor out = Tensor::scalar(acc);
  check_finite(out, "sum");
  return push(std::move(out), {x.id}, [x](Tape& t, std::int32_t self) {
    const double g = t.nodes_[static_cast<std::size_t>(self)].grad.at(0);
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < gx.size(); ++i) gx.at(i) += g;
  });
}

Var Tape::slice(Var x, std::int64_t offset, std::int64_t len) {
  const Tensor& X = value(x);
  require(X.rank() == 1, "slice requires rank 1");
  require(offset >= 0 && len >= 0 && offset + len <= X.size(), "slice out of range");
  Tensor out = Tensor::zeros({len});
  for (std::int64_t i = 0; i < len; ++i) out.at(i) = X.at(offset + i);
  return push(std::move(out), {x.id}, [x, offset, len](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < len; ++i) gx.at(offset + i) += g.at(i);
  });
}

Var Tape::reshape(Var x, std::vector<std::int64_t> shape) {
  const Tensor& X = value(x);
  Tensor out = Tensor::from(std::move(shape), X.values());
  require(out.size() == X.size(), "reshape changes element count");
  return push(std::move(out), {x.id}, [x](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i);
  });
}

Var Tape::log(Var x) {
  Tensor out = value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) = std::log(out.at(i));
  check_finite(out, "log");
  return push(std::move(out), {x.id}, [x](Tape& t, std::int32_t self) {
    const Tensor& g = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Tensor& X = t.value(x);
    Tensor& gx = t.grad_buffer(x.id);
    for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) / X.at(i);
  });
}

Var Tape::pick(Var x, std::int64_t index) {
  const Tensor& X = value(x);
  require(index >= 0 && index < X.size(), "pick index out of range");
  Tensor out = Tensor::scalar(X.at(index));
  return push(std::move(out), {x.id}, [x, index](Tape& t, std::int32_t self) {
    const double g = t.nodes_[static_cast<std::size_t>(self)].grad.at(0);
    t.grad_buffer(x.id).at(index) += g;
  });
}

Var Tape::normalize_sum(Var x) {
  const Tensor& X = value(x);
  double s = 0.0;
  for (std::int64_t i = 0; i < X.size(); ++i) s += X.at(i);
  if (std::abs(s) < 1e-12) throw VanishingMass("normalize_sum: total mass below 1e-12");
  Tensor out = X;
  for (std::int64_t i = 0; i < out.size(); ++i) out.at(i) /= s;
  check_finite(out, "normalize_sum");
  return push(std::move(out), {x.id}, [x, s](Tape& t, std::int32_t self) {
    const Node& n = t.nodes_[static_cast<std::size_t>(self)];
    const Tensor& g = n.grad;
    const Tensor& y = n.value;
    Tensor& gx = t.grad_buffer(x.id);
    double dot = 0.0;
    for (std::int64_t i = 0; i < g.size(); ++i) dot += g.at(i) * y.at(i);
    for (std::int64_t i = 0; i < g.size(); ++i) gx.at(i) += (g.at(i) - dot) / s;
  });
}

void Tape::backward(Var root) {
  Node& r = node(root);
  if (r.value.size() != 1) throw ShapeMismatch("backward root must have size 1");
  grad_buffer(root.id).at(0) = 1.0;
  for (std::int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad_live || !n.backward_fn) continue;
    n.backward_fn(*this, i);
  }
}

const Tensor& Tape::grad(Var v) { return grad_buffer(v.id); }

namespace {

double fd_rel_err(double g_ad, double g_fd) {
  return std::abs(g_ad - g_fd) / std::max(1.0, std::abs(g_ad) + std::abs(g_fd));
}

}  // namespace

double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& fn,
                  const std::vector<Tensor>& points, double h) {
  // Reverse-mode gradient at the point.
  std::vector<Tensor> grads;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(points.size());
    for (const Tensor& p : points) vars.push_back(tape.leaf(p));
    Var out = fn(tape, vars);
    if (!tape.value(out).all_finite()) throw NonFiniteValue("grad_check objective non-finite");
    tape.backward(out);
    for (Var v : vars) grads.push_back(tape.grad(v));
  }

  auto eval = [&](const std::vector<Tensor>& at) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(at.size());
    for (const Tensor& p : at) vars.push_back(tape.leaf(p));
    return tape.value(fn(tape, vars)).at(0);
  };

  double worst = 0.0;
  std::vector<Tensor> probe = points;
  for (std::size_t t = 0; t < points.size(); ++t) {
    for (std::int64_t i = 0; i < points[t].size(); ++i) {
      const double orig = probe[t].at(i);
      probe[t].at(i) = orig + h;
      const double fp = eval(probe);
      probe[t].at(i) = orig - h;
      const double fm = eval(probe);
      probe[t].at(i) = orig;
      const double g_fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, fd_rel_err(grads[t].at(i), g_fd));
    }
  }
  return worst;
}

double grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point, double h) {
  return grad_check(
      [&fn](Tape& t, const std::vector<Var>& vars) { return fn(t, vars[0]); }, {point}, h);
}

}  // namespace groundnet
