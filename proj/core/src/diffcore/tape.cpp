#include "xirl/diffcore/tape.hpp"

#include <cmath>
#include <string>

#include "xirl/common/errors.hpp"

namespace xirl::diff {
namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw ContractError("tape: unknown variable");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("tape: unknown variable");
  return nodes_[v.id];
}

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node n;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Eigen::Ref<const Matrix>& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::require_same_shape(Var a, Var b, const char* op) const {
  const Node& x = node(a);
  const Node& y = node(b);
  if (x.rows != y.rows || x.cols != y.cols) {
    throw DimensionError(std::string(op) + ": shape mismatch " + dims(x.rows, x.cols) + " vs " +
                         dims(y.rows, y.cols));
  }
}

ConstMatrixMap Tape::value(Var v) const {
  const Node& n = node(v);
  const double* data = n.external ? n.external : n.value.data();
  return ConstMatrixMap(data, n.rows, n.cols);
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.rows != 1 || n.cols != 1) throw ContractError("tape: value is not a scalar");
  return value(v)(0, 0);
}

std::size_t Tape::rows(Var v) const { return static_cast<std::size_t>(node(v).rows); }
std::size_t Tape::cols(Var v) const { return static_cast<std::size_t>(node(v).cols); }
bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

// --- leaves ---------------------------------------------------------------

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::constant(const Tensor& value) { return constant(Matrix(value.matrix())); }

Var Tape::scalar_constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::parameter(const Tensor& storage) {
  Node n;
  n.external = storage.values().data();
  n.rows = static_cast<Eigen::Index>(storage.rows());
  n.cols = static_cast<Eigen::Index>(storage.cols());
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Matrix value) {
  // Leaves have no backward rule; marking needs_grad makes them collect gradient.
  return push(std::move(value), true, nullptr);
}

// --- linear algebra -------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const auto A = value(a);
  const auto B = value(b);
  if (A.cols() != B.rows()) {
    throw DimensionError("matmul: " + dims(A.rows(), A.cols()) + " x " + dims(B.rows(), B.cols()));
  }
  Matrix out(A.rows(), B.cols());
  out.noalias() = A * B;
  const bool ng = requires_grad(a) || requires_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      Matrix ga(t.rows(a), t.cols(a));
      ga.noalias() = g * t.value(b).transpose();
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Matrix gb(t.rows(b), t.cols(b));
      gb.noalias() = t.value(a).transpose() * g;
      t.accumulate(b, gb);
    }
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Matrix out = value(a) + value(b);
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Matrix out = value(a) - value(b);
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -g);
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var Tape::add_row(Var x, Var row) {
  const auto X = value(x);
  const auto R = value(row);
  if (R.rows() != 1 || R.cols() != X.cols()) {
    throw DimensionError("add_row: " + dims(X.rows(), X.cols()) + " + " + dims(R.rows(), R.cols()));
  }
  Matrix out = X.rowwise() + R.row(0);
  return push(std::move(out), requires_grad(x) || requires_grad(row), [x, row](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::scale(Var x, double factor) {
  Matrix out = value(x) * factor;
  return push(std::move(out), requires_grad(x),
              [x, factor](Tape& t, const Matrix& g) { t.accumulate(x, g * factor); });
}

Var Tape::add_scalar(Var x, double offset) {
  Matrix out = value(x).array() + offset;
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) { t.accumulate(x, g); });
}

Var Tape::scale_by(Var s, Var x) {
  if (rows(s) != 1 || cols(s) != 1) throw DimensionError("scale_by: factor must be 1x1");
  const double factor = scalar(s);
  Matrix out = value(x) * factor;
  return push(std::move(out), requires_grad(s) || requires_grad(x), [s, x](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * t.scalar(s));
    if (t.requires_grad(s)) t.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(t.value(x)).sum()));
  });
}

// --- elementwise ------------------------------------------------------------

Var Tape::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (t.value(x).array() > 0.0).select(g, 0.0));
  });
}

Var Tape::tanh(Var x) {
  Matrix out = value(x).array().tanh();
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    const auto y = t.value(self).array();
    t.accumulate(x, (g.array() * (1.0 - y * y)).matrix());
  });
}

Var Tape::sigmoid(Var x) {
  Matrix out = value(x).unaryExpr(&sigmoid_scalar);
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    const auto y = t.value(self).array();
    t.accumulate(x, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var Tape::exp(Var x) {
  Matrix out = value(x).array().exp();
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(t.value(self)));
  });
}

Var Tape::log(Var x) {
  const auto X = value(x);
  if ((X.array() <= 0.0).any()) throw NumericError("log: non-positive argument");
  Matrix out = X.array().log();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseQuotient(t.value(x)));
  });
}

Var Tape::softplus(Var x) {
  Matrix out = value(x).unaryExpr(&softplus_scalar);
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(t.value(x).unaryExpr(&sigmoid_scalar)));
  });
}

Var Tape::square(Var x) {
  Matrix out = value(x).array().square();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, 2.0 * g.cwiseProduct(t.value(x)));
  });
}

Var Tape::minimum(Var a, Var b) {
  require_same_shape(a, b, "minimum");
  Matrix out = value(a).cwiseMin(value(b));
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    // Ties route the gradient to the first argument.
    const auto take_a = (t.value(a).array() <= t.value(b).array());
    if (t.requires_grad(a)) t.accumulate(a, take_a.select(g, 0.0));
    if (t.requires_grad(b)) t.accumulate(b, take_a.select(0.0, g));
  });
}

// --- row-structured -----------------------------------------------------------

Var Tape::softmax_rows(Var x) {
  const auto X = value(x);
  Matrix out = (X.colwise() - X.rowwise().maxCoeff()).array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    const auto y = t.value(self);
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix gx = y.cwiseProduct(g.colwise() - dot);
    t.accumulate(x, gx);
  });
}

Var Tape::log_softmax_rows(Var x) {
  const auto X = value(x);
  const Eigen::VectorXd mx = X.rowwise().maxCoeff();
  Matrix shifted = X.colwise() - mx;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  Matrix out = shifted.colwise() - lse;
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    const Matrix p = t.value(self).array().exp();
    const Eigen::VectorXd gs = g.rowwise().sum();
    Matrix gx = g - (p.array().colwise() * gs.array()).matrix();
    t.accumulate(x, gx);
  });
}

Var Tape::pairwise_sq_dist(Var a, Var b) {
  const auto A = value(a);
  const auto B = value(b);
  if (A.cols() != B.cols()) {
    throw DimensionError("pairwise_sq_dist: " + dims(A.rows(), A.cols()) + " vs " + dims(B.rows(), B.cols()));
  }
  // Evaluated from explicit differences so that translating both inputs by
  // the same vector leaves the result unchanged up to rounding of the inputs.
  Matrix out(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      out(i, j) = (A.row(i) - B.row(j)).squaredNorm();
    }
  }
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    const auto A = t.value(a);
    const auto B = t.value(b);
    // d/dA_i = 2 sum_j g_ij (A_i - B_j);  d/dB_j = -2 sum_i g_ij (A_i - B_j)
    if (t.requires_grad(a)) {
      Matrix ga = 2.0 * (A.array().colwise() * g.rowwise().sum().array()).matrix();
      ga.noalias() -= 2.0 * g * B;
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Matrix gb = 2.0 * (B.array().colwise() * g.colwise().sum().transpose().array()).matrix();
      gb.noalias() -= 2.0 * g.transpose() * A;
      t.accumulate(b, gb);
    }
  });
}

Var Tape::normalize_rows(Var x) {
  const auto X = value(x);
  const Eigen::VectorXd norms = X.rowwise().norm();
  if ((norms.array() <= 0.0).any()) throw NumericError("normalize_rows: zero-norm row");
  Matrix out = X.array().colwise() / norms.array();
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const Matrix& g) {
    const auto y = t.value(self);
    const Eigen::VectorXd n = t.value(x).rowwise().norm();
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix gx = (g - (y.array().colwise() * dot.array()).matrix()).array().colwise() / n.array();
    t.accumulate(x, gx);
  });
}

Var Tape::row_sum(Var x) {
  Matrix out = value(x).rowwise().sum();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    Matrix gx = g.col(0).replicate(1, static_cast<Eigen::Index>(t.cols(x)));
    t.accumulate(x, gx);
  });
}

Var Tape::gather_rows(Var x, std::span<const std::size_t> rows) {
  const auto X = value(x);
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(X.rows())) throw DimensionError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return push(std::move(out), requires_grad(x), [x, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix gx = Matrix::Zero(static_cast<Eigen::Index>(t.rows(x)), static_cast<Eigen::Index>(t.cols(x)));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      gx.row(static_cast<Eigen::Index>(idx[i])) += g.row(static_cast<Eigen::Index>(i));
    }
    t.accumulate(x, gx);
  });
}

Var Tape::slice_cols(Var x, std::size_t first, std::size_t count) {
  const auto X = value(x);
  if (first + count > static_cast<std::size_t>(X.cols()) || count == 0) {
    throw DimensionError("slice_cols: range out of bounds");
  }
  const auto f = static_cast<Eigen::Index>(first);
  const auto c = static_cast<Eigen::Index>(count);
  Matrix out = X.middleCols(f, c);
  return push(std::move(out), requires_grad(x), [x, f, c](Tape& t, const Matrix& g) {
    Matrix gx = Matrix::Zero(static_cast<Eigen::Index>(t.rows(x)), static_cast<Eigen::Index>(t.cols(x)));
    gx.middleCols(f, c) = g;
    t.accumulate(x, gx);
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const auto A = value(a);
  const auto B = value(b);
  if (A.rows() != B.rows()) throw DimensionError("concat_cols: row count mismatch");
  Matrix out(A.rows(), A.cols() + B.cols());
  out << A, B;
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    const auto ca = static_cast<Eigen::Index>(t.cols(a));
    const auto cb = static_cast<Eigen::Index>(t.cols(b));
    if (t.requires_grad(a)) t.accumulate(a, g.leftCols(ca));
    if (t.requires_grad(b)) t.accumulate(b, g.rightCols(cb));
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const auto c = static_cast<Eigen::Index>(cols(parts[0]));
  Eigen::Index total = 0;
  bool ng = false;
  for (Var p : parts) {
    if (static_cast<Eigen::Index>(cols(p)) != c) throw DimensionError("concat_rows: column count mismatch");
    total += static_cast<Eigen::Index>(rows(p));
    ng = ng || requires_grad(p);
  }
  Matrix out(total, c);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const auto r = static_cast<Eigen::Index>(rows(p));
    out.middleRows(offset, r) = value(p);
    offset += r;
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(out), ng, [ids = std::move(ids)](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (Var p : ids) {
      const auto r = static_cast<Eigen::Index>(t.rows(p));
      if (t.requires_grad(p)) t.accumulate(p, g.middleRows(off, r));
      off += r;
    }
  });
}

// --- reductions ---------------------------------------------------------------

Var Tape::sum(Var x) {
  Matrix out = Matrix::Constant(1, 1, value(x).sum());
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(static_cast<Eigen::Index>(t.rows(x)), static_cast<Eigen::Index>(t.cols(x)),
                                     g(0, 0)));
  });
}

Var Tape::mean(Var x) {
  const double n = static_cast<double>(value(x).size());
  return scale(sum(x), 1.0 / n);
}

// --- backward -----------------------------------------------------------------

void Tape::backward(Var loss) {
  Node& l = node(loss);
  if (l.rows != 1 || l.cols != 1) {
    throw ContractError("backward: loss must be a scalar, got " + dims(l.rows, l.cols));
  }
  if (backward_done_) throw ContractError("backward: tape already differentiated");
  if (!std::isfinite(value(loss)(0, 0))) throw NumericError("backward: loss is not finite");
  backward_done_ = true;
  if (!l.needs_grad) return;
  l.grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
    if (!n.grad.allFinite()) throw NumericError("backward: non-finite gradient in graph");
    // The closure only touches other nodes' gradients, never this node's.
    n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.rows, n.cols);
  return n.grad;
}

Tensor Tape::grad(Var v, const std::vector<std::size_t>& shape) const {
  Matrix g = grad(v);
  std::vector<double> values(g.data(), g.data() + g.size());
  return Tensor(shape, std::move(values));
}

}  // namespace xirl::diff
