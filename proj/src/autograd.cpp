#include "hopqa/autograd.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace hopqa::ag {

const Matrix& Var::value() const { return graph->value(id); }

Var Graph::push(Matrix value, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(fn), nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Graph::parameter(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Var v = push(p.value, nullptr);
  nodes_[v.id].param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

void Graph::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

Matrix& Graph::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.graph != this || nodes_[root.id].value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar node of this graph");
  }
  nodes_[root.id].grad = Matrix::Ones(1, 1);
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) {
        n.param->grad = n.grad;
      } else {
        n.param->grad += n.grad;
      }
    }
  }
}

namespace {

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value() + b.value(), [ia, ib](Graph& g, const Matrix& d) {
    g.accumulate(ia, d);
    g.accumulate(ib, d);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value() - b.value(), [ia, ib](Graph& g, const Matrix& d) {
    g.accumulate(ia, d);
    g.accumulate_expr(ib, -d);
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value().cwiseProduct(b.value()), [ia, ib](Graph& g, const Matrix& d) {
    g.accumulate_expr(ia, d.cwiseProduct(g.value(ib)));
    g.accumulate_expr(ib, d.cwiseProduct(g.value(ia)));
  });
}

Var add_col(Var m, Var col) {
  if (col.cols() != 1 || col.rows() != m.rows()) {
    throw std::invalid_argument("add_col: shape mismatch");
  }
  Graph& g = *m.graph;
  int im = m.id, ic = col.id;
  Matrix out = m.value().colwise() + col.value().col(0);
  return g.push(std::move(out), [im, ic](Graph& g, const Matrix& d) {
    g.accumulate(im, d);
    g.accumulate_expr(ic, d.rowwise().sum());
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value() * b.value(), [ia, ib](Graph& g, const Matrix& d) {
    g.accumulate_expr(ia, d * g.value(ib).transpose());
    g.accumulate_expr(ib, g.value(ia).transpose() * d);
  });
}

Var matmul_tn(Var a, Var b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: shape mismatch");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value().transpose() * b.value(), [ia, ib](Graph& g, const Matrix& d) {
    g.accumulate_expr(ia, g.value(ib) * d.transpose());
    g.accumulate_expr(ib, g.value(ia) * d);
  });
}

Var transpose(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  return g.push(a.value().transpose(), [ia](Graph& g, const Matrix& d) { g.accumulate_expr(ia, d.transpose()); });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double s, double c) {
  Graph& g = *a.graph;
  int ia = a.id;
  Matrix out = (a.value() * s).array() + c;
  return g.push(std::move(out), [ia, s](Graph& g, const Matrix& d) { g.accumulate_expr(ia, d * s); });
}

Var scalar_mul(Var s, Var a) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("scalar_mul: s must be 1x1");
  Graph& g = *a.graph;
  int is = s.id, ia = a.id;
  return g.push(a.value() * s.scalar(), [is, ia](Graph& g, const Matrix& d) {
    Matrix ds(1, 1);
    ds(0, 0) = d.cwiseProduct(g.value(ia)).sum();
    g.accumulate(is, ds);
    g.accumulate_expr(ia, d * g.value(is)(0, 0));
  });
}

Var tanh(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  int self = g.next_id();
  return g.push(a.value().array().tanh().matrix(), [ia, self](Graph& g, const Matrix& d) {
    const Matrix& y = g.value(self);
    g.accumulate_expr(ia, d.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var sigmoid(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  int self = g.next_id();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return g.push(std::move(out), [ia, self](Graph& g, const Matrix& d) {
    const Matrix& y = g.value(self);
    g.accumulate_expr(ia, d.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var relu(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  return g.push(a.value().cwiseMax(0.0), [ia](Graph& g, const Matrix& d) {
    const Matrix& x = g.value(ia);
    g.accumulate_expr(ia, d.cwiseProduct((x.array() > 0.0).cast<double>().matrix()));
  });
}

Var log(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  Matrix out = a.value().cwiseMax(1e-300).array().log().matrix();
  return g.push(std::move(out), [ia](Graph& g, const Matrix& d) {
    const Matrix& x = g.value(ia);
    g.accumulate_expr(ia, d.cwiseQuotient(x.cwiseMax(1e-300)));
  });
}

Var cwise_min(Var a, Var b) {
  check_same_shape(a, b, "cwise_min");
  Graph& g = *a.graph;
  int ia = a.id, ib = b.id;
  return g.push(a.value().cwiseMin(b.value()), [ia, ib](Graph& g, const Matrix& d) {
    const Matrix& x = g.value(ia);
    const Matrix& y = g.value(ib);
    Matrix mask = (x.array() <= y.array()).cast<double>().matrix();
    g.accumulate_expr(ia, d.cwiseProduct(mask));
    g.accumulate_expr(ib, d.cwiseProduct((1.0 - mask.array()).matrix()));
  });
}

Var softmax(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  int self = g.next_id();
  const Matrix& x = a.value();
  Matrix e = (x.array() - x.maxCoeff()).exp().matrix();
  e /= e.sum();
  return g.push(std::move(e), [ia, self](Graph& g, const Matrix& d) {
    const Matrix& y = g.value(self);
    double dot = d.cwiseProduct(y).sum();
    g.accumulate_expr(ia, y.cwiseProduct((d.array() - dot).matrix()));
  });
}

Var log_softmax(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  int self = g.next_id();
  const Matrix& x = a.value();
  double mx = x.maxCoeff();
  double lse = mx + std::log((x.array() - mx).exp().sum());
  Matrix out = (x.array() - lse).matrix();
  return g.push(std::move(out), [ia, self](Graph& g, const Matrix& d) {
    const Matrix p = g.value(self).array().exp().matrix();
    g.accumulate_expr(ia, d - p * d.sum());
  });
}

Var softmax_cols(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  int self = g.next_id();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector e = (x.col(j).array() - x.col(j).maxCoeff()).exp().matrix();
    y.col(j) = e / e.sum();
  }
  return g.push(std::move(y), [ia, self](Graph& g, const Matrix& d) {
    const Matrix& y = g.value(self);
    Eigen::RowVectorXd dots = d.cwiseProduct(y).colwise().sum();
    Matrix gx = y.cwiseProduct(d.rowwise() - dots);
    g.accumulate(ia, gx);
  });
}

Var pick(Var a, Eigen::Index row, Eigen::Index col) {
  Graph& g = *a.graph;
  int ia = a.id;
  Matrix out(1, 1);
  out(0, 0) = a.value()(row, col);
  return g.push(std::move(out), [ia, row, col](Graph& g, const Matrix& d) {
    g.grad_buffer(ia)(row, col) += d(0, 0);
  });
}

Var sum_rows_at(Var v, const std::vector<int>& rows) {
  Graph& g = *v.graph;
  int iv = v.id;
  Matrix out = Matrix::Zero(1, 1);
  for (int r : rows) out(0, 0) += v.value()(r, 0);
  return g.push(std::move(out), [iv, rows](Graph& g, const Matrix& d) {
    Matrix& gb = g.grad_buffer(iv);
    for (int r : rows) gb(r, 0) += d(0, 0);
  });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.push(std::move(out), [ia](Graph& g, const Matrix& d) {
    const Matrix& x = g.value(ia);
    g.accumulate_expr(ia, Matrix::Constant(x.rows(), x.cols(), d(0, 0)));
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  Graph& g = *parts.front().graph;
  Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id, p.rows());
    r += p.rows();
  }
  return g.push(std::move(out), [spans](Graph& g, const Matrix& d) {
    Eigen::Index r = 0;
    for (auto [id, n] : spans) {
      g.accumulate_expr(id, d.middleRows(r, n));
      r += n;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  Graph& g = *parts.front().graph;
  Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    spans.emplace_back(p.id, p.cols());
    c += p.cols();
  }
  return g.push(std::move(out), [spans](Graph& g, const Matrix& d) {
    Eigen::Index c = 0;
    for (auto [id, n] : spans) {
      g.accumulate_expr(id, d.middleCols(c, n));
      c += n;
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || start + count > a.rows()) throw std::invalid_argument("slice_rows: out of range");
  Graph& g = *a.graph;
  int ia = a.id;
  return g.push(a.value().middleRows(start, count), [ia, start, count](Graph& g, const Matrix& d) {
    g.grad_buffer(ia).middleRows(start, count) += d;
  });
}

Var column(Var a, Eigen::Index j) {
  Graph& g = *a.graph;
  int ia = a.id;
  return g.push(a.value().col(j), [ia, j](Graph& g, const Matrix& d) { g.grad_buffer(ia).col(j) += d.col(0); });
}

Var max_cols(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  std::vector<Eigen::Index> arg(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, 0) = x.row(r).maxCoeff(&arg[r]);
  return g.push(std::move(out), [ia, arg](Graph& g, const Matrix& d) {
    Matrix& gb = g.grad_buffer(ia);
    for (std::size_t r = 0; r < arg.size(); ++r) gb(r, arg[r]) += d(r, 0);
  });
}

Var mean_cols(Var a) {
  Graph& g = *a.graph;
  int ia = a.id;
  const Eigen::Index n = a.cols();
  return g.push(a.value().rowwise().mean(), [ia, n](Graph& g, const Matrix& d) {
    g.accumulate_expr(ia, d.replicate(1, n) / static_cast<double>(n));
  });
}

Var lookup(Var table, const std::vector<int>& ids) {
  Graph& g = *table.graph;
  int it = table.id;
  const Matrix& t = table.value();
  Matrix out(t.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= t.cols()) throw std::out_of_range("lookup: id out of range");
    out.col(j) = t.col(ids[j]);
  }
  return g.push(std::move(out), [it, ids](Graph& g, const Matrix& d) {
    Matrix& gb = g.grad_buffer(it);
    for (std::size_t j = 0; j < ids.size(); ++j) gb.col(ids[j]) += d.col(j);
  });
}

Var lstm_cell(Var gates_pre, Var c_prev) {
  const Eigen::Index h = c_prev.rows();
  if (gates_pre.rows() != 4 * h || gates_pre.cols() != 1 || c_prev.cols() != 1) {
    throw std::invalid_argument("lstm_cell: shape mismatch");
  }
  Graph& g = *gates_pre.graph;
  int iz = gates_pre.id, ic = c_prev.id;
  auto sig = [](const auto& x) { return (1.0 / (1.0 + (-x).exp())).matrix(); };
  const Matrix& z = gates_pre.value();
  Vector i = sig(z.col(0).segment(0, h).array());
  Vector f = sig(z.col(0).segment(h, h).array());
  Vector o = sig(z.col(0).segment(2 * h, h).array());
  Vector cand = z.col(0).segment(3 * h, h).array().tanh().matrix();
  Vector c = f.cwiseProduct(c_prev.value().col(0)) + i.cwiseProduct(cand);
  Vector hv = o.cwiseProduct(c.array().tanh().matrix());
  Matrix out(2 * h, 1);
  out.col(0).head(h) = hv;
  out.col(0).tail(h) = c;
  return g.push(std::move(out), [iz, ic, h, sig](Graph& g, const Matrix& d) {
    const Matrix& z = g.value(iz);
    const Vector cp = g.value(ic).col(0);
    Vector i = sig(z.col(0).segment(0, h).array());
    Vector f = sig(z.col(0).segment(h, h).array());
    Vector o = sig(z.col(0).segment(2 * h, h).array());
    Vector cand = z.col(0).segment(3 * h, h).array().tanh().matrix();
    Vector c = f.cwiseProduct(cp) + i.cwiseProduct(cand);
    Vector tc = c.array().tanh().matrix();
    Vector dh = d.col(0).head(h);
    Vector dc = d.col(0).tail(h) + dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    Matrix dz(4 * h, 1);
    dz.col(0).segment(0, h) = (dc.array() * cand.array() * i.array() * (1.0 - i.array())).matrix();
    dz.col(0).segment(h, h) = (dc.array() * cp.array() * f.array() * (1.0 - f.array())).matrix();
    dz.col(0).segment(2 * h, h) = (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();
    dz.col(0).segment(3 * h, h) = (dc.array() * i.array() * (1.0 - cand.array().square())).matrix();
    g.accumulate(iz, dz);
    g.accumulate_expr(ic, dc.cwiseProduct(f));
  });
}

}  // namespace hopqa::ag
