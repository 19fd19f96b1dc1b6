#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Graph is a tape: every op appends a node holding its value and a closure
// that pushes the node's gradient to its parents. Parameters enter the tape
// as leaves; Graph::backward() adds their gradients into Parameter::grad.
// Column vectors are the working shape for sequence models (one column per
// time step).

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hopqa::ag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Adam moments.
  Matrix m;
  Matrix v;
};

class Graph;

struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Matrix& out_grad)>;

  Graph() { nodes_.reserve(1024); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }
  int next_id() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to all leaves.
  void backward(Var root);

  Var push(Matrix value, BackwardFn fn);
  void accumulate(int id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  Matrix& grad_buffer(int id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// Arithmetic. Shapes must agree unless noted.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var add_col(Var m, Var col);           // add column vector to every column of m
Var matmul(Var a, Var b);              // a * b
Var matmul_tn(Var a, Var b);           // a^T * b
Var transpose(Var a);
Var scale(Var a, double s);
Var affine(Var a, double s, double c); // s * a + c
Var scalar_mul(Var s, Var a);          // 1x1 s times every element of a

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);                        // clamps its input at 1e-300
Var cwise_min(Var a, Var b);

// Softmax over all elements (use on vectors).
Var softmax(Var a);
Var log_softmax(Var a);
// Softmax of each column independently.
Var softmax_cols(Var a);

Var pick(Var a, Eigen::Index row, Eigen::Index col = 0);   // 1x1
Var sum_rows_at(Var v, const std::vector<int>& rows);      // 1x1, repeated rows counted repeatedly
Var sum(Var a);                                            // 1x1
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var column(Var a, Eigen::Index j);
Var max_cols(Var a);   // row-wise max across columns -> column vector
Var mean_cols(Var a);  // row-wise mean across columns -> column vector

// Columns of an embedding table (dim x vocab) selected by id -> dim x ids.size().
Var lookup(Var table, const std::vector<int>& ids);

// Fused LSTM cell. gates_pre is the 4H pre-activation (input, forget, output,
// candidate blocks); returns [h; c] stacked as a 2H column.
Var lstm_cell(Var gates_pre, Var c_prev);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

}  // namespace hopqa::ag
