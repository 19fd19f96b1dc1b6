#pragma once

#include "hopqa/autograd.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hopqa::nn {

using ag::Graph;
using ag::Matrix;
using ag::Parameter;
using ag::Var;

/// Ordered, named collection of trainable matrices. Addresses of the stored
/// parameters are stable for the lifetime of the set.
class ParamSet {
 public:
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                 double init_scale = 0.1);
  Parameter& add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

  void zero_grad();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);
  std::size_t count() const;

  // Binary dump: name, shape and raw little-endian doubles per parameter.
  void save(std::ostream& out) const;
  // Loads values into an already-shaped set; names and shapes must match.
  void load(std::istream& in);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions opts) : opts_(opts) {}
  // Applies one update using each parameter's grad scaled by grad_scale.
  void step(ParamSet& params, double grad_scale = 1.0);
  std::int64_t steps() const { return t_; }

 private:
  AdamOptions opts_;
  std::int64_t t_ = 0;
};

struct Lstm {
  Parameter* wx = nullptr;
  Parameter* wh = nullptr;
  Parameter* b = nullptr;
  int hidden = 0;

  static Lstm create(ParamSet& ps, const std::string& prefix, int input_dim, int hidden, std::mt19937_64& rng);
};

struct LstmState {
  Var h;
  Var c;
};

LstmState zero_state(Graph& g, int hidden);

// One step with the input projection (wx * x + b) already computed.
LstmState lstm_step(Graph& g, const Lstm& cell, Var x_proj, LstmState prev);

// Runs over the columns of inputs (dim x T); returns hidden states (H x T) in
// input order, and the final state.
Var run_lstm(Graph& g, const Lstm& cell, Var inputs, bool reverse, LstmState* final_state = nullptr);

struct BiLstm {
  Lstm fwd;
  Lstm bwd;

  static BiLstm create(ParamSet& ps, const std::string& prefix, int input_dim, int hidden, std::mt19937_64& rng);
  // (2H x T): forward states stacked over backward states.
  Var run(Graph& g, Var inputs, LstmState* fwd_final = nullptr, LstmState* bwd_final = nullptr) const;
};

inline Var param(Graph& g, Parameter* p) { return g.parameter(*p); }

}  // namespace hopqa::nn
