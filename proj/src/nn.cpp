#include "hopqa/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hopqa::nn {

Parameter& ParamSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                         double init_scale) {
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value.resize(rows, cols);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) p->value(i, j) = dist(rng);
  }
  p->grad = Matrix::Zero(rows, cols);
  p->m = Matrix::Zero(rows, cols);
  p->v = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamSet::add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  p->m = Matrix::Zero(rows, cols);
  p->v = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

double ParamSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamSet::clip_grad_norm(double max_norm) {
  double n = grad_norm();
  if (n > max_norm && n > 0.0) {
    for (auto& p : params_) p->grad *= max_norm / n;
  }
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("parameter file truncated");
  return v;
}

constexpr std::uint32_t kMagic = 0x53505148;  // "HQPS"

}  // namespace

void ParamSet::save(std::ostream& out) const {
  write_pod(out, kMagic);
  write_pod(out, static_cast<std::uint64_t>(params_.size()));
  for (const auto& p : params_) {
    write_pod(out, static_cast<std::uint64_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod(out, static_cast<std::int64_t>(p->value.rows()));
    write_pod(out, static_cast<std::int64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
}

void ParamSet::load(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kMagic) throw std::runtime_error("not a parameter file");
  auto n = read_pod<std::uint64_t>(in);
  if (n != params_.size()) throw std::runtime_error("parameter count mismatch");
  for (auto& p : params_) {
    auto len = read_pod<std::uint64_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    auto rows = read_pod<std::int64_t>(in);
    auto cols = read_pod<std::int64_t>(in);
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error("parameter mismatch at '" + p->name + "' (file has '" + name + "')");
    }
    in.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    if (!in) throw std::runtime_error("parameter file truncated");
  }
}

void Adam::step(ParamSet& params, double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (auto& p : params.all()) {
    Matrix g = p->grad * grad_scale;
    p->m = opts_.beta1 * p->m + (1.0 - opts_.beta1) * g;
    p->v = opts_.beta2 * p->v + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    p->value.array() -=
        opts_.learning_rate * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + opts_.epsilon);
  }
}

Lstm Lstm::create(ParamSet& ps, const std::string& prefix, int input_dim, int hidden, std::mt19937_64& rng) {
  Lstm l;
  l.hidden = hidden;
  l.wx = &ps.add(prefix + ".wx", 4 * hidden, input_dim, rng);
  l.wh = &ps.add(prefix + ".wh", 4 * hidden, hidden, rng);
  l.b = &ps.add_zeros(prefix + ".b", 4 * hidden, 1);
  // forget-gate bias
  l.b->value.block(hidden, 0, hidden, 1).setOnes();
  return l;
}

LstmState zero_state(Graph& g, int hidden) {
  return LstmState{g.constant(Matrix::Zero(hidden, 1)), g.constant(Matrix::Zero(hidden, 1))};
}

LstmState lstm_step(Graph& g, const Lstm& cell, Var x_proj, LstmState prev) {
  Var gates = ag::add(x_proj, ag::matmul(param(g, cell.wh), prev.h));
  Var hc = ag::lstm_cell(gates, prev.c);
  return LstmState{ag::slice_rows(hc, 0, cell.hidden), ag::slice_rows(hc, cell.hidden, cell.hidden)};
}

Var run_lstm(Graph& g, const Lstm& cell, Var inputs, bool reverse, LstmState* final_state) {
  const Eigen::Index steps = inputs.cols();
  Var proj = ag::add_col(ag::matmul(param(g, cell.wx), inputs), param(g, cell.b));
  LstmState st = zero_state(g, cell.hidden);
  std::vector<Var> outs(static_cast<std::size_t>(steps));
  for (Eigen::Index k = 0; k < steps; ++k) {
    Eigen::Index t = reverse ? steps - 1 - k : k;
    st = lstm_step(g, cell, ag::column(proj, t), st);
    outs[static_cast<std::size_t>(t)] = st.h;
  }
  if (final_state != nullptr) *final_state = st;
  if (outs.empty()) return g.constant(Matrix::Zero(cell.hidden, 0));
  return ag::concat_cols(outs);
}

BiLstm BiLstm::create(ParamSet& ps, const std::string& prefix, int input_dim, int hidden, std::mt19937_64& rng) {
  return BiLstm{Lstm::create(ps, prefix + ".fwd", input_dim, hidden, rng),
                Lstm::create(ps, prefix + ".bwd", input_dim, hidden, rng)};
}

Var BiLstm::run(Graph& g, Var inputs, LstmState* fwd_final, LstmState* bwd_final) const {
  Var f = run_lstm(g, fwd, inputs, false, fwd_final);
  Var b = run_lstm(g, bwd, inputs, true, bwd_final);
  if (inputs.cols() == 0) return g.constant(Matrix::Zero(2 * fwd.hidden, 0));
  return ag::concat_rows({f, b});
}

}  // namespace hopqa::nn
