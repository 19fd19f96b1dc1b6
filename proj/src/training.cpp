#include "hopqa/training.hpp"

#include "hopqa/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace hopqa {

void TrainOptions::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (dev_fraction < 0.0 || dev_fraction >= 1.0) throw ConfigError("dev_fraction must be in [0, 1)");
}

std::vector<double> train_minibatches(nn::ParamSet& params, std::size_t n, const TrainOptions& opts,
                                      const ItemLoss& item_loss, long* steps_out) {
  opts.validate();
  nn::Adam adam(nn::AdamOptions{opts.learning_rate});
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> curve;
  long steps = 0;
  for (int epoch = 0; epoch < opts.epochs && steps < opts.max_steps; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < n && steps < opts.max_steps; b += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t e = std::min(n, b + static_cast<std::size_t>(opts.batch_size));
      params.zero_grad();
      for (std::size_t k = b; k < e; ++k) total += item_loss(order[k]);
      seen += e - b;
      const double inv = 1.0 / static_cast<double>(e - b);
      for (auto& p : params.all()) p->grad *= inv;
      params.clip_grad_norm(opts.clip_norm);
      adam.step(params);
      ++steps;
    }
    curve.push_back(seen > 0 ? total / static_cast<double>(seen) : 0.0);
  }
  if (steps_out != nullptr) *steps_out = steps;
  return curve;
}

void split_indices(std::size_t n, double dev_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& dev) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_dev = static_cast<std::size_t>(dev_fraction * static_cast<double>(n));
  if (n_dev >= n) n_dev = n > 0 ? n - 1 : 0;
  dev.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(dev.begin(), dev.end());
  std::sort(train.begin(), train.end());
}

}  // namespace hopqa
