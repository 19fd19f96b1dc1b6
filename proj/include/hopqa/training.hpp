#pragma once

#include "hopqa/nn.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace hopqa {

struct TrainOptions {
  int epochs = 30;
  long max_steps = 1000000;
  int batch_size = 8;
  double learning_rate = 0.005;
  double clip_norm = 5.0;
  double dev_fraction = 0.1;
  std::uint64_t seed = 13;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_curve;  // mean training loss per epoch
  long steps = 0;
  std::map<std::string, double> metrics;
};

// Computes the loss of one training item on a fresh graph, runs backward into
// the parameter grads and returns the loss value.
using ItemLoss = std::function<double(std::size_t item)>;

// Shuffled minibatch Adam over items [0, n). Gradients are averaged over the
// batch and clipped by global norm. Returns the per-epoch mean loss.
std::vector<double> train_minibatches(nn::ParamSet& params, std::size_t n, const TrainOptions& opts,
                                      const ItemLoss& item_loss, long* steps_out = nullptr);

// Deterministic split of [0, n) into (train, dev) index lists.
void split_indices(std::size_t n, double dev_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& dev);

}  // namespace hopqa
