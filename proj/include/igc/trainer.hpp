#pragma once

#include "igc/network.hpp"
#include "igc/specs.hpp"

namespace igc {

// Synthetic classification data: per-class Gaussian patterns plus noise.
// In xor mode every class is the union of a pattern and its negation, which
// kills linear classifiers while leaving the task easy for a small net.
struct ToyDataset {
  i64 num_classes = 0;
  i64 channels = 0, h = 0, w = 0;
  std::vector<Tensor4> images;  // one n=1 tensor per sample
  std::vector<i64> labels;
  u64 seed = 0;
  double noise = 0.3;
  bool xor_mode = true;

  i64 size() const { return static_cast<i64>(images.size()); }
};

// Samples are emitted class-interleaved (0,1,2,...,0,1,2,...) so fixed-order
// batches stay class balanced. `sample_stream` selects an independent noise
// stream over the same class patterns (0 = train draw, 1 = eval draw, ...).
ToyDataset make_toy_dataset(i64 num_classes, i64 per_class, i64 channels,
                            i64 h, i64 w, u64 seed, double noise,
                            bool xor_mode, u64 sample_stream = 0);

// Gathers dataset samples [first, first+count) into one batch tensor.
Tensor4 gather_batch(const ToyDataset& ds, i64 first, i64 count);

double lr_at(const TrainConfig& config, i64 epoch);

void sgd_step(const std::vector<ParamRef>& params,
              const std::vector<const std::vector<double>*>& grads,
              std::vector<std::vector<double>>& velocity, double lr,
              double momentum, double weight_decay);

struct SoftmaxLoss {
  double loss = 0.0;  // mean cross-entropy over the batch
  Matrix dlogits;     // gradient of the mean loss
  i64 correct = 0;
};
SoftmaxLoss softmax_cross_entropy(const Matrix& logits,
                                  const std::vector<i64>& labels);

struct EpochMetrics {
  i64 epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
};

// Fixed-order mini-batch SGD; deterministic given the seed. Throws
// TrainingError at the first non-finite loss.
std::vector<EpochMetrics> train(Network& net, const ToyDataset& train_data,
                                const ToyDataset& eval_data,
                                const TrainConfig& config);

double evaluate_accuracy(const Network& net, const ToyDataset& data,
                         i64 batch_size);

}  // namespace igc
