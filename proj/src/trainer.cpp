#include "igc/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "igc/kernels.hpp"
#include "igc/rng.hpp"

namespace igc {

ToyDataset make_toy_dataset(i64 num_classes, i64 per_class, i64 channels,
                            i64 h, i64 w, u64 seed, double noise,
                            bool xor_mode, u64 sample_stream) {
  if (num_classes < 2) throw ConfigError("toy dataset needs >= 2 classes");
  if (per_class < 1 || channels < 1 || h < 1 || w < 1)
    throw ConfigError("toy dataset dimensions must be positive");

  ToyDataset ds;
  ds.num_classes = num_classes;
  ds.channels = channels;
  ds.h = h;
  ds.w = w;
  ds.seed = seed;
  ds.noise = noise;
  ds.xor_mode = xor_mode;

  // class patterns depend only on the seed, never on the stream
  Rng proto_rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  const i64 vol = channels * h * w;
  std::vector<std::vector<double>> patterns(static_cast<size_t>(num_classes));
  for (auto& p : patterns) {
    p.resize(static_cast<size_t>(vol));
    for (double& v : p) v = proto_rng.normal();
  }

  Rng noise_rng(seed * 0x9e3779b97f4a7c15ULL + 2 + sample_stream);
  for (i64 j = 0; j < per_class; ++j) {
    for (i64 c = 0; c < num_classes; ++c) {
      const double sign = xor_mode && (j % 2 == 1) ? -1.0 : 1.0;
      Tensor4 img(1, channels, h, w);
      const std::vector<double>& p = patterns[static_cast<size_t>(c)];
      for (i64 i = 0; i < vol; ++i)
        img.data[static_cast<size_t>(i)] =
            sign * p[static_cast<size_t>(i)] + noise * noise_rng.normal();
      ds.images.push_back(std::move(img));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Tensor4 gather_batch(const ToyDataset& ds, i64 first, i64 count) {
  if (first < 0 || first + count > ds.size())
    throw ContractError("gather_batch: range out of bounds");
  Tensor4 batch(count, ds.channels, ds.h, ds.w);
  const i64 vol = ds.channels * ds.h * ds.w;
  for (i64 i = 0; i < count; ++i)
    std::copy(ds.images[static_cast<size_t>(first + i)].data.begin(),
              ds.images[static_cast<size_t>(first + i)].data.end(),
              batch.data.begin() + i * vol);
  return batch;
}

double lr_at(const TrainConfig& config, i64 epoch) {
  config.validate();
  if (epoch < 0) throw ConfigError("lr_at: epoch must be >= 0");
  double lr = config.lr0;
  if (config.schedule == Schedule::StepDecay) {
    for (i64 m : config.milestones)
      if (epoch >= m) lr *= config.factor;
  } else {
    for (i64 e = 0; e < epoch; ++e) lr *= config.gamma;
  }
  return lr;
}

void sgd_step(const std::vector<ParamRef>& params,
              const std::vector<const std::vector<double>*>& grads,
              std::vector<std::vector<double>>& velocity, double lr,
              double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw ContractError("sgd_step: param/grad/velocity tensor counts differ");
  const auto& k = kernels::active();
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& p = *params[i].value;
    const std::vector<double>& g = *grads[i];
    std::vector<double>& v = velocity[i];
    if (p.size() != g.size() || p.size() != v.size())
      throw ContractError("sgd_step: tensor " + std::to_string(i) +
                          " shape mismatch");
    const double wd = params[i].decay ? weight_decay : 0.0;
    k.sgd_update(p.size(), p.data(), g.data(), v.data(), lr, momentum, wd);
  }
}

SoftmaxLoss softmax_cross_entropy(const Matrix& logits,
                                  const std::vector<i64>& labels) {
  if (static_cast<i64>(labels.size()) != logits.rows)
    throw ContractError("softmax_cross_entropy: label count mismatch");
  SoftmaxLoss out;
  out.dlogits = Matrix(logits.rows, logits.cols);
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  for (i64 r = 0; r < logits.rows; ++r) {
    const double* row = logits.row(r);
    double mx = row[0];
    i64 argmax = 0;
    for (i64 c = 1; c < logits.cols; ++c)
      if (row[c] > mx) {
        mx = row[c];
        argmax = c;
      }
    double z = 0.0;
    for (i64 c = 0; c < logits.cols; ++c) z += std::exp(row[c] - mx);
    const i64 label = labels[static_cast<size_t>(r)];
    out.loss += (std::log(z) - (row[label] - mx)) * inv_n;
    for (i64 c = 0; c < logits.cols; ++c) {
      const double p = std::exp(row[c] - mx) / z;
      out.dlogits.at(r, c) = (p - (c == label ? 1.0 : 0.0)) * inv_n;
    }
    if (argmax == label) ++out.correct;
  }
  return out;
}

double evaluate_accuracy(const Network& net, const ToyDataset& data,
                         i64 batch_size) {
  i64 correct = 0;
  for (i64 first = 0; first < data.size(); first += batch_size) {
    const i64 count = std::min(batch_size, data.size() - first);
    const Tensor4 batch = gather_batch(data, first, count);
    const NetForward nf = forward(net, batch, Mode::Eval);
    for (i64 r = 0; r < nf.logits.rows; ++r) {
      const double* row = nf.logits.row(r);
      i64 argmax = 0;
      for (i64 c = 1; c < nf.logits.cols; ++c)
        if (row[c] > row[argmax]) argmax = c;
      if (argmax == data.labels[static_cast<size_t>(first + r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<EpochMetrics> train(Network& net, const ToyDataset& train_data,
                                const ToyDataset& eval_data,
                                const TrainConfig& config) {
  config.validate();
  if (train_data.channels != net.spec.input_channels ||
      train_data.h != net.spec.input_h || train_data.w != net.spec.input_w)
    throw ConfigError("train: dataset resolution does not match the network stem");

  std::vector<ParamRef> params = param_refs(net);
  std::vector<std::vector<double>> velocity;
  velocity.reserve(params.size());
  for (const ParamRef& p : params)
    velocity.emplace_back(p.value->size(), 0.0);

  std::vector<EpochMetrics> history;
  for (i64 epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(config, epoch);
    double loss_sum = 0.0;
    i64 correct = 0;
    for (i64 first = 0; first < train_data.size(); first += config.batch_size) {
      const i64 count = std::min(config.batch_size, train_data.size() - first);
      const Tensor4 batch = gather_batch(train_data, first, count);
      std::vector<i64> labels(train_data.labels.begin() + first,
                              train_data.labels.begin() + first + count);
      try {
        NetForward nf = forward(net, batch, Mode::Train);
        SoftmaxLoss sl = softmax_cross_entropy(nf.logits, labels);
        if (!std::isfinite(sl.loss))
          throw NumericError("non-finite loss");
        loss_sum += sl.loss * static_cast<double>(count);
        correct += sl.correct;
        const NetGrads grads = backward(net, sl.dlogits, nf.cache);
        sgd_step(params, grad_refs(grads), velocity, lr, config.momentum,
                 config.weight_decay);
        apply_bn_updates(net, nf.cache);
      } catch (const NumericError&) {
        throw TrainingError(epoch,
                            "training diverged (non-finite loss); reduce lr0");
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(train_data.size());
    m.train_acc =
        static_cast<double>(correct) / static_cast<double>(train_data.size());
    m.eval_acc = eval_data.size() > 0
                     ? evaluate_accuracy(net, eval_data, config.batch_size)
                     : 0.0;
    history.push_back(m);
  }
  return history;
}

}  // namespace igc
