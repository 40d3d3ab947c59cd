#include <cmath>
#include <vector>

#include "doctest.h"
#include "igc/cost.hpp"
#include "igc/trainer.hpp"

using namespace igc;

namespace {

TrainConfig cifar_schedule() {
  TrainConfig t;
  t.lr0 = 0.1;
  t.schedule = Schedule::StepDecay;
  t.milestones = {200, 300, 350};
  t.factor = 0.1;
  t.epochs = 400;
  return t;
}

TrainConfig imagenet_schedule() {
  TrainConfig t;
  t.lr0 = 0.045;
  t.schedule = Schedule::Exponential;
  t.gamma = 0.98;
  t.epochs = 480;
  return t;
}

NetworkSpec toy_net_spec(i64 width, i64 blocks, Family fam, i64 g,
                         i64 classes = 4) {
  NetworkSpec net;
  net.input_channels = 3;
  net.input_h = 8;
  net.input_w = 8;
  net.stem.out_channels = width;
  net.stem.spatial_kernel = 9;
  net.stem.stride = 1;
  net.num_classes = classes;
  BlockSpec b;
  b.family = fam;
  b.in_channels = width;
  b.out_channels = width;
  b.expansion = 6;
  b.g1 = g;
  b.g2 = g;
  b.skip = true;
  b.relu_placement = fam == Family::IGCV3 ? ReluPlacement::AfterMiddle
                                          : ReluPlacement::AfterFirstAndMiddle;
  net.stages.push_back({b, blocks});
  return net;
}

}  // namespace

TEST_CASE("lr_at") {
  SUBCASE("published CIFAR values") {
    const TrainConfig t = cifar_schedule();
    CHECK(lr_at(t, 0) == 0.1);
    CHECK(lr_at(t, 199) == 0.1);
    CHECK(lr_at(t, 250) == 0.1 * 0.1);
    CHECK(lr_at(t, 310) == 0.1 * 0.1 * 0.1);
    CHECK(lr_at(t, 360) == 0.1 * 0.1 * 0.1 * 0.1);
  }
  SUBCASE("published ImageNet value at epoch 10") {
    const TrainConfig t = imagenet_schedule();
    const double got = lr_at(t, 10);
    CHECK(std::abs(got - 0.045 * std::pow(0.98, 10)) < 1e-15);
  }
  SUBCASE("gamma = 1 keeps lr constant") {
    TrainConfig t = imagenet_schedule();
    t.gamma = 1.0;
    for (i64 e : {0, 5, 100}) CHECK(lr_at(t, e) == 0.045);
  }
  SUBCASE("table oracle over 480 epochs, both schedules, exact") {
    const TrainConfig cifar = cifar_schedule();
    const TrainConfig imagenet = imagenet_schedule();
    // independent cumulative tables
    std::vector<double> cifar_table(481), imagenet_table(481);
    for (i64 e = 0; e <= 480; ++e) {
      double lr = 0.1;
      if (e >= 200) lr = 0.1 * 0.1;
      if (e >= 300) lr = 0.1 * 0.1 * 0.1;
      if (e >= 350) lr = 0.1 * 0.1 * 0.1 * 0.1;
      cifar_table[static_cast<size_t>(e)] = lr;
    }
    imagenet_table[0] = 0.045;
    for (i64 e = 1; e <= 480; ++e)
      imagenet_table[static_cast<size_t>(e)] =
          imagenet_table[static_cast<size_t>(e - 1)] * 0.98;
    for (i64 e = 0; e <= 480; ++e) {
      CHECK(lr_at(cifar, e) == cifar_table[static_cast<size_t>(e)]);
      CHECK(lr_at(imagenet, e) == imagenet_table[static_cast<size_t>(e)]);
    }
  }
  SUBCASE("invalid milestones are rejected") {
    TrainConfig t = cifar_schedule();
    t.milestones = {200, 150};
    CHECK_THROWS_AS(lr_at(t, 0), ConfigError);
  }
}

TEST_CASE("sgd_step") {
  auto make = [](std::vector<double> v) { return v; };
  std::vector<double> p = make({1.0, -2.0});
  std::vector<double> g = make({0.5, 0.25});
  std::vector<std::vector<double>> vel{{0.0, 0.0}};
  std::vector<ParamRef> params{{&p, true}};
  std::vector<const std::vector<double>*> grads{&g};

  SUBCASE("momentum 0, decay 0 is plain gradient descent") {
    sgd_step(params, grads, vel, 0.1, 0.0, 0.0);
    CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(-2.0 - 0.1 * 0.25).epsilon(1e-15));
  }
  SUBCASE("zero grads, zero decay: params fixed, velocity decays") {
    vel[0] = {1.0, -1.0};
    std::vector<double> zg{0.0, 0.0};
    grads[0] = &zg;
    sgd_step(params, grads, vel, 0.0, 0.9, 0.0);
    CHECK(p == make({1.0, -2.0}));
    CHECK(vel[0][0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(vel[0][1] == doctest::Approx(-0.9).epsilon(1e-15));
  }
  SUBCASE("decay skips tensors flagged no-decay") {
    std::vector<double> shift{0.5};
    std::vector<double> zg{0.0};
    std::vector<std::vector<double>> v2{{0.0}, {0.0}};
    std::vector<double> w{0.5};
    std::vector<ParamRef> ps{{&w, true}, {&shift, false}};
    std::vector<const std::vector<double>*> gs{&zg, &zg};
    sgd_step(ps, gs, v2, 0.1, 0.0, 0.01);
    CHECK(w[0] < 0.5);       // decayed
    CHECK(shift[0] == 0.5);  // untouched
  }
  SUBCASE("two steps on a quadratic bowl reduce the loss") {
    // f(x) = 0.5 * x^2, grad = x
    std::vector<double> x{2.0};
    std::vector<std::vector<double>> v{{0.0}};
    std::vector<ParamRef> ps{{&x, false}};
    double prev = 0.5 * x[0] * x[0];
    for (int step = 0; step < 2; ++step) {
      std::vector<double> grad{x[0]};
      std::vector<const std::vector<double>*> gs{&grad};
      sgd_step(ps, gs, v, 0.1, 0.9, 0.0);
      const double loss = 0.5 * x[0] * x[0];
      CHECK(loss < prev);
      prev = loss;
    }
  }
  SUBCASE("shape mismatch is a contract error") {
    std::vector<double> bad{1.0, 2.0, 3.0};
    std::vector<const std::vector<double>*> gs{&bad};
    CHECK_THROWS_AS(sgd_step(params, gs, vel, 0.1, 0.9, 0.0), ContractError);
  }
}

TEST_CASE("make_toy_dataset") {
  SUBCASE("fixed seed reproduces the dataset bitwise") {
    const ToyDataset a = make_toy_dataset(4, 8, 3, 8, 8, 7, 0.3, true);
    const ToyDataset b = make_toy_dataset(4, 8, 3, 8, 8, 7, 0.3, true);
    REQUIRE(a.size() == b.size());
    CHECK(a.labels == b.labels);
    for (i64 i = 0; i < a.size(); ++i)
      CHECK(a.images[static_cast<size_t>(i)].data ==
            b.images[static_cast<size_t>(i)].data);
  }
  SUBCASE("classes are balanced and interleaved") {
    const ToyDataset d = make_toy_dataset(4, 8, 3, 8, 8, 7, 0.3, true);
    std::vector<i64> count(4, 0);
    for (i64 i = 0; i < d.size(); ++i) {
      ++count[static_cast<size_t>(d.labels[static_cast<size_t>(i)])];
      CHECK(d.labels[static_cast<size_t>(i)] == i % 4);
    }
    for (i64 c : count) CHECK(c == 8);
  }
  SUBCASE("zero noise: nearest class mean classifies perfectly (blob mode)") {
    const ToyDataset d = make_toy_dataset(4, 6, 3, 8, 8, 11, 0.0, false);
    // class means from the data themselves
    std::vector<std::vector<double>> mean(4, std::vector<double>(3 * 64, 0.0));
    for (i64 i = 0; i < d.size(); ++i) {
      const auto& img = d.images[static_cast<size_t>(i)].data;
      auto& m = mean[static_cast<size_t>(d.labels[static_cast<size_t>(i)])];
      for (size_t k = 0; k < img.size(); ++k) m[k] += img[k] / 6.0;
    }
    i64 correct = 0;
    for (i64 i = 0; i < d.size(); ++i) {
      const auto& img = d.images[static_cast<size_t>(i)].data;
      i64 best = -1;
      double best_d = 1e300;
      for (i64 c = 0; c < 4; ++c) {
        double dist = 0.0;
        for (size_t k = 0; k < img.size(); ++k) {
          const double t = img[k] - mean[static_cast<size_t>(c)][k];
          dist += t * t;
        }
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (best == d.labels[static_cast<size_t>(i)]) ++correct;
    }
    CHECK(correct == d.size());
  }
  SUBCASE("separate streams share patterns but differ in noise") {
    const ToyDataset train = make_toy_dataset(2, 4, 1, 4, 4, 5, 0.1, false, 0);
    const ToyDataset eval = make_toy_dataset(2, 4, 1, 4, 4, 5, 0.1, false, 1);
    CHECK(train.images[0].data != eval.images[0].data);
    // noise-free versions coincide
    const ToyDataset t0 = make_toy_dataset(2, 4, 1, 4, 4, 5, 0.0, false, 0);
    const ToyDataset e0 = make_toy_dataset(2, 4, 1, 4, 4, 5, 0.0, false, 1);
    CHECK(t0.images[0].data == e0.images[0].data);
  }
}

TEST_CASE("train") {
  const NetworkSpec spec = toy_net_spec(8, 1, Family::IGCV3, 2);
  const ToyDataset data = make_toy_dataset(4, 4, 3, 8, 8, 3, 0.3, true, 0);
  const ToyDataset eval = make_toy_dataset(4, 4, 3, 8, 8, 3, 0.3, true, 1);

  SUBCASE("lr = 0 keeps the train loss exactly constant") {
    TrainConfig t;
    t.lr0 = 1e-300;  // effectively zero while satisfying lr0 > 0
    t.momentum = 0.0;
    t.weight_decay = 0.0;
    t.schedule = Schedule::Exponential;
    t.gamma = 1.0;
    t.epochs = 3;
    t.batch_size = 16;
    t.seed = 1;
    Network net = build_network(spec, 1);
    const std::vector<EpochMetrics> h = train(net, data, eval, t);
    CHECK(h[1].train_loss == h[0].train_loss);
    CHECK(h[2].train_loss == h[0].train_loss);
  }

  SUBCASE("identical seeds give bitwise-identical trajectories") {
    TrainConfig t;
    t.lr0 = 0.05;
    t.epochs = 4;
    t.batch_size = 8;
    t.seed = 9;
    t.schedule = Schedule::Exponential;
    t.gamma = 0.98;
    Network a = build_network(spec, t.seed);
    Network b = build_network(spec, t.seed);
    const auto ha = train(a, data, eval, t);
    const auto hb = train(b, data, eval, t);
    for (size_t i = 0; i < ha.size(); ++i) {
      CHECK(ha[i].train_loss == hb[i].train_loss);
      CHECK(ha[i].eval_acc == hb[i].eval_acc);
    }
  }

  SUBCASE("memorization: a small dataset reaches 100% train accuracy") {
    TrainConfig t;
    t.lr0 = 0.1;
    t.momentum = 0.9;
    t.weight_decay = 1e-4;
    t.schedule = Schedule::StepDecay;
    t.milestones = {60, 90};
    t.factor = 0.1;
    t.epochs = 120;
    t.batch_size = 8;
    t.seed = 2;
    const ToyDataset mem = make_toy_dataset(4, 8, 3, 8, 8, 2, 0.3, true, 0);
    Network net = build_network(toy_net_spec(8, 2, Family::IGCV3, 2), 2);
    const auto h = train(net, mem, ToyDataset{}, t);
    bool reached = false;
    for (const EpochMetrics& m : h) reached = reached || m.train_acc == 1.0;
    CHECK(reached);
  }

  SUBCASE("divergent lr exits with a training error carrying the epoch") {
    TrainConfig t;
    t.lr0 = 1000.0;
    t.momentum = 0.9;
    t.weight_decay = 0.0;
    t.schedule = Schedule::Exponential;
    t.gamma = 1.0;
    t.epochs = 50;
    t.batch_size = 16;
    t.seed = 3;
    Network net = build_network(spec, 3);
    CHECK_THROWS_AS(train(net, data, eval, t), TrainingError);
  }

  SUBCASE("BN shifts never decay") {
    TrainConfig t;
    t.lr0 = 0.1;
    t.momentum = 0.0;
    t.weight_decay = 0.1;
    t.schedule = Schedule::Exponential;
    t.gamma = 1.0;
    t.epochs = 1;
    t.batch_size = 16;
    t.seed = 4;
    Network net = build_network(spec, 4);
    // zero-gradient regime: decay alone must leave the shifts fixed
    std::vector<ParamRef> params = param_refs(net);
    std::vector<std::vector<double>> vel;
    std::vector<std::vector<double>> zeros;
    for (const ParamRef& p : params) {
      vel.emplace_back(p.value->size(), 0.0);
      zeros.emplace_back(p.value->size(), 0.0);
    }
    std::vector<const std::vector<double>*> gz;
    for (const auto& z : zeros) gz.push_back(&z);
    std::vector<std::vector<double>> before;
    for (const ParamRef& p : params) before.push_back(*p.value);
    sgd_step(params, gz, vel, 0.1, 0.0, 0.1);
    for (size_t i = 0; i < params.size(); ++i) {
      if (params[i].decay) continue;
      CHECK(*params[i].value == before[i]);  // shift and bias tensors fixed
    }
  }
}
