#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "s2ica/network.hpp"

namespace s2ica {

/// SGD with momentum and L2 weight decay on kernels and FC weights. The
/// learning rate is multiplied by decay_factor once, at decay_fraction of the
/// epochs.
struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  Index batch_size = 16;
  Index epochs = 10;
  double decay_fraction = 2.0 / 3.0;
  double decay_factor = 0.1;
  std::uint64_t seed = 0;
  Index threads = 1;

  void validate() const;
};

struct EpochRecord {
  Index epoch = 0;
  double loss = 0;
  double accuracy = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Learning rate in effect during a 0-based epoch.
double learning_rate_at(const TrainConfig& cfg, Index epoch);

namespace detail {

template <typename Scalar>
std::vector<bool> decay_mask(const Network<Scalar>& net) {
  std::vector<bool> mask;
  for (const auto& layer : net.layers()) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, ConvLayer<Scalar>> || std::is_same_v<L, FcLayer<Scalar>>) {
            mask.push_back(true);
            mask.push_back(false);
          } else if constexpr (std::is_same_v<L, SubSampleLayer<Scalar>>) {
            mask.push_back(false);
            mask.push_back(false);
          }
        },
        layer);
  }
  return mask;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(Index n, Index threads, Fn&& fn) {
  threads = std::max<Index>(1, std::min(threads, n));
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (Index t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (Index i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[std::size_t(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Minimises mean softmax cross-entropy over (inputs, labels). SU layers run
/// in train mode with a per-sample generator derived from (seed, epoch,
/// sample), so results do not depend on the thread count.
template <typename Scalar>
TrainReport train(Network<Scalar>& net, std::span<const FeatureMap<Scalar>> inputs, std::span<const Index> labels,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (inputs.size() != labels.size()) throw DimensionError("inputs and labels differ in count");
  if (inputs.empty()) throw EmptyInputError("training set is empty");
  const Index classes = net.spec().classes();
  for (Index l : labels) {
    if (l < 0 || l >= classes) {
      throw LabelError("label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    }
  }

  auto params = net.params();
  const auto mask = detail::decay_mask(net);
  std::vector<Vec<Scalar>> velocity;
  for (auto* p : params) velocity.push_back(Vec<Scalar>::Zero(p->size()));

  const Index n = Index(inputs.size());
  std::vector<Index> order(static_cast<std::size_t>(n));
  TrainReport report;

  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index(0));
    Rng shuffle_rng(derive_seed(cfg.seed, std::uint64_t(epoch)));
    for (Index i = n - 1; i > 0; --i) std::swap(order[std::size_t(i)], order[shuffle_rng.below(std::uint64_t(i + 1))]);

    const Scalar lr = Scalar(learning_rate_at(cfg, epoch));
    double loss_sum = 0;
    Index correct = 0;

    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index count = std::min(cfg.batch_size, n - start);
      std::vector<NetworkGradients<Scalar>> grads(static_cast<std::size_t>(count));
      std::vector<Scalar> losses(static_cast<std::size_t>(count));
      std::vector<Index> predictions(static_cast<std::size_t>(count));
      detail::parallel_for(count, cfg.threads, [&](Index k) {
        const Index idx = order[std::size_t(start + k)];
        Rng rng(derive_seed(derive_seed(cfg.seed ^ 0x5eedULL, std::uint64_t(epoch)), std::uint64_t(idx)));
        ForwardContext ctx{SuMode::train, &rng, std::nullopt};
        Trace<Scalar> trace;
        const auto logits = net.forward(inputs[std::size_t(idx)], ctx, &trace);
        auto lg = softmax_xent<Scalar>(logits.sample(0), labels[std::size_t(idx)]);
        FeatureMap<Scalar> g(1, 1, logits.channels(), 1);
        g.data() = lg.grad;
        grads[std::size_t(k)] = net.backward(trace, g);
        losses[std::size_t(k)] = lg.loss;
        predictions[std::size_t(k)] = argmax(logits.sample(0));
      });

      for (Index k = 0; k < count; ++k) {
        const Scalar loss = losses[std::size_t(k)];
        if (!std::isfinite(double(loss))) {
          throw TrainingError("loss diverged (" + std::to_string(double(loss)) + ") at epoch " +
                              std::to_string(epoch) + ", sample offset " + std::to_string(start + k) +
                              ", learning rate " + std::to_string(double(lr)) + "; lower the learning rate");
        }
        loss_sum += double(loss);
        if (predictions[std::size_t(k)] == labels[std::size_t(order[std::size_t(start + k)])]) ++correct;
      }

      const Scalar inv = Scalar(1) / Scalar(count);
      for (std::size_t p = 0; p < params.size(); ++p) {
        Vec<Scalar> g = grads[0].params[p].data();
        for (Index k = 1; k < count; ++k) g += grads[std::size_t(k)].params[p].data();
        g *= inv;
        if (mask[p]) g += Scalar(cfg.weight_decay) * params[p]->data();
        velocity[p] = Scalar(cfg.momentum) * velocity[p] - lr * g;
        params[p]->data() += velocity[p];
      }
    }

    EpochRecord rec{epoch + 1, loss_sum / double(n), double(correct) / double(n)};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return report;
}

/// Inference-mode accuracy.
template <typename Scalar>
double accuracy(const Network<Scalar>& net, std::span<const FeatureMap<Scalar>> inputs,
                std::span<const Index> labels) {
  if (inputs.empty()) throw EmptyInputError("accuracy of an empty set");
  Index correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (argmax(net.predict_logits(inputs[i])) == labels[i]) ++correct;
  }
  return double(correct) / double(inputs.size());
}

}  // namespace s2ica
