#include "s2ica/training.hpp"

namespace s2ica {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw ConfigurationError("learning rate must be a finite non-negative number");
  }
  if (!(momentum >= 0 && momentum < 1)) throw ConfigurationError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0)) throw ConfigurationError("weight decay must be non-negative");
  if (batch_size < 1) throw ConfigurationError("batch size must be positive");
  if (epochs < 1) throw ConfigurationError("epoch count must be positive");
  if (!(decay_factor > 0)) throw ConfigurationError("learning-rate decay factor must be positive");
  if (threads < 1) throw ConfigurationError("thread count must be positive");
}

double learning_rate_at(const TrainConfig& cfg, Index epoch) {
  const auto step = Index(std::floor(cfg.decay_fraction * double(cfg.epochs)));
  return (step > 0 && epoch >= step) ? cfg.learning_rate * cfg.decay_factor : cfg.learning_rate;
}

}  // namespace s2ica
