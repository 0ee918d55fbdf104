#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2ica/network.hpp"

namespace s2ica {

// Central finite-difference checks of analytic gradients in 64-bit.

struct GradCheckResult {
  std::string name;
  /// Largest |analytic - numeric| / max(|analytic| + |numeric|, floor) over
  /// the checked entries.
  double max_rel_error = 0;
  Index checked = 0;
};

struct GradCheckConfig {
  double epsilon = 1e-6;
  /// Denominator floor so entries that are zero both ways compare absolutely.
  double floor = 1e-6;
  /// At most this many entries per input or parameter tensor (randomly
  /// chosen); 0 checks every entry.
  Index max_entries = 0;
  std::uint64_t seed = 0;
};

/// Checks input and parameter gradients of one layer under the loss
/// sum(y * R) for a fixed random R.
GradCheckResult check_layer(const std::string& name, Layer<double> layer, const FeatureMap<double>& x,
                            const ForwardContext& ctx, const GradCheckConfig& cfg);

/// Checks the softmax cross-entropy loss of a whole network for one sample.
GradCheckResult check_network(const std::string& name, Network<double> net, const FeatureMap<double>& x,
                              Index label, const ForwardContext& ctx, const GradCheckConfig& cfg);

/// Every layer type at toy shapes (conv, LRN, sub-sampling, FC, max-pool,
/// SU with r fixed to 0 and 1) plus the full toy network.
std::vector<GradCheckResult> gradient_suite(std::uint64_t seed);

}  // namespace s2ica
