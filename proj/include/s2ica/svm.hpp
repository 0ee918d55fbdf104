#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "s2ica/layers.hpp"

namespace s2ica {

/// One-vs-rest linear SVM. Each class minimises
///   lambda/2 |w|^2 + mean hinge(1 - y (w.x + b)),  lambda = 1 / C,
/// by subgradient descent with step 1 / (lambda t). The bias is learned as
/// the weight of a constant input and regularised with it.
struct SvmConfig {
  double C = 1.0;
  Index epochs = 100;
  std::uint64_t seed = 0;
  /// L2-normalise descriptors before training and prediction.
  bool normalize = true;
  /// Train on per-dimension z-scores of the training set; the affine map is
  /// folded back into the stored weights and bias.
  bool standardize = true;
  /// 0 = full batch (one step per epoch); otherwise mini-batches over a
  /// seed-shuffled order.
  Index batch_size = 0;

  void validate() const;
};

struct SvmModel {
  /// (classes, dimension)
  Eigen::MatrixXf weights;
  Eigen::VectorXf bias;
  double C = 1.0;
  bool normalize = true;

  Index classes() const { return weights.rows(); }
  Index dimension() const { return weights.cols(); }
  bool trained() const { return weights.size() > 0; }
  bool operator==(const SvmModel& o) const {
    return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() && weights == o.weights &&
           bias == o.bias && C == o.C && normalize == o.normalize;
  }
};

/// Per-epoch objective of each one-vs-rest problem, [class][epoch], and the
/// multiclass training accuracy after each epoch.
struct SvmHistory {
  std::vector<std::vector<double>> objective;
  std::vector<double> accuracy;
};

SvmModel train_svm(std::span<const Vec<float>> descriptors, std::span<const Index> labels, const SvmConfig& cfg,
                   SvmHistory* history = nullptr);

struct SvmPrediction {
  Index label = 0;
  Eigen::VectorXf scores;
};

SvmPrediction predict(const SvmModel& model, const Vec<float>& descriptor);

struct Evaluation {
  double accuracy = 0;
  /// rows = true class, cols = predicted class
  Eigen::MatrixXi confusion;
};

Evaluation evaluate(const SvmModel& model, std::span<const Vec<float>> descriptors, std::span<const Index> labels);

void save_svm(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_svm(const std::filesystem::path& path);
std::string encode_svm(const SvmModel& model);
SvmModel decode_svm(const std::string& bytes);

/// K rows of K comma-separated counts.
void save_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixXi& confusion);

}  // namespace s2ica
