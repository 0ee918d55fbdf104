#include "s2ica/svm.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "s2ica/model_io.hpp"
#include "s2ica/random.hpp"

namespace s2ica {

using nlohmann::json;

void SvmConfig::validate() const {
  if (!(C > 0) || !std::isfinite(C)) throw ConfigurationError("SVM C must be positive");
  if (epochs < 1) throw ConfigurationError("SVM epoch count must be positive");
  if (batch_size < 0) throw ConfigurationError("SVM batch size must be non-negative");
}

namespace {

Eigen::VectorXd prepare(const Vec<float>& x, bool normalize) {
  Eigen::VectorXd v = x.cast<double>();
  if (normalize) {
    const double n = v.norm();
    if (n > 0) v /= n;
  }
  return v;
}

}  // namespace

SvmModel train_svm(std::span<const Vec<float>> descriptors, std::span<const Index> labels, const SvmConfig& cfg,
                   SvmHistory* history) {
  cfg.validate();
  if (descriptors.empty()) throw EmptyInputError("no descriptors to train on");
  if (descriptors.size() != labels.size()) throw DimensionError("descriptors and labels differ in count");
  const Index n = Index(descriptors.size());
  const Index dim = descriptors.front().size();
  Index classes = 0;
  for (Index l : labels) {
    if (l < 0) throw LabelError("negative class label");
    classes = std::max(classes, l + 1);
  }
  std::vector<Index> counts(std::size_t(classes), 0);
  for (Index l : labels) ++counts[std::size_t(l)];
  if (std::count_if(counts.begin(), counts.end(), [](Index c) { return c > 0; }) < 2) {
    throw ConfigurationError("SVM training needs at least two distinct classes");
  }

  // Augmented design matrix: the last column is the constant bias input.
  Eigen::MatrixXd x(n, dim + 1);
  for (Index i = 0; i < n; ++i) {
    if (descriptors[std::size_t(i)].size() != dim) throw DimensionError("descriptors differ in length");
    x.row(i).head(dim) = prepare(descriptors[std::size_t(i)], cfg.normalize).transpose();
    x(i, dim) = 1.0;
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd inv_std = Eigen::VectorXd::Ones(dim);
  if (cfg.standardize) {
    mean = x.leftCols(dim).colwise().mean().transpose();
    x.leftCols(dim).rowwise() -= mean.transpose();
    for (Index j = 0; j < dim; ++j) {
      const double sd = std::sqrt(x.col(j).squaredNorm() / double(n));
      if (sd > 1e-12) inv_std[j] = 1.0 / sd;
    }
    x.leftCols(dim) = x.leftCols(dim) * inv_std.asDiagonal();
  }

  const double lambda = 1.0 / cfg.C;
  const double radius = 1.0 / std::sqrt(lambda);
  const Index batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  SvmModel model;
  model.weights.resize(classes, dim);
  model.bias.resize(classes);
  model.C = cfg.C;
  model.normalize = cfg.normalize;
  // Training scores per epoch, (n, classes) each, for the accuracy trace.
  std::vector<Eigen::MatrixXd> epoch_scores;
  if (history) {
    history->objective.assign(std::size_t(classes), {});
    epoch_scores.assign(std::size_t(cfg.epochs), Eigen::MatrixXd(n, classes));
  }

  for (Index k = 0; k < classes; ++k) {
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) y[i] = labels[std::size_t(i)] == k ? 1.0 : -1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim + 1);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    Rng rng(derive_seed(cfg.seed, std::uint64_t(k)));
    Index t = 0;

    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
      if (batch < n) {
        for (Index i = n - 1; i > 0; --i) std::swap(order[std::size_t(i)], order[rng.below(std::uint64_t(i + 1))]);
      }
      for (Index start = 0; start < n; start += batch) {
        ++t;
        const Index count = std::min(batch, n - start);
        const double eta = 1.0 / (lambda * double(t));
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim + 1);
        if (count == n) {
          const Eigen::VectorXd margins = y.cwiseProduct(x * w);
          const Eigen::VectorXd active = (margins.array() < 1.0).cast<double>().matrix().cwiseProduct(y);
          g = x.transpose() * active;
        } else {
          for (Index j = start; j < start + count; ++j) {
            const Index i = order[std::size_t(j)];
            if (y[i] * x.row(i).dot(w) < 1.0) g += y[i] * x.row(i).transpose();
          }
        }
        w = (1.0 - eta * lambda) * w + (eta / double(count)) * g;
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
      }
      if (history) {
        const Eigen::VectorXd scores = x * w;
        epoch_scores[std::size_t(epoch)].col(k) = scores;
        const Eigen::VectorXd margins = y.cwiseProduct(scores);
        const double hinge = (1.0 - margins.array()).max(0.0).mean();
        history->objective[std::size_t(k)].push_back(0.5 * lambda * w.squaredNorm() + hinge);
      }
    }
    const Eigen::VectorXd folded = w.head(dim).cwiseProduct(inv_std);
    model.weights.row(k) = folded.cast<float>().transpose();
    model.bias[k] = float(w[dim] - folded.dot(mean));
  }
  if (history) {
    for (const auto& scores : epoch_scores) {
      Index correct = 0;
      for (Index i = 0; i < n; ++i) {
        Index best = 0;
        scores.row(i).maxCoeff(&best);
        if (best == labels[std::size_t(i)]) ++correct;
      }
      history->accuracy.push_back(double(correct) / double(n));
    }
  }
  return model;
}

SvmPrediction predict(const SvmModel& model, const Vec<float>& descriptor) {
  if (!model.trained()) throw StateError("SVM has not been trained");
  if (descriptor.size() != model.dimension()) {
    throw DimensionError("descriptor length " + std::to_string(descriptor.size()) + " differs from SVM dimension " +
                         std::to_string(model.dimension()));
  }
  Eigen::VectorXf x = descriptor;
  if (model.normalize) {
    const float n = x.norm();
    if (n > 0) x /= n;
  }
  SvmPrediction p;
  p.scores = model.weights * x + model.bias;
  p.label = argmax(p.scores);
  return p;
}

Evaluation evaluate(const SvmModel& model, std::span<const Vec<float>> descriptors, std::span<const Index> labels) {
  if (descriptors.empty()) throw EmptyInputError("cannot evaluate on an empty set");
  if (descriptors.size() != labels.size()) throw DimensionError("descriptors and labels differ in count");
  Evaluation e;
  const Index k = model.classes();
  e.confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    const Index truth = labels[i];
    if (truth < 0 || truth >= k) throw LabelError("test label " + std::to_string(truth) + " unknown to the SVM");
    ++e.confusion(truth, predict(model, descriptors[i]).label);
  }
  e.accuracy = double(e.confusion.trace()) / double(descriptors.size());
  return e;
}

std::string encode_svm(const SvmModel& model) {
  Container c;
  c.magic = "S2SV";
  json header;
  header["classes"] = model.classes();
  header["dimension"] = model.dimension();
  header["C"] = model.C;
  header["normalize"] = model.normalize;
  c.header = header.dump();
  for (Index r = 0; r < model.classes(); ++r)
    for (Index j = 0; j < model.dimension(); ++j) c.blob.push_back(model.weights(r, j));
  for (Index r = 0; r < model.classes(); ++r) c.blob.push_back(model.bias[r]);
  return encode_container(c);
}

SvmModel decode_svm(const std::string& bytes) {
  Container c = decode_container(bytes, "S2SV");
  SvmModel m;
  Index classes = 0, dim = 0;
  try {
    const json header = json::parse(c.header);
    classes = header.at("classes").get<Index>();
    dim = header.at("dimension").get<Index>();
    m.C = header.at("C").get<double>();
    m.normalize = header.at("normalize").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed SVM header: ") + e.what(), 12);
  }
  if (classes < 1 || dim < 1) throw FormatError("SVM header has non-positive extents", 12);
  if (std::size_t(classes) > c.blob.size() || std::size_t(dim) >= c.blob.size()) {
    throw FormatError("SVM header extents exceed the parameter blob", c.blob_offset);
  }
  const auto expected = std::size_t(classes) * std::size_t(dim + 1);
  if (c.blob.size() != expected) {
    throw FormatError("expected " + std::to_string(expected) + " SVM parameters, found " +
                          std::to_string(c.blob.size()),
                      c.blob_offset + 4 * std::min(expected, c.blob.size()));
  }
  m.weights.resize(classes, dim);
  m.bias.resize(classes);
  std::size_t k = 0;
  for (Index r = 0; r < classes; ++r)
    for (Index j = 0; j < dim; ++j) m.weights(r, j) = c.blob[k++];
  for (Index r = 0; r < classes; ++r) m.bias[r] = c.blob[k++];
  return m;
}

void save_svm(const std::filesystem::path& path, const SvmModel& model) { write_file_atomic(path, encode_svm(model)); }

SvmModel load_svm(const std::filesystem::path& path) { return decode_svm(read_file(path)); }

void save_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixXi& confusion) {
  std::ostringstream out;
  for (Index r = 0; r < confusion.rows(); ++r) {
    for (Index c = 0; c < confusion.cols(); ++c) out << (c ? "," : "") << confusion(r, c);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace s2ica
