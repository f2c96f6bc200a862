#include "barcoder/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "barcoder/rng.hpp"

namespace barcoder {

namespace {

template <class Matrix>
void check_rows(const Matrix& m, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (r >= m.n_samples()) throw std::out_of_range("row index " + std::to_string(r) + " out of range");
  }
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::vector<std::uint32_t> labels_at(const LabelVector& labels, std::span<const std::size_t> rows) {
  std::vector<std::uint32_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

// Class scores for one row into `scores` (size n_classes).
void class_scores(const DenseFeatures& x, std::size_t row, std::size_t n_classes,
                  std::span<const double> w, std::span<double> scores) {
  const std::size_t stride = x.cols + 1;
  const double* xr = x.values.data() + row * x.cols;
  for (std::size_t k = 0; k < n_classes; ++k) {
    const double* wk = w.data() + k * stride;
    double s = wk[x.cols];
    for (std::size_t d = 0; d < x.cols; ++d) s += wk[d] * xr[d];
    scores[k] = s;
  }
}

// Mean cross-entropy + penalty; fills `gradient` when non-null.
double loss_impl(const DenseFeatures& x, std::span<const std::uint32_t> labels,
                 std::size_t n_classes, std::span<const double> w, double l2,
                 std::vector<double>* gradient) {
  const std::size_t stride = x.cols + 1;
  if (w.size() != n_classes * stride) throw std::invalid_argument("weight vector has wrong size");
  if (labels.size() != x.rows) throw std::invalid_argument("label count does not match feature rows");
  if (x.rows == 0) throw std::invalid_argument("no training rows");
  if (gradient) gradient->assign(w.size(), 0.0);

  std::vector<double> scores(n_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    class_scores(x, i, n_classes, w, scores);
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double& s : scores) {
      s = std::exp(s - mx);
      z += s;
    }
    const std::uint32_t y = labels[i];
    total += std::log(z) - std::log(scores[y]);
    if (gradient) {
      const double* xr = x.values.data() + i * x.cols;
      for (std::size_t k = 0; k < n_classes; ++k) {
        const double diff = scores[k] / z - (k == y ? 1.0 : 0.0);
        double* gk = gradient->data() + k * stride;
        for (std::size_t d = 0; d < x.cols; ++d) gk[d] += diff * xr[d];
        gk[x.cols] += diff;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  double penalty = 0.0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    for (std::size_t d = 0; d < x.cols; ++d) {
      const double wkd = w[k * stride + d];
      penalty += wkd * wkd;
    }
  }
  if (gradient) {
    for (double& g : *gradient) g *= inv_n;
    for (std::size_t k = 0; k < n_classes; ++k) {
      for (std::size_t d = 0; d < x.cols; ++d) (*gradient)[k * stride + d] += l2 * w[k * stride + d];
    }
  }
  return total * inv_n + 0.5 * l2 * penalty;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

DenseFeatures gather_features(const BinaryMatrix& binary, std::span<const std::size_t> rows) {
  check_rows(binary, rows);
  DenseFeatures f{rows.size(), binary.n_dims(), std::vector<double>(rows.size() * binary.n_dims())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < binary.n_dims(); ++d) {
      f.values[i * f.cols + d] = binary.bit(rows[i], d) ? 1.0 : 0.0;
    }
  }
  return f;
}

DenseFeatures gather_features(const EmbeddingMatrix& matrix, std::span<const std::size_t> rows) {
  check_rows(matrix, rows);
  DenseFeatures f{rows.size(), matrix.n_dims(), {}};
  f.values.reserve(rows.size() * matrix.n_dims());
  for (std::size_t r : rows) {
    for (float v : matrix.row(r)) f.values.push_back(v);
  }
  return f;
}

DenseFeatures gather_features(const BinaryMatrix& binary) {
  return gather_features(binary, all_rows(binary.n_samples()));
}

DenseFeatures gather_features(const EmbeddingMatrix& matrix) {
  return gather_features(matrix, all_rows(matrix.n_samples()));
}

LossGradient softmax_loss_gradient(const DenseFeatures& features,
                                   std::span<const std::uint32_t> labels, std::size_t n_classes,
                                   std::span<const double> weights, double l2_penalty) {
  LossGradient out{0.0, {}};
  out.loss = loss_impl(features, labels, n_classes, weights, l2_penalty, &out.gradient);
  return out;
}

ClassifierModel train_logistic(const DenseFeatures& features, std::span<const std::uint32_t> labels,
                               std::size_t n_classes, const TrainConfig& config) {
  if (n_classes < 2) throw std::invalid_argument("need at least 2 classes");
  for (std::uint32_t y : labels) {
    if (y >= n_classes) throw std::invalid_argument("label outside the class range");
  }
  ClassifierModel model;
  model.n_classes = n_classes;
  model.n_dims = features.cols;
  model.weights.assign(n_classes * (features.cols + 1), 0.0);

  std::vector<double> grad;
  double loss = loss_impl(features, labels, n_classes, model.weights, config.l2_penalty, &grad);
  if (!std::isfinite(loss)) throw std::runtime_error("training aborted: non-finite initial loss");
  model.meta.loss_history.push_back(loss);

  double step = config.initial_step;
  std::vector<double> trial(model.weights.size());
  double gnorm = norm(grad);
  while (model.meta.epochs < config.max_epochs) {
    if (gnorm < config.tolerance) {
      model.meta.converged = true;
      break;
    }
    const double g2 = gnorm * gnorm;
    double trial_loss = loss;
    bool accepted = false;
    while (step > 1e-20) {
      for (std::size_t j = 0; j < trial.size(); ++j) trial[j] = model.weights[j] - step * grad[j];
      trial_loss = loss_impl(features, labels, n_classes, trial, config.l2_penalty, nullptr);
      if (std::isfinite(trial_loss) && trial_loss <= loss - config.armijo_slope * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent possible at floating-point resolution
    model.weights.swap(trial);
    loss = loss_impl(features, labels, n_classes, model.weights, config.l2_penalty, &grad);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("training aborted: non-finite loss at epoch " +
                               std::to_string(model.meta.epochs + 1));
    }
    gnorm = norm(grad);
    ++model.meta.epochs;
    model.meta.loss_history.push_back(loss);
    step *= config.step_growth;
  }
  if (!model.meta.converged && gnorm < config.tolerance) model.meta.converged = true;
  model.meta.final_loss = loss;
  model.meta.gradient_norm = gnorm;
  return model;
}

ClassifierModel train_logistic(const BinaryMatrix& binary, const LabelVector& labels,
                               std::span<const std::size_t> rows, const TrainConfig& config) {
  if (rows.empty()) throw std::invalid_argument("no training rows");
  if (labels.size() != binary.n_samples()) throw std::invalid_argument("labels do not match matrix rows");
  return train_logistic(gather_features(binary, rows), labels_at(labels, rows), labels.n_classes(), config);
}

ClassifierModel train_logistic(const EmbeddingMatrix& matrix, const LabelVector& labels,
                               std::span<const std::size_t> rows, const TrainConfig& config) {
  if (rows.empty()) throw std::invalid_argument("no training rows");
  if (labels.size() != matrix.n_samples()) throw std::invalid_argument("labels do not match matrix rows");
  return train_logistic(gather_features(matrix, rows), labels_at(labels, rows), labels.n_classes(), config);
}

Predictions predict(const ClassifierModel& model, const DenseFeatures& features) {
  if (features.cols != model.n_dims) {
    throw std::invalid_argument("feature width " + std::to_string(features.cols) +
                                " does not match model width " + std::to_string(model.n_dims));
  }
  Predictions out(features.rows);
  std::vector<double> scores(model.n_classes);
  for (std::size_t i = 0; i < features.rows; ++i) {
    class_scores(features, i, model.n_classes, model.weights, scores);
    // max_element returns the first maximum: ties go to the lowest class
    out[i] = static_cast<std::uint32_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }
  return out;
}

Predictions predict(const ClassifierModel& model, const BinaryMatrix& binary) {
  return predict(model, gather_features(binary));
}

Predictions predict(const ClassifierModel& model, const EmbeddingMatrix& matrix) {
  return predict(model, gather_features(matrix));
}

EvalMetrics metrics(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                    std::size_t n_classes) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("prediction length " + std::to_string(predicted.size()) +
                                " differs from truth length " + std::to_string(truth.size()));
  }
  if (truth.empty()) throw std::invalid_argument("metrics of an empty sample");
  std::vector<std::size_t> tp(n_classes, 0), pred_count(n_classes, 0), true_count(n_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] >= n_classes || truth[i] >= n_classes) {
      throw std::invalid_argument("label outside the class range");
    }
    ++pred_count[predicted[i]];
    ++true_count[truth[i]];
    if (predicted[i] == truth[i]) {
      ++tp[truth[i]];
      ++correct;
    }
  }
  EvalMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.per_class_f1.resize(n_classes);
  double sum = 0.0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    const double precision = pred_count[k] ? static_cast<double>(tp[k]) / static_cast<double>(pred_count[k]) : 0.0;
    const double recall = true_count[k] ? static_cast<double>(tp[k]) / static_cast<double>(true_count[k]) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.per_class_f1[k] = f1;
    sum += f1;
  }
  m.macro_f1 = sum / static_cast<double>(n_classes);
  return m;
}

SplitIndices stratified_split(const LabelVector& labels, double validation_fraction,
                              std::uint64_t seed, double test_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
  if (!(test_fraction >= 0.0 && validation_fraction + test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must be >= 0 and leave room for training rows");
  }
  const bool with_test = test_fraction > 0.0;
  std::vector<std::vector<std::size_t>> by_class(labels.n_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitIndices split;
  Engine rng(seed);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    const std::size_t n = rows.size();
    const std::size_t needed = with_test ? 3 : 2;
    if (n < needed) {
      throw std::invalid_argument("class " + std::to_string(k) + " has " + std::to_string(n) +
                                  " sample(s); stratified splitting needs at least " +
                                  std::to_string(needed));
    }
    shuffle(rows, rng);
    const auto target = [n](double f) {
      return static_cast<std::size_t>(std::llround(static_cast<double>(n) * f));
    };
    std::size_t n_test = with_test ? std::clamp<std::size_t>(target(test_fraction), 1, n - 2) : 0;
    std::size_t n_val = std::clamp<std::size_t>(target(validation_fraction), 1, n - n_test - 1);
    split.validation_rows.insert(split.validation_rows.end(), rows.begin(), rows.begin() + n_val);
    split.test_rows.insert(split.test_rows.end(), rows.begin() + n_val, rows.begin() + n_val + n_test);
    split.train_rows.insert(split.train_rows.end(), rows.begin() + n_val + n_test, rows.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.validation_rows.begin(), split.validation_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  return split;
}

namespace {

template <class Matrix>
SplitMetrics evaluate_split_impl(const Matrix& m, const LabelVector& labels,
                                 const SplitIndices& split, const TrainConfig& config) {
  if (split.validation_rows.empty()) throw std::invalid_argument("empty validation split");
  const ClassifierModel model = train_logistic(m, labels, split.train_rows, config);
  const auto score = [&](const std::vector<std::size_t>& rows) {
    const Predictions p = predict(model, gather_features(m, rows));
    return metrics(p, labels_at(labels, rows), labels.n_classes());
  };
  SplitMetrics out{score(split.validation_rows), std::nullopt};
  if (!split.test_rows.empty()) out.test = score(split.test_rows);
  return out;
}

}  // namespace

SplitMetrics evaluate_split(const BinaryMatrix& binary, const LabelVector& labels,
                            const SplitIndices& split, const TrainConfig& config) {
  return evaluate_split_impl(binary, labels, split, config);
}

SplitMetrics evaluate_split(const EmbeddingMatrix& matrix, const LabelVector& labels,
                            const SplitIndices& split, const TrainConfig& config) {
  return evaluate_split_impl(matrix, labels, split, config);
}

EvalMetrics evaluate_threshold(const EmbeddingMatrix& matrix, const LabelVector& labels,
                               const ThresholdVector& thresholds, const SplitIndices& split,
                               const TrainConfig& config) {
  SplitIndices val_only{split.train_rows, split.validation_rows, {}};
  return evaluate_split(binarize(matrix, thresholds), labels, val_only, config).validation;
}

ClassifierFitness::ClassifierFitness(const EmbeddingMatrix& matrix, const LabelVector& labels,
                                     SplitIndices split, TrainConfig config)
    : matrix_(&matrix), labels_(&labels), split_(std::move(split)), config_(config) {
  if (labels.size() != matrix.n_samples()) throw std::invalid_argument("labels do not match matrix rows");
  split_.test_rows.clear();  // fitness never looks at held-out test rows
}

double ClassifierFitness::operator()(const ThresholdVector& thresholds) const {
  return score(binarize(*matrix_, thresholds));
}

double ClassifierFitness::score(const BinaryMatrix& binary) const {
  return evaluate_split(binary, *labels_, split_, config_).validation.macro_f1;
}

}  // namespace barcoder
