#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "barcoder/core_types.hpp"

namespace barcoder {

/// Full-batch training settings. Descent is plain gradient descent from zero
/// weights with an Armijo backtracking step, so every accepted epoch lowers
/// (or keeps) the loss and no randomness is involved.
struct TrainConfig {
  double l2_penalty = 1e-4;
  std::size_t max_epochs = 200;
  double tolerance = 1e-6;  // stop once ||grad|| drops below this
  double initial_step = 1.0;
  double step_growth = 2.0;  // applied after each accepted step
  double armijo_slope = 1e-4;
};

/// Dense row-major feature block (rows x cols) fed to the classifier.
struct DenseFeatures {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

/// Selected rows as {0,1} reals.
DenseFeatures gather_features(const BinaryMatrix& binary, std::span<const std::size_t> rows);
/// Selected rows as raw embedding values.
DenseFeatures gather_features(const EmbeddingMatrix& matrix, std::span<const std::size_t> rows);
/// Every row.
DenseFeatures gather_features(const BinaryMatrix& binary);
DenseFeatures gather_features(const EmbeddingMatrix& matrix);

struct TrainingMeta {
  std::size_t epochs = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::vector<double> loss_history;  // loss before the first step, then after each epoch
};

/// Multinomial softmax model. weights is n_classes x (n_dims + 1), row-major,
/// last column = bias.
struct ClassifierModel {
  std::size_t n_classes = 0;
  std::size_t n_dims = 0;
  std::vector<double> weights;
  TrainingMeta meta;

  double weight(std::size_t k, std::size_t d) const noexcept { return weights[k * (n_dims + 1) + d]; }
};

struct LossGradient {
  double loss;
  std::vector<double> gradient;  // same layout as ClassifierModel::weights
};

/// Mean cross-entropy plus (l2/2) * ||W||^2 over non-bias weights, and its gradient.
LossGradient softmax_loss_gradient(const DenseFeatures& features,
                                   std::span<const std::uint32_t> labels, std::size_t n_classes,
                                   std::span<const double> weights, double l2_penalty);

/// Trains on every row of `features`; labels[i] belongs to row i.
ClassifierModel train_logistic(const DenseFeatures& features, std::span<const std::uint32_t> labels,
                               std::size_t n_classes, const TrainConfig& config = {});

ClassifierModel train_logistic(const BinaryMatrix& binary, const LabelVector& labels,
                               std::span<const std::size_t> rows, const TrainConfig& config = {});
ClassifierModel train_logistic(const EmbeddingMatrix& matrix, const LabelVector& labels,
                               std::span<const std::size_t> rows, const TrainConfig& config = {});

/// Per-row argmax of class scores, ties to the lowest class index.
Predictions predict(const ClassifierModel& model, const DenseFeatures& features);
Predictions predict(const ClassifierModel& model, const BinaryMatrix& binary);
Predictions predict(const ClassifierModel& model, const EmbeddingMatrix& matrix);

struct EvalMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

/// Accuracy, per-class F1 (0/0 counted as 0) and their unweighted mean.
EvalMetrics metrics(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                    std::size_t n_classes);

/// Per-class proportional split. Every class needs at least 2 samples (3 when
/// a test fraction is requested). Output row lists are sorted.
SplitIndices stratified_split(const LabelVector& labels, double validation_fraction,
                              std::uint64_t seed, double test_fraction = 0.0);

struct SplitMetrics {
  EvalMetrics validation;
  std::optional<EvalMetrics> test;  // set iff split.test_rows is non-empty
};

/// Train on split.train_rows, score validation (and test) rows.
SplitMetrics evaluate_split(const BinaryMatrix& binary, const LabelVector& labels,
                            const SplitIndices& split, const TrainConfig& config = {});
SplitMetrics evaluate_split(const EmbeddingMatrix& matrix, const LabelVector& labels,
                            const SplitIndices& split, const TrainConfig& config = {});

/// binarize -> train -> validation metrics. This is the optimizer's fitness
/// (its macro_f1).
EvalMetrics evaluate_threshold(const EmbeddingMatrix& matrix, const LabelVector& labels,
                               const ThresholdVector& thresholds, const SplitIndices& split,
                               const TrainConfig& config = {});

/// Validation macro-F1 of thresholded features, usable as a FitnessFunction.
/// Holds references: matrix and labels must outlive it.
class ClassifierFitness {
 public:
  ClassifierFitness(const EmbeddingMatrix& matrix, const LabelVector& labels, SplitIndices split,
                    TrainConfig config = {});

  double operator()(const ThresholdVector& thresholds) const;
  /// Fitness of an already binarized matrix.
  double score(const BinaryMatrix& binary) const;

  const SplitIndices& split() const noexcept { return split_; }

 private:
  const EmbeddingMatrix* matrix_;
  const LabelVector* labels_;
  SplitIndices split_;
  TrainConfig config_;
};

}  // namespace barcoder
