#pragma once

// Linear-probe quality and group-fairness metrics. Group convention: s = 1
// is the privileged group.

#include "fairmix/dataset.hpp"
#include "fairmix/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairmix {

using Labels = Eigen::VectorXi;

struct LogisticModel {
  Vector weights;
  double bias = 0.0;
};

struct ProbeOptions {
  double learning_rate = 0.01;
  int epochs = 500;
};

/// Full-batch Adam on mean BCE from a zero initialization; deterministic.
LogisticModel train_probe(const Matrix& z, const Vector& y, const ProbeOptions& options = {});

Vector predict_proba(const LogisticModel& model, const Matrix& z);
/// 1 where the probability is >= 0.5.
Labels predict_label(const LogisticModel& model, const Matrix& z);

double accuracy(const Labels& predicted, const Labels& truth);

/// Mann-Whitney AUC: (concordant + 0.5 tied) / (positives * negatives).
double roc_auc(const Vector& scores, const Labels& truth);

struct RocPoint {
  double threshold;  // predict positive when score >= threshold
  double tpr;
  double fpr;
};

/// One point per distinct score (descending), preceded by (+inf, 0, 0).
std::vector<RocPoint> roc_curve(const Vector& scores, const Labels& truth);
std::string roc_csv(const std::vector<RocPoint>& curve);

/// P(yhat = 1 | s = 0) / P(yhat = 1 | s = 1), evaluated from integer counts.
double disparate_impact(const Labels& predicted, const Labels& group);
/// |P(yhat = 1 | s = 0) - P(yhat = 1 | s = 1)|.
double statistical_parity_difference(const Labels& predicted, const Labels& group);
/// Strict: DI * 100 > 80.
bool eighty_percent_rule(double di);

struct AttributeFairness {
  std::string name;
  std::optional<double> di;  // empty when the privileged group has no positive predictions
  double spd = 0.0;
  bool passes_80 = false;
};

struct FairnessReport {
  std::string dataset;
  std::string representation;  // "biased" or "debiased"
  double accuracy = 0.0;
  double roc_auc = 0.0;
  std::vector<AttributeFairness> attributes;

  const AttributeFairness& attribute(const std::string& name) const;

  /// CSV with header dataset,representation,accuracy,roc_auc,sensitive,di_x100,spd,passes_80.
  std::string to_csv() const;
};

inline constexpr const char* kReportHeader = "dataset,representation,accuracy,roc_auc,sensitive,di_x100,spd,passes_80";

struct EvaluationOutput {
  FairnessReport report;
  std::vector<RocPoint> roc;
  LogisticModel model;
};

/// Fits the probe on the split's training rows; every metric is computed on
/// the test rows. `sensitive` holds one 0/1 column per entry of `names`.
EvaluationOutput evaluate_representation(const Matrix& z, const Vector& y, const Matrix& sensitive,
                                         const std::vector<std::string>& names, const SplitIndices& split,
                                         const ProbeOptions& options = {});

Labels to_labels(const Vector& v);

}  // namespace fairmix
