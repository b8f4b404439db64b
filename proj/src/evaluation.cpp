#include "fairmix/evaluation.hpp"

#include "fairmix/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fairmix {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void require_binary(const Labels& v, const char* what) {
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0 && v(i) != 1) throw std::invalid_argument(std::string(what) + " must contain only 0/1");
  }
}

struct GroupCounts {
  std::int64_t size[2] = {0, 0};
  std::int64_t positive[2] = {0, 0};
};

GroupCounts count_groups(const Labels& predicted, const Labels& group) {
  if (predicted.size() != group.size()) throw std::invalid_argument("predictions and groups differ in length");
  require_binary(predicted, "predictions");
  require_binary(group, "group membership");
  GroupCounts c;
  for (Index i = 0; i < predicted.size(); ++i) {
    ++c.size[group(i)];
    c.positive[group(i)] += predicted(i);
  }
  if (c.size[0] == 0 || c.size[1] == 0) throw DataError("fairness metric needs both groups non-empty");
  return c;
}

}  // namespace

Labels to_labels(const Vector& v) {
  Labels out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0 && v(i) != 1.0) throw std::invalid_argument("expected 0/1 values");
    out(i) = static_cast<int>(v(i));
  }
  return out;
}

LogisticModel train_probe(const Matrix& z, const Vector& y, const ProbeOptions& options) {
  if (z.rows() != y.size()) throw std::invalid_argument("train_probe: row count mismatch");
  if (z.rows() == 0) throw std::invalid_argument("train_probe: no rows");
  const Labels labels = to_labels(y);
  if (labels.sum() == 0 || labels.sum() == labels.size()) throw DataError("train_probe: training labels have a single class");

  const Index p = z.cols();
  const double n = static_cast<double>(z.rows());
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  // Parameters packed as [w; b].
  Vector theta = Vector::Zero(p + 1);
  Vector m = Vector::Zero(p + 1);
  Vector v = Vector::Zero(p + 1);
  Vector grad(p + 1);
  for (int step = 1; step <= options.epochs; ++step) {
    const Vector residual = ((z * theta.head(p)).array() + theta(p)).unaryExpr(&sigmoid).matrix() - y;
    grad.head(p).noalias() = z.transpose() * residual / n;
    grad(p) = residual.sum() / n;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, step);
    const double c2 = 1.0 - std::pow(beta2, step);
    theta.array() -= options.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
  if (!theta.allFinite()) throw NumericalError("train_probe: parameters became non-finite");
  return {theta.head(p), theta(p)};
}

Vector predict_proba(const LogisticModel& model, const Matrix& z) {
  if (z.cols() != model.weights.size()) {
    throw std::invalid_argument("predict_proba: representation has " + std::to_string(z.cols()) +
                                " columns, model expects " + std::to_string(model.weights.size()));
  }
  return ((z * model.weights).array() + model.bias).unaryExpr(&sigmoid).matrix();
}

Labels predict_label(const LogisticModel& model, const Matrix& z) {
  const Vector p = predict_proba(model, z);
  return (p.array() >= 0.5).cast<int>().matrix();
}

double accuracy(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (truth.size() == 0) throw std::invalid_argument("accuracy: empty input");
  const auto correct = (predicted.array() == truth.array()).count();
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double roc_auc(const Vector& scores, const Labels& truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("roc_auc: length mismatch");
  require_binary(truth, "roc_auc labels");
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) < scores(b); });

  // Walk tie groups in ascending score order; twice the U statistic stays integral.
  std::int64_t negatives_below = 0;
  std::int64_t doubled = 0;
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t stop = start;
    std::int64_t group_pos = 0;
    std::int64_t group_neg = 0;
    while (stop < order.size() && scores(order[stop]) == scores(order[start])) {
      (truth(order[stop]) == 1 ? group_pos : group_neg) += 1;
      ++stop;
    }
    doubled += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    pos += group_pos;
    neg += group_neg;
    start = stop;
  }
  if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes must be present");
  return static_cast<double>(doubled) / static_cast<double>(2 * pos * neg);
}

std::vector<RocPoint> roc_curve(const Vector& scores, const Labels& truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("roc_curve: length mismatch");
  require_binary(truth, "roc_curve labels");
  const std::int64_t pos = truth.sum();
  const std::int64_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_curve: both classes must be present");
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });

  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores(order[i]);
    while (i < order.size() && scores(order[i]) == threshold) {
      (truth(order[i]) == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.push_back({threshold, static_cast<double>(tp) / static_cast<double>(pos),
                     static_cast<double>(fp) / static_cast<double>(neg)});
  }
  return curve;
}

std::string roc_csv(const std::vector<RocPoint>& curve) {
  std::string out = "threshold,tpr,fpr\n";
  for (const auto& pt : curve) {
    out += (std::isinf(pt.threshold) ? std::string("inf") : format_double(pt.threshold)) + "," + format_double(pt.tpr) +
           "," + format_double(pt.fpr) + "\n";
  }
  return out;
}

double disparate_impact(const Labels& predicted, const Labels& group) {
  const GroupCounts c = count_groups(predicted, group);
  if (c.positive[1] == 0) {
    throw NumericalError("disparate impact undefined: privileged group has no positive predictions");
  }
  // (pos0 / n0) / (pos1 / n1) as one correctly rounded division.
  return static_cast<double>(c.positive[0] * c.size[1]) / static_cast<double>(c.size[0] * c.positive[1]);
}

double statistical_parity_difference(const Labels& predicted, const Labels& group) {
  const GroupCounts c = count_groups(predicted, group);
  const std::int64_t num = c.positive[0] * c.size[1] - c.positive[1] * c.size[0];
  return static_cast<double>(num < 0 ? -num : num) / static_cast<double>(c.size[0] * c.size[1]);
}

bool eighty_percent_rule(double di) { return di * 100.0 > 80.0; }

const AttributeFairness& FairnessReport::attribute(const std::string& name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return a;
  }
  throw std::invalid_argument("report has no attribute '" + name + "'");
}

std::string FairnessReport::to_csv() const {
  char buf[256];
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& a : attributes) {
    std::string di = "undefined";
    if (a.di) {
      std::snprintf(buf, sizeof buf, "%.2f", *a.di * 100.0);
      di = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%s,%s,%.4f,%s", dataset.c_str(), representation.c_str(), accuracy,
                  roc_auc, a.name.c_str(), di.c_str(), a.spd, a.passes_80 ? "true" : "false");
    out += buf;
    out += "\n";
  }
  return out;
}

EvaluationOutput evaluate_representation(const Matrix& z, const Vector& y, const Matrix& sensitive,
                                         const std::vector<std::string>& names, const SplitIndices& split,
                                         const ProbeOptions& options) {
  if (z.rows() != y.size() || z.rows() != sensitive.rows()) {
    throw std::invalid_argument("evaluate_representation: Z, y and S row counts differ");
  }
  if (sensitive.cols() != static_cast<Index>(names.size())) {
    throw std::invalid_argument("evaluate_representation: one name per sensitive column required");
  }
  for (const Index i : split.train) {
    if (i < 0 || i >= z.rows()) throw std::invalid_argument("evaluate_representation: split index out of range");
  }
  for (const Index i : split.test) {
    if (i < 0 || i >= z.rows()) throw std::invalid_argument("evaluate_representation: split index out of range");
  }

  EvaluationOutput out;
  out.model = train_probe(z(split.train, Eigen::all), y(split.train), options);

  const Matrix z_test = z(split.test, Eigen::all);
  const Labels y_test = to_labels(y(split.test));
  const Vector scores = predict_proba(out.model, z_test);
  const Labels predicted = (scores.array() >= 0.5).cast<int>().matrix();

  out.report.accuracy = accuracy(predicted, y_test);
  out.report.roc_auc = roc_auc(scores, y_test);
  out.roc = roc_curve(scores, y_test);
  for (Index j = 0; j < sensitive.cols(); ++j) {
    const Labels group = to_labels(sensitive(split.test, j));
    AttributeFairness a;
    a.name = names[static_cast<std::size_t>(j)];
    a.spd = statistical_parity_difference(predicted, group);
    try {
      a.di = disparate_impact(predicted, group);
      a.passes_80 = eighty_percent_rule(*a.di);
    } catch (const NumericalError&) {
      a.di.reset();
    }
    out.report.attributes.push_back(std::move(a));
  }
  return out;
}

}  // namespace fairmix
