#ifndef CFX_BASELINES_HPP
#define CFX_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfx/error.hpp"
#include "cfx/explain.hpp"
#include "cfx/sem.hpp"
#include "cfx/situations.hpp"

namespace cfx {

/// Maps an instance's descriptive features to a dense numeric row. Text
/// features become the index of their value in the training category set;
/// missing values are replaced by the training median.
class FeatureEncoder {
 public:
  static FeatureEncoder fit(const SituationTable& table) {
    FeatureEncoder enc;
    enc.names_ = table.plan.descriptive_names();
    for (const auto& name : enc.names_) {
      const Domain& d = table.domains.at(name);
      Column col;
      col.categorical = d.categorical();
      if (col.categorical) col.categories.assign(d.categories.begin(), d.categories.end());
      std::vector<double> observed;
      for (const auto& v : table.column(name)) observed.push_back(enc.code(col, v));
      if (!observed.empty()) {
        std::sort(observed.begin(), observed.end());
        const std::size_t m = observed.size();
        col.median = m % 2 ? observed[m / 2] : 0.5 * (observed[m / 2 - 1] + observed[m / 2]);
        col.lo = observed.front();
        col.hi = observed.back();
      }
      enc.columns_.push_back(std::move(col));
    }
    return enc;
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  std::vector<double> encode(const Values& values) const {
    std::vector<double> row(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      auto it = values.find(names_[i]);
      row[i] = it == values.end() || !it->second ? columns_[i].median : code(columns_[i], *it->second);
    }
    return row;
  }

  bool categorical(std::size_t i) const { return columns_[i].categorical; }

  /// Same metric as explain's distance, on encoded rows.
  double distance(std::span<const double> a, std::span<const double> b) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& col = columns_[i];
      if (col.categorical) {
        sum += a[i] == b[i] ? 0.0 : 1.0;
      } else if (col.hi > col.lo) {
        sum += std::fabs(a[i] - b[i]) / (col.hi - col.lo);
      }
    }
    return sum;
  }

 private:
  struct Column {
    bool categorical = false;
    std::vector<std::string> categories;
    double median = 0.0;
    double lo = 0.0;
    double hi = 0.0;
  };

  double code(const Column& col, const AttributeValue& v) const {
    if (col.categorical) {
      if (kind_of(v) != ValueKind::Text) return -1.0;
      auto it = std::lower_bound(col.categories.begin(), col.categories.end(), std::get<std::string>(v));
      if (it == col.categories.end() || *it != std::get<std::string>(v)) return -1.0;
      return static_cast<double>(it - col.categories.begin());
    }
    return as_number(v).value_or(col.median);
  }

  std::vector<std::string> names_;
  std::vector<Column> columns_;
};

namespace detail {

inline std::vector<double> numeric_target(const SituationTable& table) {
  std::vector<double> y;
  y.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto v = row.number(table.plan.target.name);
    if (!v) throw ValidationError("target '" + table.plan.target.name + "' is not numeric");
    y.push_back(*v);
  }
  return y;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regression tree

struct RtParams {
  std::size_t min_leaf = 2;
  /// 0 = unlimited.
  std::size_t max_depth = 0;
};

class RegressionTree {
 public:
  struct Node {
    /// -1 marks a leaf.
    int feature = -1;
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;
    std::size_t count = 0;
  };

  RegressionTree(FeatureEncoder encoder, std::vector<Node> nodes)
      : encoder_(std::move(encoder)), nodes_(std::move(nodes)) {}

  const std::vector<Node>& nodes() const { return nodes_; }
  const FeatureEncoder& encoder() const { return encoder_; }

  std::size_t leaf_of(const Values& values) const {
    const auto x = encoder_.encode(values);
    std::size_t n = 0;
    while (nodes_[n].feature >= 0) n = x[nodes_[n].feature] <= nodes_[n].split ? nodes_[n].left : nodes_[n].right;
    return n;
  }

  double predict(const Values& values) const { return nodes_[leaf_of(values)].value; }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }

 private:
  FeatureEncoder encoder_;
  std::vector<Node> nodes_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& y, RtParams params)
      : x_(x), y_(y), params_(params) {}

  std::vector<RegressionTree::Node> build() {
    std::vector<std::size_t> all(y_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(nodes_);
  }

 private:
  std::size_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    double sum = 0.0, sumsq = 0.0;
    for (auto r : rows) {
      sum += y_[r];
      sumsq += y_[r] * y_[r];
    }
    const double n = static_cast<double>(rows.size());
    nodes_[id].value = sum / n;
    nodes_[id].count = rows.size();
    const double sse = std::max(0.0, sumsq - sum * sum / n);

    const bool depth_left = params_.max_depth == 0 || depth < params_.max_depth;
    if (!depth_left || rows.size() < 2 * params_.min_leaf || sse <= 1e-12 * std::max(1.0, sumsq)) return id;

    int best_feature = -1;
    double best_split = 0.0, best_gain = 0.0;
    std::vector<std::size_t> sorted = rows;
    const std::size_t features = x_.empty() ? 0 : x_[0].size();
    for (std::size_t f = 0; f < features; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x_[a][f] < x_[b][f]; });
      double ls = 0.0, lsq = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double v = y_[sorted[i]];
        ls += v;
        lsq += v * v;
        const std::size_t nl = i + 1, nr = sorted.size() - nl;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double xa = x_[sorted[i]][f], xb = x_[sorted[i + 1]][f];
        if (!(xa < xb)) continue;
        const double rs = sum - ls, rsq = sumsq - lsq;
        const double sse_l = lsq - ls * ls / static_cast<double>(nl);
        const double sse_r = rsq - rs * rs / static_cast<double>(nr);
        const double gain = sse - sse_l - sse_r;
        if (gain > best_gain + 1e-12 * std::max(1.0, sse)) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_split = 0.5 * (xa + xb);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][best_feature] <= best_split ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best_feature;
    nodes_[id].split = best_split;
    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& y_;
  RtParams params_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace detail

/// Greedy CART on variance reduction; split threshold = midpoint of adjacent distinct values.
inline RegressionTree train_rt(const SituationTable& table, RtParams params = {}) {
  if (table.rows.size() < 2) throw ValidationError("regression tree needs at least 2 rows");
  if (params.min_leaf == 0) throw ValidationError("min leaf size must be at least 1");
  auto y = detail::numeric_target(table);
  auto encoder = FeatureEncoder::fit(table);
  std::vector<std::vector<double>> x;
  x.reserve(table.rows.size());
  for (const auto& row : table.rows) x.push_back(encoder.encode(row.values));
  auto nodes = detail::TreeBuilder(x, y, params).build();
  return RegressionTree(std::move(encoder), std::move(nodes));
}

// ---------------------------------------------------------------------------
// Locally weighted learning

enum class Kernel {
  /// Weight k - r for the r-th nearest neighbour (0-based).
  LinearRank,
  Uniform
};

inline std::optional<Kernel> parse_kernel(std::string_view s) {
  if (s == "linear") return Kernel::LinearRank;
  if (s == "uniform") return Kernel::Uniform;
  return std::nullopt;
}

class LwlModel {
 public:
  LwlModel(FeatureEncoder encoder, std::vector<std::vector<double>> x, std::vector<double> y, std::size_t k,
           Kernel kernel)
      : encoder_(std::move(encoder)), x_(std::move(x)), y_(std::move(y)), k_(k), kernel_(kernel) {}

  std::size_t k() const { return k_; }
  Kernel kernel() const { return kernel_; }

  /// Kernel-weighted mean of the k nearest training rows; distance ties go to the earlier row.
  double predict(const Values& values) const {
    const auto q = encoder_.encode(values);
    std::vector<std::pair<double, std::size_t>> d(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) d[i] = {encoder_.distance(q, x_[i]), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_), d.end());
    double wsum = 0.0, ysum = 0.0;
    for (std::size_t r = 0; r < k_; ++r) {
      const double w = kernel_ == Kernel::Uniform ? 1.0 : static_cast<double>(k_ - r);
      wsum += w;
      ysum += w * y_[d[r].second];
    }
    return ysum / wsum;
  }

 private:
  FeatureEncoder encoder_;
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  std::size_t k_;
  Kernel kernel_;
};

inline LwlModel train_lwl(const SituationTable& table, std::size_t k, Kernel kernel = Kernel::LinearRank) {
  if (k == 0) throw ValidationError("LWL needs k >= 1");
  if (k > table.rows.size())
    throw ValidationError("LWL k = " + std::to_string(k) + " exceeds the " + std::to_string(table.rows.size()) +
                          " training rows");
  auto y = detail::numeric_target(table);
  auto encoder = FeatureEncoder::fit(table);
  std::vector<std::vector<double>> x;
  for (const auto& row : table.rows) x.push_back(encoder.encode(row.values));
  return LwlModel(std::move(encoder), std::move(x), std::move(y), k, kernel);
}

// ---------------------------------------------------------------------------
// Model predictions

inline double predict_model(const RegressionTree& model, const Instance& instance) {
  return model.predict(instance.values);
}

inline double predict_model(const LwlModel& model, const Instance& instance) { return model.predict(instance.values); }

/// `instance` with the candidate's values written over it; nothing else changes.
inline Instance substitute(const Instance& instance, const Assignment& candidate) {
  Instance out = instance;
  for (const auto& [name, value] : candidate) out.values[name] = value;
  return out;
}

/// Treats the modified instance as a new observation: plain inference, no
/// abduction, no propagation to downstream features, no pruning.
template <class Model>
class ModelPredictor final : public Predictor {
 public:
  ModelPredictor(Model model, std::string name) : model_(std::move(model)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  const Model& model() const { return model_; }

  Outcome counterfactual(const Instance& given, const Assignment& candidate, const std::string&) const override {
    Outcome out;
    Instance modified = substitute(given, candidate);
    out.predicted = predict_model(model_, modified);
    out.values = std::move(modified.values);
    for (const auto& [name, value] : candidate) out.effective_domain.insert(name);
    return out;
  }

 private:
  Model model_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Accuracy

struct EvalReport {
  /// Unset when there were no rows to score.
  std::optional<double> accuracy;
  double epsilon = 0.05;
  /// prediction - truth, per row.
  std::vector<double> residuals;

  std::size_t rows() const { return residuals.size(); }
};

inline bool within_tolerance(double predicted, double truth, double epsilon) {
  return std::fabs(predicted - truth) <= epsilon * std::max(std::fabs(truth), 1.0);
}

inline EvalReport score(std::span<const double> predicted, std::span<const double> truth, double epsilon) {
  EvalReport report;
  report.epsilon = epsilon;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    report.residuals.push_back(predicted[i] - truth[i]);
    if (within_tolerance(predicted[i], truth[i], epsilon)) ++hits;
  }
  if (!predicted.empty()) report.accuracy = static_cast<double>(hits) / static_cast<double>(predicted.size());
  return report;
}

/// Accuracy on held-out observational rows.
template <class Model>
EvalReport observational_accuracy(const Model& model, const SituationTable& test, double epsilon) {
  std::vector<double> predicted, truth = detail::numeric_target(test);
  for (const auto& row : test.rows) predicted.push_back(predict_model(model, row));
  return score(predicted, truth, epsilon);
}

/// Accuracy against SEM counterfactuals, over every (instance, candidate) pair.
inline EvalReport counterfactual_accuracy(const Predictor& model, const Sem& sem, std::span<const Instance> instances,
                                          std::span<const Candidate> candidates, double epsilon,
                                          const std::string& target) {
  SemPredictor oracle(sem);
  std::vector<double> predicted, truth;
  for (const auto& inst : instances) {
    for (const auto& c : candidates) {
      truth.push_back(oracle.counterfactual(inst, c.assignment, target).predicted);
      predicted.push_back(model.counterfactual(inst, c.assignment, target).predicted);
    }
  }
  return score(predicted, truth, epsilon);
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nlohmann::ordered_json(nullptr);
  j["epsilon"] = r.epsilon;
  j["rows"] = r.rows();
  j["residuals"] = r.residuals;
  return j;
}

}  // namespace cfx

#endif  // CFX_BASELINES_HPP
