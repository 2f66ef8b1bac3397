#ifndef CFX_EXPERIMENT_HPP
#define CFX_EXPERIMENT_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfx/baselines.hpp"
#include "cfx/error.hpp"
#include "cfx/explain.hpp"
#include "cfx/rng.hpp"
#include "cfx/sem.hpp"
#include "cfx/situations.hpp"

namespace cfx {

/// Seed streams, so that every stage draws from its own generator.
namespace stream {
inline constexpr std::uint64_t synth = 1;
inline constexpr std::uint64_t candidates = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t cf_candidates = 4;
}  // namespace stream

struct EvaluationSettings {
  double epsilon = 0.05;
  double train_fraction = 0.8;
  /// Test rows used as counterfactual instances (0 = all).
  std::size_t cf_instances = 100;
  std::size_t cf_candidates = 100;
  RtParams rt;
  std::size_t lwl_k = 18;
  Kernel lwl_kernel = Kernel::LinearRank;
};

/// One selected explanation as seen by every predictor (the two panels of Fig. 4).
struct ComparisonRow {
  std::size_t index = 0;
  Candidate candidate;
  double sem = 0.0;
  double rt = 0.0;
  double lwl = 0.0;
  std::size_t sem_domain = 0;
  std::size_t model_domain = 0;
};

struct EvaluationResult {
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  EvalReport rt_observational, rt_counterfactual;
  EvalReport lwl_observational, lwl_counterfactual;
  ExplanationSet explanations;
  std::vector<ComparisonRow> comparison;

  double mean_gap(double ComparisonRow::*model) const {
    if (comparison.empty()) return 0.0;
    double s = 0.0;
    for (const auto& row : comparison) s += std::fabs(row.*model - row.sem);
    return s / static_cast<double>(comparison.size());
  }
};

/// Deterministic shuffled split; throws when either side cannot support the models.
inline std::pair<SituationTable, SituationTable> split_table(const SituationTable& table, double train_fraction,
                                                             std::size_t min_train, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie strictly between 0 and 1");
  const std::size_t n = table.rows.size();
  const auto train_n = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
  if (train_n < min_train || train_n >= n)
    throw ValidationError("insufficient rows: " + std::to_string(n) + " rows give " + std::to_string(train_n) +
                          " training and " + std::to_string(n - std::min(n, train_n)) +
                          " test rows; need at least " + std::to_string(min_train) + " training rows and 1 test row");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());
  return {table.subset(train), table.subset(test)};
}

/// Trains RT and LWL, scores them on held-out rows and on SEM counterfactuals,
/// then compares them with the SEM on the explanations selected for `instance`.
inline EvaluationResult run_evaluation(const SituationTable& table, const Sem& sem, const Instance& instance,
                                       const ExplainOptions& options, const EvaluationSettings& settings,
                                       std::uint64_t seed) {
  const std::string& target = table.plan.target.name;
  const std::size_t min_train = std::max<std::size_t>({2, settings.lwl_k, settings.rt.min_leaf});
  auto [train, test] = split_table(table, settings.train_fraction, min_train, derive_seed(seed, stream::split));

  EvaluationResult result;
  result.train_rows = train.rows.size();
  result.test_rows = test.rows.size();

  ModelPredictor<RegressionTree> rt(train_rt(train, settings.rt), "rt");
  ModelPredictor<LwlModel> lwl(train_lwl(train, settings.lwl_k, settings.lwl_kernel), "lwl");
  result.rt_observational = observational_accuracy(rt.model(), test, settings.epsilon);
  result.lwl_observational = observational_accuracy(lwl.model(), test, settings.epsilon);

  std::vector<Instance> cf_rows = test.rows;
  if (settings.cf_instances && cf_rows.size() > settings.cf_instances) cf_rows.resize(settings.cf_instances);
  const auto candidates =
      generate_candidates(table, options.actionable, settings.cf_candidates, derive_seed(seed, stream::cf_candidates));
  result.rt_counterfactual = counterfactual_accuracy(rt, sem, cf_rows, candidates, settings.epsilon, target);
  result.lwl_counterfactual = counterfactual_accuracy(lwl, sem, cf_rows, candidates, settings.epsilon, target);

  SemPredictor oracle(sem);
  result.explanations = explain(table, instance, oracle, options);
  for (std::size_t i = 0; i < result.explanations.explanations.size(); ++i) {
    const auto& cf = result.explanations.explanations[i];
    ComparisonRow row;
    row.index = i + 1;
    row.candidate = cf.candidate;
    row.sem = cf.predicted;
    row.rt = rt.counterfactual(instance, cf.candidate.assignment, target).predicted;
    row.lwl = lwl.counterfactual(instance, cf.candidate.assignment, target).predicted;
    row.sem_domain = cf.effective_domain.size();
    row.model_domain = cf.candidate.assignment.size();
    result.comparison.push_back(std::move(row));
  }
  return result;
}

/// predictor, observational_accuracy, counterfactual_accuracy, epsilon, seed.
inline std::string comparison_csv(const EvaluationResult& r, std::uint64_t seed) {
  auto acc = [](const EvalReport& e) { return e.accuracy ? format_number(*e.accuracy) : std::string(); };
  std::string out = "predictor,observational_accuracy,counterfactual_accuracy,epsilon,seed\n";
  out += "rt," + acc(r.rt_observational) + "," + acc(r.rt_counterfactual) + "," +
         format_number(r.rt_observational.epsilon) + "," + std::to_string(seed) + "\n";
  out += "lwl," + acc(r.lwl_observational) + "," + acc(r.lwl_counterfactual) + "," +
         format_number(r.lwl_observational.epsilon) + "," + std::to_string(seed) + "\n";
  return out;
}

/// Left panel of Fig. 4: predicted target per selected candidate and predictor.
inline std::string predictions_csv(const EvaluationResult& r) {
  std::string out = "index,sem,rt,lwl\n";
  for (const auto& row : r.comparison)
    out += std::to_string(row.index) + "," + format_number(row.sem) + "," + format_number(row.rt) + "," +
           format_number(row.lwl) + "\n";
  return out;
}

/// Right panel of Fig. 4: effective-domain size per selected candidate; the
/// models cannot prune, so their domain is the whole candidate.
inline std::string domains_csv(const EvaluationResult& r) {
  std::string out = "index,sem_effective_domain_size,model_domain_size\n";
  for (const auto& row : r.comparison)
    out += std::to_string(row.index) + "," + std::to_string(row.sem_domain) + "," + std::to_string(row.model_domain) +
           "\n";
  return out;
}

inline nlohmann::ordered_json evaluation_to_json(const EvaluationResult& r) {
  nlohmann::ordered_json j;
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  auto summary = [](const EvalReport& e) {
    nlohmann::ordered_json s;
    s["accuracy"] = e.accuracy ? nlohmann::ordered_json(*e.accuracy) : nlohmann::ordered_json(nullptr);
    s["epsilon"] = e.epsilon;
    s["rows"] = e.rows();
    return s;
  };
  j["rt"] = {{"observational", summary(r.rt_observational)}, {"counterfactual", summary(r.rt_counterfactual)},
             {"mean_gap", r.mean_gap(&ComparisonRow::rt)}};
  j["lwl"] = {{"observational", summary(r.lwl_observational)}, {"counterfactual", summary(r.lwl_counterfactual)},
              {"mean_gap", r.mean_gap(&ComparisonRow::lwl)}};
  j["comparison"] = nlohmann::ordered_json::array();
  for (const auto& row : r.comparison) {
    nlohmann::ordered_json c;
    c["index"] = row.index;
    nlohmann::ordered_json changed = nlohmann::ordered_json::object();
    for (const auto& [name, value] : row.candidate.assignment) changed[name] = value_to_json(value);
    c["candidate"] = std::move(changed);
    c["sem"] = row.sem;
    c["rt"] = row.rt;
    c["lwl"] = row.lwl;
    c["sem_effective_domain_size"] = row.sem_domain;
    c["model_domain_size"] = row.model_domain;
    j["comparison"].push_back(std::move(c));
  }
  return j;
}

}  // namespace cfx

#endif  // CFX_EXPERIMENT_HPP
