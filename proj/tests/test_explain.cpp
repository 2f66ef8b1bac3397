// Candidate generation, counterfactual selection, reports and ML baselines.

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cfx/baselines.hpp"
#include "cfx/experiment.hpp"
#include "cfx/explain.hpp"
#include "cfx/sem.hpp"

using namespace cfx;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(CFX_DATA_DIR) + "/" + name, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kActionable{"model", "team size", "inspNumTest", "inspDuration"};

AttributeValue I(std::int64_t v) { return AttributeValue{v}; }

Instance i_repair() {
  Instance i;
  i.values = {{"model", I(7)}, {"team size", I(2)}, {"inspDuration", I(71)}, {"inspNumTest", I(42)},
              {"repairDuration", I(577)}};
  i.provenance = {"c1", 2};
  return i;
}

class Repair : public ::testing::Test {
 protected:
  Sem sem = parse_sem(slurp("repair.sem"));
  SituationTable table = sample(sem, 1000, 2020, "repairDuration");
  SemPredictor oracle{sem};
};

CounterfactualInstance cf_of(std::size_t index, std::set<std::string> domain, double distance, double x,
                             double predicted = 0) {
  CounterfactualInstance cf;
  cf.candidate.index = index;
  cf.effective_domain = std::move(domain);
  cf.distance = distance;
  cf.predicted = predicted;
  cf.values["x"] = AttributeValue{x};
  return cf;
}

std::vector<std::size_t> indices(const std::vector<CounterfactualInstance>& cfs) {
  std::vector<std::size_t> out;
  for (const auto& cf : cfs) out.push_back(cf.candidate.index);
  return out;
}

/// y = x exactly, with x spread over [0, 100).
SituationTable identity_table(std::size_t n, std::uint64_t seed) {
  return sample(parse_sem("x = N ; noise x ~ Uniform(0, 100)\ny = x\n"), n, seed, "y");
}

}  // namespace

// ---------------------------------------------------------------------------
// candidates

TEST_F(Repair, CandidateCountAndShape) {
  const auto cands = generate_candidates(table, kActionable, 1001, 1);
  ASSERT_EQ(cands.size(), 1001u);
  std::map<std::string, std::set<double>> observed;
  for (const auto& f : kActionable)
    for (const auto& v : table.column(f)) observed[f].insert(*as_number(v));
  for (std::size_t j = 0; j < cands.size(); ++j) {
    const auto& c = cands[j];
    EXPECT_EQ(c.index, j);
    ASSERT_FALSE(c.assignment.empty());
    EXPECT_EQ(c.source, j < 501 ? Candidate::Source::Empirical : Candidate::Source::Domain);
    for (const auto& [name, value] : c.assignment) {
      ASSERT_TRUE(std::count(kActionable.begin(), kActionable.end(), name));
      ASSERT_EQ(kind_of(value), ValueKind::Integer);
      const double x = *as_number(value);
      const Domain& d = table.domains.at(name);
      ASSERT_GE(x, d.lo);
      ASSERT_LE(x, d.hi);
      if (c.source == Candidate::Source::Empirical) {
        ASSERT_TRUE(observed[name].count(x));
      }
    }
  }
}

TEST_F(Repair, SubsetSizesAreUniform) {
  const auto cands = generate_candidates(table, kActionable, 1000, 3);
  std::map<std::size_t, int> sizes;
  std::map<std::string, int> members;
  for (const auto& c : cands) {
    ++sizes[c.assignment.size()];
    for (const auto& [name, v] : c.assignment) ++members[name];
  }
  for (std::size_t s = 1; s <= 4; ++s) EXPECT_NEAR(sizes[s] / 1000.0, 0.25, 0.05) << "size " << s;
  // Each feature is in a uniform subset of uniform size with probability (1+2+3+4)/(4*4).
  for (const auto& f : kActionable) EXPECT_NEAR(members[f] / 1000.0, 10.0 / 16.0, 0.05) << f;
}

TEST_F(Repair, CandidatesAreDeterministic) {
  EXPECT_EQ(generate_candidates(table, kActionable, 200, 9), generate_candidates(table, kActionable, 200, 9));
  EXPECT_NE(generate_candidates(table, kActionable, 200, 9), generate_candidates(table, kActionable, 200, 10));
}

TEST_F(Repair, SingleActionableFeature) {
  const auto cands = generate_candidates(table, {"team size"}, 4, 5);
  ASSERT_EQ(cands.size(), 4u);
  int empirical = 0;
  for (const auto& c : cands) {
    EXPECT_EQ(c.assignment.size(), 1u);
    EXPECT_TRUE(c.assignment.count("team size"));
    empirical += c.source == Candidate::Source::Empirical;
  }
  EXPECT_EQ(empirical, 2);
}

TEST_F(Repair, ActionableMustBeDescriptive) {
  EXPECT_THROW(generate_candidates(table, {}, 10, 1), ValidationError);
  EXPECT_THROW(generate_candidates(table, {"repairDuration"}, 10, 1), ValidationError);
  EXPECT_THROW(generate_candidates(table, {"model", "model"}, 10, 1), ValidationError);
  EXPECT_THROW(generate_candidates(table, {"model"}, 0, 1), ValidationError);
}

TEST_F(Repair, EnumerationCoversEverySubsetAndValue) {
  const std::vector<std::string> act{"model", "team size"};
  const auto all = enumerate_candidates(table, act);
  const double m = table.domains.at("model").width() + 1, t = table.domains.at("team size").width() + 1;
  EXPECT_EQ(all.size(), static_cast<std::size_t>((m + 1) * (t + 1) - 1));
  std::set<Assignment> distinct;
  for (const auto& c : all) distinct.insert(c.assignment);
  EXPECT_EQ(distinct.size(), all.size());
}

// ---------------------------------------------------------------------------
// prediction and pruning

TEST_F(Repair, SemPredictorAppliesTheWorkedExample) {
  const auto out = oracle.counterfactual(i_repair(), {{"team size", I(3)}}, "repairDuration");
  EXPECT_EQ(out.predicted, 592);
  EXPECT_EQ(out.values.at("inspNumTest"), MaybeValue(I(45)));
  EXPECT_EQ(out.effective_domain, (std::set<std::string>{"team size"}));
}

TEST_F(Repair, PruningDropsFeaturesWithoutAPath) {
  const auto out = oracle.counterfactual(i_repair(), {{"inspDuration", I(5)}, {"model", I(5)}}, "repairDuration");
  EXPECT_EQ(out.effective_domain, (std::set<std::string>{"model"}));
  EXPECT_EQ(out.predicted, 427);
  // The pruned feature keeps its SEM value.
  EXPECT_EQ(out.values.at("inspDuration"), MaybeValue(I(51)));

  const auto only = oracle.counterfactual(i_repair(), {{"inspDuration", I(5)}}, "repairDuration");
  EXPECT_TRUE(only.effective_domain.empty());
  EXPECT_EQ(only.predicted, 577);
}

TEST_F(Repair, AbductionFailureIsTaggedWithTheCandidate) {
  Instance bad = i_repair();
  bad.values["repairDuration"] = I(1);
  const auto cands = generate_candidates(table, kActionable, 3, 1);
  try {
    evaluate(bad, cands, oracle, "repairDuration");
    FAIL() << "expected a candidate error";
  } catch (const CandidateError& e) {
    EXPECT_TRUE(e.sem_inconsistency());
    EXPECT_EQ(e.index(), 0u);
  }
}

// ---------------------------------------------------------------------------
// selection

TEST(Selection, DesirabilityIsStrict) {
  EXPECT_TRUE(desirable(499.9, 500, Direction::Below));
  EXPECT_FALSE(desirable(500, 500, Direction::Below));
  EXPECT_FALSE(desirable(500, 500, Direction::Above));
  EXPECT_TRUE(desirable(501, 500, Direction::Above));
  std::vector<CounterfactualInstance> cfs{cf_of(0, {"x"}, 0, 1, 499), cf_of(1, {"x"}, 0, 2, 500),
                                          cf_of(2, {}, 0, 3, 10)};
  EXPECT_EQ(indices(filter_desirable(cfs, 500, Direction::Below)), (std::vector<std::size_t>{0}));
}

TEST(Selection, RoundRobinOverPartitions) {
  std::vector<CounterfactualInstance> cfs{
      cf_of(0, {"x"}, 0.1, 1),      cf_of(1, {"x"}, 0.2, 2),      cf_of(2, {"y"}, 0.05, 3),
      cf_of(3, {"x", "y"}, 0.01, 4), cf_of(4, {"x"}, 0.3, 1),  // same values as 0, farther
      cf_of(5, {"a"}, 0.9, 5),
  };
  EXPECT_EQ(indices(select_diverse(cfs, 4)), (std::vector<std::size_t>{5, 0, 2, 3}));
  EXPECT_EQ(indices(select_diverse(cfs, 10)), (std::vector<std::size_t>{5, 0, 2, 3, 1}));
  EXPECT_THROW(select_diverse(cfs, 0), ValidationError);
}

TEST(Selection, TiesBreakOnPredictionThenIndex) {
  std::vector<CounterfactualInstance> cfs{cf_of(2, {"x"}, 0.1, 1, 300), cf_of(1, {"x"}, 0.1, 2, 300),
                                          cf_of(0, {"x"}, 0.1, 3, 400), cf_of(3, {"x"}, 0.1, 4, 200)};
  EXPECT_EQ(indices(select_diverse(cfs, 4)), (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST_F(Repair, DistanceNormalizesByDomain) {
  const Domain& team = table.domains.at("team size");
  const Domain& num = table.domains.at("inspNumTest");
  ASSERT_EQ(team.lo, 1);
  ASSERT_EQ(team.hi, 3);
  const auto out = oracle.counterfactual(i_repair(), {{"team size", I(3)}}, "repairDuration");
  const auto names = table.plan.descriptive_names();
  const double d = distance(i_repair().values, out.values, table.domains, names);
  EXPECT_NEAR(d, 0.5 + 3.0 / (num.hi - num.lo), 1e-12);
  EXPECT_EQ(distance(i_repair().values, i_repair().values, table.domains, names), 0);
}

TEST(Selection, DistanceOnCategoriesAndMissingValues) {
  Domains domains;
  domains["c"].add(AttributeValue{std::string("a")});
  domains["c"].add(AttributeValue{std::string("b")});
  domains["n"].add(AttributeValue{0.0});
  domains["n"].add(AttributeValue{4.0});
  Values a{{"c", AttributeValue{std::string("a")}}, {"n", AttributeValue{1.0}}};
  Values b{{"c", AttributeValue{std::string("b")}}, {"n", std::nullopt}};
  const std::vector<std::string> names{"c", "n"};
  EXPECT_EQ(distance(a, b, domains, names), 2);
  b["n"] = AttributeValue{3.0};
  EXPECT_EQ(distance(a, b, domains, names), 1.5);
}

TEST_F(Repair, PipelineOnTheRepairInstance) {
  ExplainOptions o;
  o.actionable = kActionable;
  o.threshold = 500;
  o.k = 8;
  o.candidates = 1000;
  o.seed = 4;
  const auto set = explain(table, i_repair(), oracle, o);
  ASSERT_EQ(set.explanations.size(), 8u);
  std::set<Values> seen;
  for (const auto& cf : set.explanations) {
    EXPECT_LT(cf.predicted, 500);
    EXPECT_FALSE(cf.effective_domain.empty());
    EXPECT_FALSE(cf.effective_domain.count("inspDuration"));
    EXPECT_TRUE(seen.insert(cf.values).second);
  }
  // Smaller effective domains come first within the first round.
  EXPECT_LE(set.explanations.front().effective_domain.size(), set.explanations[1].effective_domain.size());
  EXPECT_EQ(render_json(explain(table, i_repair(), oracle, o)).dump(), render_json(set).dump());

  o.threshold = 0;
  EXPECT_TRUE(explain(table, i_repair(), oracle, o).explanations.empty());
}

// ---------------------------------------------------------------------------
// reports

TEST_F(Repair, RenderTextAndJson) {
  ExplanationSet set;
  set.given = i_repair();
  set.target = "repairDuration";
  set.threshold = 600;
  Candidate c{7, {{"team size", I(3)}, {"inspDuration", I(1)}}, Candidate::Source::Empirical};
  auto out = oracle.counterfactual(set.given, c.assignment, set.target);
  set.explanations.push_back({c, out.values, out.predicted, out.effective_domain, 0.25});
  EXPECT_EQ(render_text(set),
            "If team size had been set to 3, then repairDuration would have been 592 instead of 577.\n");
  const auto j = render_json(set);
  EXPECT_EQ(j["threshold"], 600);
  EXPECT_EQ(j["direction"], "below");
  EXPECT_EQ(j["explanations"][0]["changed"], nlohmann::ordered_json({{"team size", 3}}));
  EXPECT_EQ(j["explanations"][0]["predicted"], 592);
  EXPECT_EQ(j["explanations"][0]["distance"], 0.25);
  EXPECT_EQ(j["explanations"][0]["effective_domain"], nlohmann::ordered_json({"team size"}));
  EXPECT_EQ(render_plot_csv(set), "index,predicted,effective_domain_size\n1,592,1\n");

  set.explanations.clear();
  EXPECT_EQ(render_text(set),
            "No desirable counterfactual found: no candidate brings repairDuration below 600 (observed 577).\n");
}

TEST(Reports, SentenceJoinsSeveralChanges) {
  ExplanationSet set;
  set.given.values = {{"a", I(1)}, {"b", I(2)}, {"t", I(9)}};
  set.target = "t";
  CounterfactualInstance cf;
  cf.candidate.assignment = {{"a", I(3)}, {"b", AttributeValue{2.5}}};
  cf.effective_domain = {"a", "b"};
  cf.predicted = 4;
  set.explanations.push_back(cf);
  EXPECT_EQ(render_text(set), "If a had been set to 3 and b had been set to 2.5, then t would have been 4 instead of 9.\n");
}

// ---------------------------------------------------------------------------
// regression tree

TEST(RegressionTree, LearnsTheIdentity) {
  const auto train = identity_table(100, 1);
  const auto tree = train_rt(train);
  std::vector<double> xs;
  for (const auto& row : train.rows) xs.push_back(*row.number("x"));
  std::sort(xs.begin(), xs.end());
  double max_gap = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) max_gap = std::max(max_gap, xs[i] - xs[i - 1]);
  std::map<std::size_t, std::pair<double, double>> leaf_range;
  for (const auto& row : train.rows) {
    const double x = *row.number("x");
    auto [it, fresh] = leaf_range.try_emplace(tree.leaf_of(row.values), x, x);
    it->second.first = std::min(it->second.first, x);
    it->second.second = std::max(it->second.second, x);
  }
  for (const auto& row : identity_table(200, 2).rows) {
    const double q = *row.number("x");
    const auto [lo, hi] = leaf_range.at(tree.leaf_of(row.values));
    EXPECT_LE(std::fabs(tree.predict(row.values) - q), (hi - lo) + max_gap / 2 + 1e-9);
  }
}

TEST(RegressionTree, ConstantTargetIsOneLeaf) {
  const auto table = sample(parse_sem("x = N ; noise x ~ Uniform(0, 1)\ny = 7\n"), 50, 1, "y");
  const auto tree = train_rt(table);
  EXPECT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(tree.predict(table.rows[3].values), 7);
}

TEST(RegressionTree, LeavesRespectParameters) {
  const auto table = identity_table(300, 4);
  for (std::size_t min_leaf : {1, 2, 5, 17}) {
    const auto tree = train_rt(table, {min_leaf, 0});
    std::size_t total = 0;
    for (const auto& n : tree.nodes()) {
      if (n.feature >= 0) continue;
      EXPECT_GE(n.count, min_leaf);
      total += n.count;
    }
    EXPECT_EQ(total, table.rows.size());
  }
  EXPECT_LE(train_rt(table, {2, 1}).leaf_count(), 2u);
  EXPECT_LE(train_rt(table, {2, 3}).leaf_count(), 8u);
}

TEST(RegressionTree, TrainingRowsGetTheirLeafMean) {
  const Sem sem = parse_sem(slurp("repair.sem"));
  const auto table = sample(sem, 300, 6, "repairDuration");
  const auto tree = train_rt(table);
  std::map<std::size_t, std::pair<double, int>> sums;
  for (const auto& row : table.rows) {
    auto& s = sums[tree.leaf_of(row.values)];
    s.first += *row.number("repairDuration");
    ++s.second;
  }
  for (const auto& row : table.rows) {
    const auto& s = sums[tree.leaf_of(row.values)];
    EXPECT_NEAR(predict_model(tree, row), s.first / s.second, 1e-9);
  }
}

TEST(RegressionTree, Errors) {
  EXPECT_THROW(train_rt(identity_table(1, 1)), ValidationError);
  auto text = identity_table(10, 1);
  for (auto& row : text.rows) row.values["y"] = AttributeValue{std::string("label")};
  EXPECT_THROW(train_rt(text), ValidationError);
}

// ---------------------------------------------------------------------------
// locally weighted learning

TEST(Lwl, NearestRowWithKOne) {
  const auto table = identity_table(100, 8);
  const auto model = train_lwl(table, 1);
  for (const auto& row : table.rows) EXPECT_EQ(model.predict(row.values), *row.number("y"));
}

TEST(Lwl, ConstantTargetAndGlobalMean) {
  const auto constant = sample(parse_sem("x = N ; noise x ~ Uniform(0, 1)\ny = 3\n"), 40, 1, "y");
  EXPECT_EQ(train_lwl(constant, 18).predict(constant.rows[0].values), 3);

  const auto table = identity_table(60, 2);
  double mean = 0;
  for (const auto& row : table.rows) mean += *row.number("y");
  mean /= table.rows.size();
  const auto all = train_lwl(table, table.rows.size(), Kernel::Uniform);
  for (double q : {0.0, 50.0, 1000.0}) EXPECT_NEAR(all.predict({{"x", AttributeValue{q}}}), mean, 1e-9);
}

TEST(Lwl, LinearRankWeights) {
  // Rows at x = 0, 1, 2, 10 with y = x; query 0.1, k = 3 -> weights 3, 2, 1 on y = 0, 1, 2.
  SituationTable t;
  t.plan.descriptive = {SituationFeature::of_trace("x", "x")};
  t.plan.target = SituationFeature::of_trace("y", "y");
  for (double x : {0.0, 1.0, 2.0, 10.0}) {
    Instance i;
    i.values = {{"x", AttributeValue{x}}, {"y", AttributeValue{x}}};
    t.rows.push_back(i);
  }
  t.domains = compute_domains(t.rows, t.plan.feature_names());
  EXPECT_DOUBLE_EQ(train_lwl(t, 3).predict({{"x", AttributeValue{0.1}}}), (3 * 0 + 2 * 1 + 1 * 2) / 6.0);
  EXPECT_DOUBLE_EQ(train_lwl(t, 3, Kernel::Uniform).predict({{"x", AttributeValue{0.1}}}), 1.0);
}

TEST(Lwl, Errors) {
  const auto table = identity_table(5, 1);
  EXPECT_THROW(train_lwl(table, 6), ValidationError);
  EXPECT_THROW(train_lwl(table, 0), ValidationError);
  EXPECT_FALSE(parse_kernel("gaussian"));
}

TEST(Lwl, MedianImputation) {
  const auto table = identity_table(101, 3);
  const auto enc = FeatureEncoder::fit(table);
  std::vector<double> xs;
  for (const auto& row : table.rows) xs.push_back(*row.number("x"));
  std::nth_element(xs.begin(), xs.begin() + 50, xs.end());
  EXPECT_EQ(enc.encode({{"x", std::nullopt}})[0], xs[50]);
  EXPECT_EQ(enc.encode({})[0], xs[50]);
}

// ---------------------------------------------------------------------------
// accuracy

TEST(Accuracy, ToleranceBoundary) {
  EXPECT_TRUE(within_tolerance(105, 100, 0.05));
  EXPECT_FALSE(within_tolerance(105.01, 100, 0.05));
  EXPECT_TRUE(within_tolerance(0.05, 0, 0.05));
  const std::vector<double> p{1, 2, 3, 4}, t{1, 2, 30, 40};
  const auto r = score(p, t, 0.05);
  EXPECT_EQ(*r.accuracy, 0.5);
  EXPECT_EQ(r.residuals, (std::vector<double>{0, 0, -27, -36}));
  EXPECT_FALSE(score({}, {}, 0.05).accuracy);
}

TEST_F(Repair, SemAgainstItselfIsExact) {
  const auto cands = generate_candidates(table, kActionable, 50, 1);
  std::vector<Instance> rows(table.rows.begin(), table.rows.begin() + 20);
  EXPECT_EQ(*counterfactual_accuracy(oracle, sem, rows, cands, 0.05, "repairDuration").accuracy, 1.0);
  EXPECT_FALSE(counterfactual_accuracy(oracle, sem, rows, {}, 0.05, "repairDuration").accuracy);
}

TEST_F(Repair, ModelsTreatCandidatesAsNewObservations) {
  const ModelPredictor<RegressionTree> rt(train_rt(table), "rt");
  const auto none = rt.counterfactual(i_repair(), {}, "repairDuration");
  EXPECT_EQ(none.predicted, predict_model(rt.model(), i_repair()));
  const auto out = rt.counterfactual(i_repair(), {{"team size", I(3)}, {"inspDuration", I(5)}}, "repairDuration");
  EXPECT_EQ(out.values.at("inspNumTest"), MaybeValue(I(42)));
  EXPECT_EQ(out.effective_domain, (std::set<std::string>{"inspDuration", "team size"}));
}

TEST(Accuracy, ObservationalBeatsCounterfactualAcrossSeeds) {
  const Sem sem = parse_sem(slurp("repair.sem"));
  EvaluationSettings s;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto table = sample(sem, 1000, seed, "repairDuration");
    auto [train, test] = split_table(table, 0.8, 18, seed);
    const auto rt = ModelPredictor<RegressionTree>(train_rt(train), "rt");
    const auto lwl = ModelPredictor<LwlModel>(train_lwl(train, 18), "lwl");
    const std::vector<Instance> rows(test.rows.begin(), test.rows.begin() + 100);
    const auto cands = generate_candidates(table, kActionable, 100, seed);
    for (double eps : {0.02, 0.05, 0.1}) {
      const double rt_obs = *observational_accuracy(rt.model(), test, eps).accuracy;
      const double lwl_obs = *observational_accuracy(lwl.model(), test, eps).accuracy;
      const double rt_cf = *counterfactual_accuracy(rt, sem, rows, cands, eps, "repairDuration").accuracy;
      const double lwl_cf = *counterfactual_accuracy(lwl, sem, rows, cands, eps, "repairDuration").accuracy;
      EXPECT_GE(rt_obs, rt_cf) << "seed " << seed << " eps " << eps;
      EXPECT_GE(lwl_obs, lwl_cf) << "seed " << seed << " eps " << eps;
      if (eps == 0.05) {
        EXPECT_GT(rt_obs, 0.7) << "seed " << seed;
        EXPECT_GT(lwl_obs, 0.7) << "seed " << seed;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// experiment

TEST_F(Repair, EvaluationSeparatesModelsFromTheSem) {
  ExplainOptions o;
  o.actionable = kActionable;
  o.threshold = 500;
  o.seed = 1;
  const auto r = run_evaluation(table, sem, i_repair(), o, EvaluationSettings{}, 1);
  EXPECT_EQ(r.train_rows, 800u);
  EXPECT_EQ(r.test_rows, 200u);
  ASSERT_EQ(r.comparison.size(), 8u);
  std::size_t rt_differs = 0, lwl_differs = 0;
  for (const auto& row : r.comparison) {
    rt_differs += row.rt != row.sem;
    lwl_differs += row.lwl != row.sem;
    EXPECT_LE(row.sem_domain, row.model_domain);
  }
  EXPECT_GE(rt_differs, 4u);
  EXPECT_GE(lwl_differs, 4u);
  EXPECT_GT(r.mean_gap(&ComparisonRow::rt), 0);
  const std::string csv = comparison_csv(r, 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "predictor,observational_accuracy,counterfactual_accuracy,epsilon,seed");
}

TEST_F(Repair, SemAsBaselineHasNoGap) {
  ExplainOptions o;
  o.actionable = kActionable;
  o.threshold = 500;
  o.seed = 2;
  const auto set = explain(table, i_repair(), oracle, o);
  ASSERT_FALSE(set.explanations.empty());
  for (const auto& cf : set.explanations)
    EXPECT_EQ(oracle.counterfactual(i_repair(), cf.candidate.assignment, "repairDuration").predicted, cf.predicted);
}

TEST_F(Repair, EvaluationNeedsEnoughRows) {
  ExplainOptions o;
  o.actionable = kActionable;
  o.threshold = 500;
  std::vector<std::size_t> five{0, 1, 2, 3, 4};
  try {
    run_evaluation(table.subset(five), sem, i_repair(), o, EvaluationSettings{}, 1);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient rows"), std::string::npos);
  }
}
