// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfx/cli.hpp"

using namespace cfx;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CFX_DATA_DIR;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

AttributeValue I(std::int64_t v) { return AttributeValue{v}; }

Instance i_repair() {
  Instance i;
  i.values = {{"model", I(7)}, {"team size", I(2)}, {"inspDuration", I(71)}, {"inspNumTest", I(42)},
              {"repairDuration", I(577)}};
  return i;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

int failures = 0;

template <class F>
void criterion(int number, const std::string& name, double budget_s, F body) {
  Verdict o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double took = seconds_since(t0);
  if (budget_s > 0 && took >= budget_s) o.fail("took " + format_number(took) + " s, budget " + format_number(budget_s) + " s");
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " " << number << " " << name;
  if (!o.detail.empty()) std::cout << ": " << o.detail;
  std::cout << " [" << format_number(std::round(took * 1000) / 1000) << " s]\n";
}

// ---------------------------------------------------------------------------
// Independent oracle for criterion 4, written against the desk SEM below.
//
//   a = N ~ DiscreteUniform(1, 4)
//   b = N ~ DiscreteUniform(0, 1)
//   c = b + N,  N ~ DiscreteUniform(0, 2)
//   u = N ~ DiscreteUniform(1, 3)          (no path to t)
//   t = 10a - 3b + 2c + N,  N ~ Uniform(0, 1)

const char* kDeskSem = R"(a = N ; noise a ~ DiscreteUniform(1, 4) ; integer
b = N ; noise b ~ DiscreteUniform(0, 1) ; integer
c = b + N ; noise c ~ DiscreteUniform(0, 2) ; integer
u = N ; noise u ~ DiscreteUniform(1, 3) ; integer
t = 10 * a - 3 * b + 2 * c + N ; noise t ~ Uniform(0, 1)
)";


struct OracleCf {
  std::size_t index;
  std::map<std::string, double> values;
  std::vector<std::string> domain;  // sorted
  double predicted;
  double distance;
};

std::vector<std::size_t> brute_force(const std::map<std::string, double>& given,
                                     const std::vector<std::map<std::string, double>>& candidates,
                                     const std::map<std::string, std::pair<double, double>>& ranges, double threshold,
                                     std::size_t k) {
  const double na = given.at("a"), nb = given.at("b"), nc = given.at("c") - given.at("b"), nu = given.at("u");
  const double nt = given.at("t") - (10 * given.at("a") - 3 * given.at("b") + 2 * given.at("c"));
  std::vector<OracleCf> all;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto& cand = candidates[j];
    // Pruning: only a and c reach t.
    std::map<std::string, double> eff;
    for (const auto& [f, x] : cand)
      if (f == "a" || f == "c") eff[f] = x;
    auto pick_eff = [&](const char* f, double natural) { return eff.count(f) ? eff.at(f) : natural; };
    OracleCf cf;
    cf.index = j;
    const double a = pick_eff("a", na);
    const double b = nb;
    const double c = pick_eff("c", b + nc);
    const double u = nu;
    const double t = 10 * a - 3 * b + 2 * c + nt;
    cf.values = {{"a", a}, {"b", b}, {"c", c}, {"u", u}, {"t", t}};
    for (const auto& [f, x] : eff) cf.domain.push_back(f);
    cf.predicted = t;
    cf.distance = 0;
    for (const char* f : {"a", "b", "c", "u"}) {
      const auto [lo, hi] = ranges.at(f);
      const double diff = std::fabs(cf.values[f] - given.at(f));
      if (hi > lo) cf.distance += diff / (hi - lo);
    }
    if (cf.domain.empty() || !(t < threshold)) continue;
    all.push_back(cf);
  }
  std::sort(all.begin(), all.end(), [](const OracleCf& x, const OracleCf& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (x.predicted != y.predicted) return x.predicted < y.predicted;
    return x.index < y.index;
  });
  std::vector<OracleCf> unique;
  for (const auto& cf : all)
    if (std::none_of(unique.begin(), unique.end(), [&](const OracleCf& u) { return u.values == cf.values; }))
      unique.push_back(cf);
  std::map<std::vector<std::string>, std::vector<OracleCf>> groups;
  for (const auto& cf : unique) groups[cf.domain].push_back(cf);
  std::vector<std::vector<std::string>> keys;
  for (const auto& [key, g] : groups) keys.push_back(key);
  std::stable_sort(keys.begin(), keys.end(), [](const auto& x, const auto& y) { return x.size() < y.size(); });
  std::vector<std::size_t> out;
  for (std::size_t round = 0; out.size() < k; ++round) {
    bool any = false;
    for (const auto& key : keys) {
      const auto& g = groups[key];
      if (round < g.size() && out.size() < k) {
        out.push_back(g[round].index);
        any = true;
      }
    }
    if (!any) break;
  }
  return out;
}

}  // namespace

int main() {
  const Sem repair = parse_sem(slurp(kData / "repair.sem"));
  const Sem nonlinear = parse_sem(slurp(kData / "nonlinear.sem"));

  criterion(1, "worked example (abduction and {team size: 3})", 1.0, [&](Verdict& o) {
    const auto cf = abduce(repair, i_repair());
    auto near = [&](const std::string& what, double got, double want) {
      if (std::fabs(got - want) > 1e-9) o.fail(what + " = " + format_number(got) + ", expected " + format_number(want));
    };
    near("noise inspDuration", *cf.noise[repair.require("inspDuration")], 1);
    near("noise inspNumTest", *cf.noise[repair.require("inspNumTest")], 1);
    near("noise repairDuration", *cf.noise[repair.require("repairDuration")], 17);
    const auto acted = intervene(cf, {{"team size", I(3)}});
    near("inspNumTest", predict(acted, "inspNumTest"), 45);
    near("repairDuration", predict(acted, "repairDuration"), 592);
    if (o.pass) o.detail = "noise (1, 1, 17), inspNumTest 45, repairDuration 592";
  });

  criterion(2, "abduction round trip on 10000 rows of two SEMs", 10.0, [&](Verdict& o) {
    double worst = 0;
    for (const Sem* sem : {&repair, &nonlinear}) {
      const auto table = sample(*sem, 10000, 2);
      for (const auto& row : table.rows) {
        const auto values = evaluate_all(abduce(*sem, row));
        for (std::size_t f = 0; f < sem->size(); ++f)
          worst = std::max(worst, std::fabs(values[f] - *row.number(sem->features()[f])));
      }
    }
    if (worst > 1e-9) o.fail("max deviation " + format_number(worst));
    else o.detail = "max deviation " + format_number(worst);
  });

  criterion(3, "pruning soundness over 1000 candidates touching inspDuration", 0, [&](Verdict& o) {
    const auto table = sample(repair, 1000, 3, "repairDuration");
    const std::vector<std::string> actionable{"model", "team size", "inspNumTest", "inspDuration"};
    SemPredictor predictor(repair);
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; checked < 1000; ++seed) {
      for (const auto& cand : generate_candidates(table, actionable, 1000, seed)) {
        if (!cand.assignment.count("inspDuration") || checked == 1000) continue;
        const Instance& row = table.rows[checked % table.rows.size()];
        Assignment without = cand.assignment;
        without.erase("inspDuration");
        const auto out = predictor.counterfactual(row, cand.assignment, "repairDuration");
        const double reference = predict(intervene(abduce(repair, row), without), "repairDuration");
        const double unpruned = predict(intervene(abduce(repair, row), cand.assignment), "repairDuration");
        if (out.predicted != reference || unpruned != reference)
          o.fail("candidate " + std::to_string(cand.index) + " predicts " + format_number(out.predicted) +
                 " instead of " + format_number(reference));
        if (out.effective_domain.count("inspDuration"))
          o.fail("candidate " + std::to_string(cand.index) + " keeps inspDuration");
        ++checked;
      }
    }
    if (o.pass) o.detail = std::to_string(checked) + " candidates";
  });

  criterion(4, "exhaustive selection equals brute-force oracle", 5.0, [&](Verdict& o) {
    const Sem desk = parse_sem(kDeskSem);
    const auto table = sample(desk, 300, 4, "t");
    const std::vector<std::string> actionable{"a", "c", "u"};
    std::map<std::string, std::pair<double, double>> ranges;
    for (const char* f : {"a", "b", "c", "u"}) ranges[f] = {table.domains.at(f).lo, table.domains.at(f).hi};
    for (const char* f : {"a", "c", "u"})
      if (ranges[f].second - ranges[f].first + 1 > 4) o.fail(std::string("domain of ") + f + " exceeds 4 values");
    const auto candidates = enumerate_candidates(table, actionable);
    std::vector<std::map<std::string, double>> plain;
    for (const auto& c : candidates) {
      auto& m = plain.emplace_back();
      for (const auto& [f, v] : c.assignment) m[f] = *as_number(v);
    }
    SemPredictor predictor(desk);
    std::size_t cases = 0, selected = 0;
    for (std::size_t r = 0; r < 40; ++r) {
      const Instance& given = table.rows[r];
      std::map<std::string, double> g;
      for (const char* f : {"a", "b", "c", "u", "t"}) g[f] = *given.number(f);
      for (double threshold : {g["t"] - 5, g["t"] - 15, g["t"]}) {
        for (std::size_t k : {1, 4, 8, 200}) {
          ExplainOptions options;
          options.actionable = actionable;
          options.threshold = threshold;
          options.k = k;
          const auto set = explain_candidates(table, given, candidates, predictor, options);
          std::vector<std::size_t> got;
          for (const auto& cf : set.explanations) got.push_back(cf.candidate.index);
          const auto want = brute_force(g, plain, ranges, threshold, k);
          if (got != want) o.fail("row " + std::to_string(r) + ", k " + std::to_string(k) + ": selection differs");
          ++cases;
          selected += got.size();
        }
      }
    }
    if (o.pass)
      o.detail = std::to_string(candidates.size()) + " candidates, " + std::to_string(cases) + " cases, " +
                 std::to_string(selected) + " selections";
  });

  criterion(5, "observational > counterfactual accuracy and Fig. 4 gap, RT and LWL, 5 seeds", 60.0, [&](Verdict& o) {
    const LogTemplate tmpl = LogTemplate::repair();
    ExplainOptions options;
    options.actionable = {"model", "team size", "inspNumTest", "inspDuration"};
    options.threshold = 500;
    options.k = 8;
    options.candidates = 1000;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto table = read_back(synthesize_log(repair, tmpl, 1000, seed), tmpl, repair, "repairDuration");
      options.seed = derive_seed(seed, stream::candidates);
      const auto r = run_evaluation(table, repair, i_repair(), options, EvaluationSettings{}, seed);
      const double rt_obs = *r.rt_observational.accuracy, rt_cf = *r.rt_counterfactual.accuracy;
      const double lwl_obs = *r.lwl_observational.accuracy, lwl_cf = *r.lwl_counterfactual.accuracy;
      const double rt_gap = r.mean_gap(&ComparisonRow::rt), lwl_gap = r.mean_gap(&ComparisonRow::lwl);
      const std::string s = "seed " + std::to_string(seed);
      if (!(rt_obs > rt_cf)) o.fail(s + ": RT " + format_number(rt_obs) + " <= " + format_number(rt_cf));
      if (!(lwl_obs > lwl_cf)) o.fail(s + ": LWL " + format_number(lwl_obs) + " <= " + format_number(lwl_cf));
      if (r.comparison.size() != 8) o.fail(s + ": " + std::to_string(r.comparison.size()) + " explanations");
      if (!(rt_gap > 0) || !(lwl_gap > 0)) o.fail(s + ": zero gap");
      detail << (seed > 1 ? "; " : "") << "RT " << format_number(rt_obs) << "/" << format_number(rt_cf) << " LWL "
             << format_number(lwl_obs) << "/" << format_number(lwl_cf);
    }
    if (o.pass) o.detail = "obs/cf " + detail.str();
  });

  criterion(6, "synthesis round trip over 1000 rows", 5.0, [&](Verdict& o) {
    const LogTemplate tmpl = LogTemplate::repair();
    const auto result = synthesize(repair, tmpl, 1000, 6, "repairDuration");
    const auto table = read_back(result.log, tmpl, repair, "repairDuration");
    if (table.rows.size() != result.truth.rows.size()) return o.fail("row count differs");
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      for (const auto& [name, value] : result.truth.rows[r].values)
        if (table.rows[r].values.at(name) != value) return o.fail("row " + std::to_string(r) + " " + name);
    o.detail = "1000 rows identical";
  });

  criterion(7, "cmd_explain JSON is byte-identical across runs", 0, [&](Verdict& o) {
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = fs::temp_directory_path() / ("cfx_acceptance_" + std::to_string(run));
      fs::remove_all(dir);
      Config config = Config::load(kData / "repair.conf");
      config.set("out", dir.string());
      cli::Run r(std::move(config));
      std::ostringstream out, err;
      const int code = cli::cmd_explain(r, {out, err});
      if (code != cli::Ok) o.fail("exit code " + std::to_string(code));
      outputs.push_back(slurp(dir / "explanations.json"));
    }
    if (outputs[0].empty() || outputs[0] != outputs[1]) o.fail("reports differ");
    else o.detail = std::to_string(outputs[0].size()) + " bytes";
  });

  std::cout << (failures ? std::to_string(failures) + " criteria failed\n" : std::string("all criteria passed\n"));
  return failures ? 1 : 0;
}
