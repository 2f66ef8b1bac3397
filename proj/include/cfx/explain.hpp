#ifndef CFX_EXPLAIN_HPP
#define CFX_EXPLAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfx/error.hpp"
#include "cfx/rng.hpp"
#include "cfx/sem.hpp"
#include "cfx/situations.hpp"
#include "cfx/value.hpp"

namespace cfx {

/// A partial assignment to actionable features.
struct Candidate {
  enum class Source { Empirical, Domain, Enumerated };

  std::size_t index = 0;
  Assignment assignment;
  Source source = Source::Empirical;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

enum class Direction { Below, Above };

inline std::string_view to_string(Direction d) { return d == Direction::Below ? "below" : "above"; }

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "below") return Direction::Below;
  if (s == "above") return Direction::Above;
  return std::nullopt;
}

/// What a predictor says about one candidate applied to one instance.
struct Outcome {
  /// Full feature mapping after the candidate is applied.
  Values values;
  double predicted = 0.0;
  /// Candidate features that can influence the target.
  std::set<std::string> effective_domain;
};

/// Predicts the target of `given` under a candidate assignment.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual Outcome counterfactual(const Instance& given, const Assignment& candidate,
                                 const std::string& target) const = 0;
};

namespace detail {

/// Integral results stay integers when the observed value was one.
inline AttributeValue like(const MaybeValue& observed, double x) {
  if (observed && kind_of(*observed) == ValueKind::Integer && x == std::floor(x) && std::fabs(x) < 9e15)
    return static_cast<std::int64_t>(x);
  if (observed && kind_of(*observed) == ValueKind::Timestamp) return from_number(x, ValueKind::Timestamp);
  return x;
}

}  // namespace detail

/// Abduction, action, prediction. Candidate features without a directed path
/// to the target are pruned before the intervention.
class SemPredictor final : public Predictor {
 public:
  explicit SemPredictor(Sem sem) : sem_(std::move(sem)) {}

  std::string name() const override { return "sem"; }
  const Sem& sem() const { return sem_; }

  Outcome counterfactual(const Instance& given, const Assignment& candidate,
                         const std::string& target) const override {
    const std::size_t t = sem_.require(target);
    Assignment pruned;
    Outcome out;
    for (const auto& [name, value] : candidate) {
      if (!sem_.reaches(sem_.require(name), t)) continue;
      pruned.emplace(name, value);
      out.effective_domain.insert(name);
    }
    CounterfactualSem cf = intervene(abduce(sem_, given), pruned);
    const std::vector<double> values = evaluate_all(cf);
    out.values = given.values;
    for (std::size_t i = 0; i < sem_.size(); ++i) {
      const auto& name = sem_.features()[i];
      auto it = given.values.find(name);
      out.values[name] = detail::like(it == given.values.end() ? MaybeValue{} : it->second, values[i]);
    }
    out.predicted = values[t];
    return out;
  }

 private:
  Sem sem_;
};

/// A candidate after prediction, with its distance to the given instance.
struct CounterfactualInstance {
  Candidate candidate;
  Values values;
  double predicted = 0.0;
  std::set<std::string> effective_domain;
  double distance = 0.0;
};

struct ExplanationSet {
  Instance given;
  std::string target;
  double threshold = 0.0;
  Direction direction = Direction::Below;
  std::vector<CounterfactualInstance> explanations;
};

// ---------------------------------------------------------------------------
// Step 1: candidates

namespace detail {

inline void check_actionable(const SituationTable& table, std::span<const std::string> actionable) {
  if (actionable.empty()) throw ValidationError("actionable feature set is empty");
  const auto names = table.plan.descriptive_names();
  std::set<std::string> seen;
  for (const auto& f : actionable) {
    if (std::find(names.begin(), names.end(), f) == names.end())
      throw ValidationError("actionable feature '" + f + "' is not a descriptive feature");
    if (!seen.insert(f).second) throw ValidationError("actionable feature '" + f + "' listed twice");
    if (table.domains.at(f).empty()) throw ValidationError("actionable feature '" + f + "' has an empty domain");
  }
}

inline AttributeValue draw_from_domain(const Domain& d, Rng& rng) {
  switch (d.kind) {
    case ValueKind::Text: {
      auto it = d.categories.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng.index(d.categories.size())));
      return *it;
    }
    case ValueKind::Integer:
      return rng.uniform_int(static_cast<std::int64_t>(std::ceil(d.lo)), static_cast<std::int64_t>(std::floor(d.hi)));
    case ValueKind::Timestamp:
      return Timestamp{rng.uniform_int(static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi))};
    case ValueKind::Real: return rng.uniform(d.lo, d.hi);
  }
  return 0.0;
}

}  // namespace detail

/// `count` candidates. Each picks a subset size uniformly from 1..|actionable|,
/// then a uniform subset of that size. The first ceil(count/2) draw values from
/// the table's empirical column distribution, the rest uniformly from the
/// feature domain (integers stay integers).
inline std::vector<Candidate> generate_candidates(const SituationTable& table,
                                                  const std::vector<std::string>& actionable, std::size_t count,
                                                  std::uint64_t seed) {
  detail::check_actionable(table, actionable);
  if (count == 0) throw ValidationError("candidate count must be at least 1");

  std::map<std::string, std::vector<AttributeValue>> columns;
  for (const auto& f : actionable) columns[f] = table.column(f);

  Rng rng(seed);
  const std::size_t empirical = (count + 1) / 2;
  std::vector<Candidate> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Candidate c;
    c.index = j;
    c.source = j < empirical ? Candidate::Source::Empirical : Candidate::Source::Domain;
    std::vector<std::string> pool = actionable;
    const std::size_t size = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(pool.size())));
    for (std::size_t s = 0; s < size; ++s) {
      std::size_t pick = s + rng.index(pool.size() - s);
      std::swap(pool[s], pool[pick]);
    }
    for (std::size_t s = 0; s < size; ++s) {
      const auto& f = pool[s];
      if (c.source == Candidate::Source::Empirical) {
        const auto& col = columns[f];
        c.assignment.emplace(f, col[rng.index(col.size())]);
      } else {
        c.assignment.emplace(f, detail::draw_from_domain(table.domains.at(f), rng));
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Every non-empty subset of `actionable` with every domain value (integer and
/// categorical domains only). Subsets in bitmask order; within a subset the
/// first feature's value varies fastest.
inline std::vector<Candidate> enumerate_candidates(const SituationTable& table,
                                                   const std::vector<std::string>& actionable,
                                                   std::size_t limit = 1'000'000) {
  detail::check_actionable(table, actionable);
  if (actionable.size() > 20) throw ValidationError("too many actionable features to enumerate");
  std::vector<std::vector<AttributeValue>> values;
  for (const auto& f : actionable) {
    const Domain& d = table.domains.at(f);
    std::vector<AttributeValue> vs;
    if (d.kind == ValueKind::Text) {
      vs.assign(d.categories.begin(), d.categories.end());
    } else if (d.kind == ValueKind::Integer) {
      for (auto v = static_cast<std::int64_t>(d.lo); v <= static_cast<std::int64_t>(d.hi); ++v) vs.emplace_back(v);
    } else {
      throw ValidationError("cannot enumerate the continuous domain of '" + f + "'");
    }
    values.push_back(std::move(vs));
  }
  std::vector<Candidate> out;
  const std::size_t m = actionable.size();
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) members.push_back(i);
    std::vector<std::size_t> digit(members.size(), 0);
    for (;;) {
      Candidate c;
      c.index = out.size();
      c.source = Candidate::Source::Enumerated;
      for (std::size_t k = 0; k < members.size(); ++k)
        c.assignment.emplace(actionable[members[k]], values[members[k]][digit[k]]);
      out.push_back(std::move(c));
      if (out.size() > limit) throw ValidationError("candidate enumeration exceeds the limit");
      std::size_t k = 0;
      while (k < members.size() && ++digit[k] == values[members[k]].size()) digit[k++] = 0;
      if (k == members.size()) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step 2: prediction

inline std::vector<CounterfactualInstance> evaluate(const Instance& given, std::span<const Candidate> candidates,
                                                    const Predictor& predictor, const std::string& target) {
  std::vector<CounterfactualInstance> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    Outcome o;
    try {
      o = predictor.counterfactual(given, c.assignment, target);
    } catch (const AbductionError& e) {
      throw CandidateError(c.index, e.what(), true);
    } catch (const Error& e) {
      throw CandidateError(c.index, e.what(), false);
    }
    out.push_back({c, std::move(o.values), o.predicted, std::move(o.effective_domain), 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step 3: selection

inline bool desirable(double predicted, double threshold, Direction direction) {
  return direction == Direction::Below ? predicted < threshold : predicted > threshold;
}

/// Keeps strictly desirable predictions with a non-empty effective domain.
inline std::vector<CounterfactualInstance> filter_desirable(std::vector<CounterfactualInstance> cfs, double threshold,
                                                            Direction direction) {
  std::erase_if(cfs, [&](const CounterfactualInstance& cf) {
    return cf.effective_domain.empty() || !desirable(cf.predicted, threshold, direction);
  });
  return cfs;
}

/// L1 over min-max normalized `features`; categorical mismatch counts 1.
inline double distance(const Values& given, const Values& other, const Domains& domains,
                       std::span<const std::string> features) {
  double sum = 0.0;
  for (const auto& f : features) {
    auto a = given.find(f);
    auto b = other.find(f);
    const bool has_a = a != given.end() && a->second;
    const bool has_b = b != other.end() && b->second;
    if (!has_a || !has_b) {
      sum += has_a == has_b ? 0.0 : 1.0;
      continue;
    }
    const Domain& d = domains.at(f);
    auto x = as_number(*a->second);
    auto y = as_number(*b->second);
    if (d.categorical() || !x || !y) {
      sum += *a->second == *b->second ? 0.0 : 1.0;
      continue;
    }
    // |x - y| / width rather than a difference of normalized values: one
    // rounding per term keeps equal steps bit-identical, so ties stay ties.
    const double w = d.width();
    if (w > 0.0) sum += std::fabs(*x - *y) / w;
  }
  return sum;
}

inline double distance(const Instance& given, const CounterfactualInstance& cf, const Domains& domains,
                       std::span<const std::string> features) {
  return distance(given.values, cf.values, domains, features);
}

inline void assign_distances(const Instance& given, std::vector<CounterfactualInstance>& cfs, const Domains& domains,
                             std::span<const std::string> features) {
  for (auto& cf : cfs) cf.distance = distance(given, cf, domains, features);
}

namespace detail {

inline bool nearer(const CounterfactualInstance& a, const CounterfactualInstance& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.predicted != b.predicted) return a.predicted < b.predicted;
  return a.candidate.index < b.candidate.index;
}

/// Smaller domains first, then lexicographic by feature names.
inline bool partition_before(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Partitions by effective domain, sorts each partition by distance, and takes
/// one member per partition per round (smaller domains first) until `k` are
/// collected. Identical counterfactual instances are kept once (the nearest).
inline std::vector<CounterfactualInstance> select_diverse(std::vector<CounterfactualInstance> cfs, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  std::sort(cfs.begin(), cfs.end(), detail::nearer);

  std::set<Values> seen;
  std::map<std::set<std::string>, std::vector<CounterfactualInstance>, decltype(&detail::partition_before)> parts(
      &detail::partition_before);
  for (auto& cf : cfs) {
    if (!seen.insert(cf.values).second) continue;
    parts[cf.effective_domain].push_back(std::move(cf));
  }

  std::vector<CounterfactualInstance> out;
  for (std::size_t round = 0; out.size() < k; ++round) {
    bool any = false;
    for (auto& [domain, members] : parts) {
      if (round >= members.size()) continue;
      any = true;
      out.push_back(members[round]);
      if (out.size() == k) break;
    }
    if (!any) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

struct ExplainOptions {
  std::vector<std::string> actionable;
  double threshold = 0.0;
  Direction direction = Direction::Below;
  std::size_t k = 8;
  std::size_t candidates = 1000;
  std::uint64_t seed = 0;
};

/// Candidates scored against `given`, before filtering and selection.
inline std::vector<CounterfactualInstance> score_candidates(const SituationTable& table, const Instance& given,
                                                            std::span<const Candidate> candidates,
                                                            const Predictor& predictor) {
  auto cfs = evaluate(given, candidates, predictor, table.plan.target.name);
  const auto features = table.plan.descriptive_names();
  assign_distances(given, cfs, table.domains, features);
  return cfs;
}

/// Selection over an explicit candidate list.
inline ExplanationSet explain_candidates(const SituationTable& table, const Instance& given,
                                         std::span<const Candidate> candidates, const Predictor& predictor,
                                         const ExplainOptions& options) {
  auto cfs = score_candidates(table, given, candidates, predictor);
  cfs = filter_desirable(std::move(cfs), options.threshold, options.direction);
  ExplanationSet set;
  set.given = given;
  set.target = table.plan.target.name;
  set.threshold = options.threshold;
  set.direction = options.direction;
  set.explanations = select_diverse(std::move(cfs), options.k);
  return set;
}

/// generate -> evaluate -> filter -> select.
inline ExplanationSet explain(const SituationTable& table, const Instance& given, const Predictor& predictor,
                              const ExplainOptions& options) {
  const auto candidates = generate_candidates(table, options.actionable, options.candidates, options.seed);
  return explain_candidates(table, given, candidates, predictor, options);
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::string value_text(const AttributeValue& v) {
  if (auto x = as_number(v); x && kind_of(v) != ValueKind::Timestamp) return format_number(*x);
  return to_text(v);
}

}  // namespace detail

/// One sentence per explanation; a single line when the set is empty.
inline std::string render_text(const ExplanationSet& set) {
  auto observed = set.given.number(set.target);
  const std::string observed_text = observed ? format_number(*observed) : std::string("unknown");
  if (set.explanations.empty()) {
    return "No desirable counterfactual found: no candidate brings " + set.target + " " +
           std::string(to_string(set.direction)) + " " + format_number(set.threshold) + " (observed " + observed_text +
           ").\n";
  }
  std::string out;
  for (const auto& cf : set.explanations) {
    std::string clause;
    bool first = true;
    for (const auto& [name, value] : cf.candidate.assignment) {
      if (!cf.effective_domain.count(name)) continue;
      clause += (first ? "If " : " and ") + name + " had been set to " + detail::value_text(value);
      first = false;
    }
    out += clause + ", then " + set.target + " would have been " + format_number(cf.predicted) + " instead of " +
           observed_text + ".\n";
  }
  return out;
}

inline nlohmann::ordered_json render_json(const ExplanationSet& set) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json given = nlohmann::ordered_json::object();
  for (const auto& [name, value] : set.given.values) given[name] = value_to_json(value);
  j["given"] = std::move(given);
  j["target"] = set.target;
  if (auto observed = set.given.number(set.target)) j["observed"] = *observed;
  j["threshold"] = set.threshold;
  j["direction"] = std::string(to_string(set.direction));
  j["explanations"] = nlohmann::ordered_json::array();
  for (const auto& cf : set.explanations) {
    nlohmann::ordered_json e;
    nlohmann::ordered_json changed = nlohmann::ordered_json::object();
    for (const auto& [name, value] : cf.candidate.assignment)
      if (cf.effective_domain.count(name)) changed[name] = value_to_json(value);
    e["changed"] = std::move(changed);
    e["predicted"] = cf.predicted;
    e["distance"] = cf.distance;
    e["effective_domain"] = cf.effective_domain;
    e["candidate"] = cf.candidate.index;
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (const auto& [name, value] : cf.values) values[name] = value_to_json(value);
    e["values"] = std::move(values);
    j["explanations"].push_back(std::move(e));
  }
  return j;
}

/// Plot data: index, predicted target, effective-domain size.
inline std::string render_plot_csv(const ExplanationSet& set) {
  std::string out = "index,predicted,effective_domain_size\n";
  for (std::size_t i = 0; i < set.explanations.size(); ++i) {
    const auto& cf = set.explanations[i];
    out += std::to_string(i + 1) + "," + format_number(cf.predicted) + "," +
           std::to_string(cf.effective_domain.size()) + "\n";
  }
  return out;
}

}  // namespace cfx

#endif  // CFX_EXPLAIN_HPP
