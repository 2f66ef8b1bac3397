#ifndef CFX_SITUATIONS_HPP
#define CFX_SITUATIONS_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfx/csv.hpp"
#include "cfx/error.hpp"
#include "cfx/eventlog.hpp"
#include "cfx/value.hpp"

namespace cfx {

/// A named extractor: a trace-level attribute, or an attribute of the latest
/// event carrying a given activity.
struct SituationFeature {
  std::string name;
  std::string attribute;
  std::optional<std::string> activity;

  static SituationFeature of_trace(std::string name, std::string attribute) {
    return {std::move(name), std::move(attribute), std::nullopt};
  }
  static SituationFeature of_activity(std::string name, std::string activity, std::string attribute) {
    return {std::move(name), std::move(attribute), std::move(activity)};
  }

  bool trace_level() const { return !activity.has_value(); }

  friend bool operator==(const SituationFeature&, const SituationFeature&) = default;
};

/// Where situations end: at every occurrence of an activity, or at the end of each trace.
struct Anchor {
  std::optional<std::string> activity;

  static Anchor trace_end() { return {}; }
  static Anchor at(std::string activity) { return {std::move(activity)}; }

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct SituationFeaturePlan {
  std::vector<SituationFeature> descriptive;
  SituationFeature target;
  Anchor anchor;

  /// Descriptive names followed by the target name.
  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (const auto& f : descriptive) names.push_back(f.name);
    names.push_back(target.name);
    return names;
  }

  std::vector<std::string> descriptive_names() const {
    std::vector<std::string> names;
    for (const auto& f : descriptive) names.push_back(f.name);
    return names;
  }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& f : descriptive) {
      if (f.name.empty()) throw ValidationError("situation feature with empty name");
      if (!seen.insert(f.name).second) throw ValidationError("duplicate situation feature '" + f.name + "'");
    }
    if (seen.count(target.name)) throw ValidationError("target '" + target.name + "' is also descriptive");
    if (anchor.activity && target.activity && *target.activity != *anchor.activity)
      throw ValidationError("target '" + target.name + "' reads activity '" + *target.activity +
                            "' but situations end at '" + *anchor.activity + "'");
  }

  friend bool operator==(const SituationFeaturePlan&, const SituationFeaturePlan&) = default;
};

/// A non-empty prefix of a trace. Borrows the trace; the log must outlive it.
struct Situation {
  const Trace* trace = nullptr;
  std::size_t length = 0;

  std::span<const Event> prefix() const { return {trace->events.data(), length}; }
  const std::string& case_id() const { return trace->case_id; }
  const Attributes& trace_attrs() const { return trace->attrs; }
};

inline std::vector<Situation> extract_situations(const EventLog& log, const Anchor& anchor) {
  std::vector<Situation> out;
  for (const auto& trace : log.traces) {
    if (!anchor.activity) {
      out.push_back({&trace, trace.events.size()});
      continue;
    }
    for (std::size_t i = 0; i < trace.events.size(); ++i)
      if (trace.events[i].activity == *anchor.activity) out.push_back({&trace, i + 1});
  }
  return out;
}

/// Reads `f` from `s`. Activity features take the latest matching event in the
/// prefix; among equal timestamps the last one in trace order wins.
inline MaybeValue feature_value(const Situation& s, const SituationFeature& f) {
  const Attributes* attrs = nullptr;
  if (f.trace_level()) {
    attrs = &s.trace_attrs();
  } else {
    auto prefix = s.prefix();
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
      if (it->activity == *f.activity) {
        attrs = &it->attrs;
        break;
      }
    }
  }
  if (!attrs) return std::nullopt;
  auto it = attrs->find(f.attribute);
  if (it == attrs->end()) return std::nullopt;
  return it->second;
}

using Values = std::map<std::string, MaybeValue, std::less<>>;

struct Provenance {
  std::string case_id;
  std::size_t prefix_length = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One row of a situation table: a value (or missing) per plan feature.
struct Instance {
  Values values;
  Provenance provenance;

  std::optional<double> number(std::string_view name) const {
    auto it = values.find(name);
    if (it == values.end() || !it->second) return std::nullopt;
    return as_number(*it->second);
  }

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Observed range of a numeric feature, or the observed value set of a text feature.
struct Domain {
  ValueKind kind = ValueKind::Real;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::set<std::string> categories;
  std::size_t observed = 0;

  bool categorical() const { return kind == ValueKind::Text; }
  bool empty() const { return observed == 0; }
  double width() const { return empty() ? 0.0 : hi - lo; }

  bool contains(const AttributeValue& v) const {
    if (categorical()) return kind_of(v) == ValueKind::Text && categories.count(std::get<std::string>(v));
    auto x = as_number(v);
    return x && *x >= lo && *x <= hi;
  }

  /// Min-max scaling to [0, 1]; zero-width domains map everything to 0.
  double normalize(double x) const {
    const double w = width();
    return w > 0.0 ? (x - lo) / w : 0.0;
  }

  void add(const AttributeValue& v) {
    ++observed;
    if (kind_of(v) == ValueKind::Text) {
      kind = ValueKind::Text;
      categories.insert(std::get<std::string>(v));
      return;
    }
    kind = kind_of(v);
    const double x = *as_number(v);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }

  friend bool operator==(const Domain&, const Domain&) = default;
};

using Domains = std::map<std::string, Domain, std::less<>>;

inline Domains compute_domains(std::span<const Instance> rows, const std::vector<std::string>& names) {
  Domains domains;
  for (const auto& name : names) domains[name];
  for (const auto& row : rows) {
    for (const auto& name : names) {
      auto it = row.values.find(name);
      if (it != row.values.end() && it->second) domains[name].add(*it->second);
    }
  }
  return domains;
}

struct SituationTable {
  SituationFeaturePlan plan;
  std::vector<Instance> rows;
  Domains domains;
  /// Situations discarded because the target was missing.
  std::size_t dropped_missing_target = 0;

  /// Non-missing values of one column, in row order.
  std::vector<AttributeValue> column(std::string_view name) const {
    std::vector<AttributeValue> out;
    for (const auto& row : rows) {
      auto it = row.values.find(name);
      if (it != row.values.end() && it->second) out.push_back(*it->second);
    }
    return out;
  }

  /// Same plan, a subset of rows, domains recomputed.
  SituationTable subset(std::span<const std::size_t> indices) const {
    SituationTable out;
    out.plan = plan;
    for (auto i : indices) out.rows.push_back(rows.at(i));
    out.domains = compute_domains(out.rows, plan.feature_names());
    return out;
  }
};

inline SituationTable build_table(const EventLog& log, const SituationFeaturePlan& plan) {
  plan.validate();
  auto check = [&](const SituationFeature& f) {
    Level level = f.trace_level() ? Level::Trace : Level::Event;
    if (!log.has_attribute(level, f.attribute))
      throw ValidationError("feature '" + f.name + "' reads " + (f.trace_level() ? "trace" : "event") +
                            " attribute '" + f.attribute + "', which the log does not have");
  };
  for (const auto& f : plan.descriptive) check(f);
  check(plan.target);

  SituationTable table;
  table.plan = plan;
  for (const auto& s : extract_situations(log, plan.anchor)) {
    MaybeValue target = feature_value(s, plan.target);
    if (!target) {
      ++table.dropped_missing_target;
      continue;
    }
    Instance row;
    row.provenance = {s.case_id(), s.length};
    for (const auto& f : plan.descriptive) row.values.emplace(f.name, feature_value(s, f));
    row.values.emplace(plan.target.name, std::move(target));
    table.rows.push_back(std::move(row));
  }
  table.domains = compute_domains(table.rows, plan.feature_names());
  return table;
}

// ---------------------------------------------------------------------------
// Serialization

/// Header = plan feature names; missing values are empty cells.
inline std::string table_to_csv(const SituationTable& table) {
  const auto names = table.plan.feature_names();
  std::string out = csv::join(names) + "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& name : names) {
      auto it = row.values.find(name);
      cells.push_back(it != row.values.end() && it->second ? to_text(*it->second) : std::string());
    }
    out += csv::join(cells) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json value_to_json(const MaybeValue& v) {
  if (!v) return nullptr;
  switch (kind_of(*v)) {
    case ValueKind::Integer: return std::get<std::int64_t>(*v);
    case ValueKind::Real: return std::get<double>(*v);
    case ValueKind::Text: return std::get<std::string>(*v);
    case ValueKind::Timestamp: return format_timestamp(std::get<Timestamp>(*v));
  }
  return nullptr;
}

inline nlohmann::ordered_json feature_to_json(const SituationFeature& f) {
  nlohmann::ordered_json j;
  j["name"] = f.name;
  j["level"] = f.trace_level() ? "trace" : "activity";
  if (f.activity) j["activity"] = *f.activity;
  j["attribute"] = f.attribute;
  return j;
}

inline nlohmann::ordered_json domain_to_json(const Domain& d) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(d.kind));
  j["observed"] = d.observed;
  if (d.empty()) return j;
  if (d.categorical()) {
    j["values"] = d.categories;
  } else {
    j["min"] = d.lo;
    j["max"] = d.hi;
  }
  return j;
}

inline nlohmann::ordered_json table_to_json(const SituationTable& table) {
  nlohmann::ordered_json j;
  auto& plan = j["plan"];
  plan["anchor"] = table.plan.anchor.activity ? *table.plan.anchor.activity : std::string("<trace end>");
  plan["descriptive"] = nlohmann::ordered_json::array();
  for (const auto& f : table.plan.descriptive) plan["descriptive"].push_back(feature_to_json(f));
  plan["target"] = feature_to_json(table.plan.target);
  auto& domains = j["domains"];
  domains = nlohmann::ordered_json::object();
  for (const auto& name : table.plan.feature_names()) domains[name] = domain_to_json(table.domains.at(name));
  j["dropped_missing_target"] = table.dropped_missing_target;
  auto& rows = j["rows"];
  rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r;
    r["case"] = row.provenance.case_id;
    r["prefix_length"] = row.provenance.prefix_length;
    for (const auto& name : table.plan.feature_names()) {
      auto it = row.values.find(name);
      r["values"][name] = it == row.values.end() ? nlohmann::ordered_json(nullptr) : value_to_json(it->second);
    }
    rows.push_back(std::move(r));
  }
  return j;
}

}  // namespace cfx

#endif  // CFX_SITUATIONS_HPP
