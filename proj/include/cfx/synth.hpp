#ifndef CFX_SYNTH_HPP
#define CFX_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfx/error.hpp"
#include "cfx/eventlog.hpp"
#include "cfx/sem.hpp"
#include "cfx/situations.hpp"

namespace cfx {

/// Where a SEM feature lands in a synthetic trace.
struct Placement {
  enum class Kind { TraceAttr, EventAttr, Duration };

  Kind kind = Kind::TraceAttr;
  /// Event attributes and durations only.
  std::string activity;
  /// Trace and event attributes only.
  std::string attribute;

  static Placement trace(std::string attribute) { return {Kind::TraceAttr, {}, std::move(attribute)}; }
  static Placement event(std::string activity, std::string attribute) {
    return {Kind::EventAttr, std::move(activity), std::move(attribute)};
  }
  static Placement duration(std::string activity) { return {Kind::Duration, std::move(activity), {}}; }
};

struct LogTemplate {
  std::vector<std::string> activities{"inspection", "repair", "final test"};
  std::map<std::string, Placement, std::less<>> placements;
  Timestamp epoch = *parse_timestamp("2020-04-01T08:00:00");
  std::int64_t gap_millis = 30LL * 24 * 3'600'000;
  /// Duration of activities without a duration placement, in `unit`s.
  std::int64_t default_duration = 24;
  DurationUnit unit = DurationUnit::Hours;
  /// Event attribute that enrich_durations should write when reading the log back.
  std::string duration_attribute = "duration";

  /// The repair-company layout: model and team size on the trace, the
  /// inspection's test count on the inspection event, the inspection and
  /// repair durations as the gaps to the next event.
  static LogTemplate repair() {
    LogTemplate t;
    t.placements.emplace("model", Placement::trace("model"));
    t.placements.emplace("team size", Placement::trace("team size"));
    t.placements.emplace("inspNumTest", Placement::event("inspection", "num test"));
    t.placements.emplace("inspDuration", Placement::duration("inspection"));
    t.placements.emplace("repairDuration", Placement::duration("repair"));
    return t;
  }

  void validate(const Sem& sem) const {
    if (activities.empty()) throw ValidationError("template has no activities");
    std::set<std::string> acts(activities.begin(), activities.end());
    if (acts.size() != activities.size()) throw ValidationError("template repeats an activity");
    for (const auto& f : sem.features())
      if (!placements.count(f)) throw ValidationError("SEM feature '" + f + "' has no placement");
    std::set<std::string> durations;
    std::set<std::pair<std::string, std::string>> event_attrs;
    std::set<std::string> trace_attrs;
    for (const auto& [feature, p] : placements) {
      if (!sem.index_of(feature)) throw ValidationError("placement for unknown feature '" + feature + "'");
      switch (p.kind) {
        case Placement::Kind::TraceAttr:
          if (!trace_attrs.insert(p.attribute).second)
            throw ValidationError("trace attribute '" + p.attribute + "' placed twice");
          break;
        case Placement::Kind::EventAttr:
          if (!acts.count(p.activity)) throw ValidationError("unknown activity '" + p.activity + "'");
          if (p.attribute == duration_attribute)
            throw ValidationError("event attribute '" + p.attribute + "' collides with the duration attribute");
          if (!event_attrs.insert({p.activity, p.attribute}).second)
            throw ValidationError("event attribute '" + p.attribute + "' placed twice on '" + p.activity + "'");
          break;
        case Placement::Kind::Duration:
          if (!acts.count(p.activity)) throw ValidationError("unknown activity '" + p.activity + "'");
          if (p.activity == activities.back())
            throw ValidationError("the duration of the final activity '" + p.activity + "' cannot be observed");
          if (!durations.insert(p.activity).second)
            throw ValidationError("two duration placements on '" + p.activity + "'");
          break;
      }
    }
  }
};

/// Extraction plan that reads the placed features back, ending situations at
/// the activity whose duration is `target` (or at the trace end when the
/// target is not a duration).
inline SituationFeaturePlan plan_for(const LogTemplate& tmpl, const Sem& sem, const std::string& target) {
  auto feature = [&](const std::string& name) {
    const Placement& p = tmpl.placements.at(name);
    switch (p.kind) {
      case Placement::Kind::TraceAttr: return SituationFeature::of_trace(name, p.attribute);
      case Placement::Kind::EventAttr: return SituationFeature::of_activity(name, p.activity, p.attribute);
      case Placement::Kind::Duration: return SituationFeature::of_activity(name, p.activity, tmpl.duration_attribute);
    }
    return SituationFeature{};
  };
  sem.require(target);
  SituationFeaturePlan plan;
  for (const auto& name : sem.features())
    if (name != target) plan.descriptive.push_back(feature(name));
  plan.target = feature(target);
  plan.anchor = plan.target.activity ? Anchor::at(*plan.target.activity) : Anchor::trace_end();
  return plan;
}

struct SynthResult {
  EventLog log;
  /// The sampled rows as they were placed (durations and counts rounded).
  SituationTable truth;
};

/// Samples `n` rows from `sem` and writes each as one trace of `tmpl.activities`.
/// Event i+1 starts when event i's duration has elapsed; traces start
/// `gap_millis` apart from `epoch`.
inline SynthResult synthesize(const Sem& sem, const LogTemplate& tmpl, std::size_t n, std::uint64_t seed,
                              std::optional<std::string> target = std::nullopt) {
  tmpl.validate(sem);
  SynthResult result;
  result.truth = sample(sem, n, seed, target);
  EventLog& log = result.log;
  for (const auto& [feature, p] : tmpl.placements) {
    if (p.kind == Placement::Kind::TraceAttr) {
      log.schema[{Level::Trace, p.attribute}] = sem.equation(sem.require(feature)).integer ? ValueKind::Integer
                                                                                          : ValueKind::Real;
    } else if (p.kind == Placement::Kind::EventAttr) {
      log.schema[{Level::Event, p.attribute}] = ValueKind::Integer;
    }
  }

  const std::int64_t per_unit = unit_millis(tmpl.unit);
  std::size_t event_no = 0;
  for (std::size_t r = 0; r < result.truth.rows.size(); ++r) {
    Instance& row = result.truth.rows[r];
    Trace trace;
    trace.case_id = "c" + std::to_string(r + 1);
    row.provenance.case_id = trace.case_id;
    std::map<std::string, std::int64_t> duration_of;
    std::map<std::string, Attributes> event_attrs;
    for (const auto& [feature, p] : tmpl.placements) {
      auto& cell = row.values.at(feature);
      const double x = *as_number(*cell);
      switch (p.kind) {
        case Placement::Kind::TraceAttr: trace.attrs.emplace(p.attribute, *cell); break;
        case Placement::Kind::EventAttr: {
          const auto v = static_cast<std::int64_t>(std::floor(x + 0.5));
          cell = AttributeValue{v};
          event_attrs[p.activity].emplace(p.attribute, v);
          break;
        }
        case Placement::Kind::Duration: {
          const auto v = static_cast<std::int64_t>(std::floor(x + 0.5));
          if (v < 0)
            throw ValidationError("row " + std::to_string(r) + ": sampled duration " + format_number(x) + " for '" +
                                  feature + "' is negative");
          cell = AttributeValue{v};
          duration_of[p.activity] = v;
          break;
        }
      }
    }
    std::int64_t t = tmpl.epoch.millis + static_cast<std::int64_t>(r) * tmpl.gap_millis;
    for (const auto& activity : tmpl.activities) {
      Event e;
      e.id = "e" + std::to_string(++event_no);
      e.activity = activity;
      e.timestamp = Timestamp{t};
      if (auto it = event_attrs.find(activity); it != event_attrs.end()) e.attrs = it->second;
      auto d = duration_of.find(activity);
      t += (d == duration_of.end() ? tmpl.default_duration : d->second) * per_unit;
      trace.events.push_back(std::move(e));
    }
    log.traces.push_back(std::move(trace));
  }
  result.truth.domains = compute_domains(result.truth.rows, result.truth.plan.feature_names());
  return result;
}

inline EventLog synthesize_log(const Sem& sem, const LogTemplate& tmpl, std::size_t n, std::uint64_t seed) {
  return synthesize(sem, tmpl, n, seed).log;
}

/// enrich_durations followed by build_table with plan_for; the inverse of synthesize.
inline SituationTable read_back(const EventLog& log, const LogTemplate& tmpl, const Sem& sem,
                                const std::string& target) {
  return build_table(enrich_durations(log, tmpl.duration_attribute, tmpl.unit), plan_for(tmpl, sem, target));
}

}  // namespace cfx

#endif  // CFX_SYNTH_HPP
