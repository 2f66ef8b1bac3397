#ifndef CFX_CLI_HPP
#define CFX_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfx/baselines.hpp"
#include "cfx/config.hpp"
#include "cfx/error.hpp"
#include "cfx/eventlog.hpp"
#include "cfx/experiment.hpp"
#include "cfx/explain.hpp"
#include "cfx/sem.hpp"
#include "cfx/situations.hpp"
#include "cfx/synth.hpp"

namespace cfx::cli {

enum Exit : int { Ok = 0, Failure = 1, Usage = 2, NoExplanation = 3, SemInconsistent = 4 };

/// The SEM file itself is broken, or an observation contradicts it.
class SemError : public Error {
 public:
  using Error::Error;
};

/// Where command output goes. Tests pass string streams.
struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Everything the commands derive from the configuration.
class Run {
 public:
  explicit Run(Config config) : config_(std::move(config)) {
    seed_ = config_.get_uint("seed", 0);
    out_dir_ = config_.has("out") ? config_.path("out") : std::filesystem::path("out");
  }

  const Config& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

  /// "# seed=S config=H" for the first line of numeric output files.
  std::string header() const { return "# seed=" + std::to_string(seed_) + " config=" + config_.hash_hex() + "\n"; }

  nlohmann::ordered_json run_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed_;
    j["config"] = config_.hash_hex();
    return j;
  }

  const Sem& sem() {
    if (!sem_) {
      const auto path = config_.path("sem");
      try {
        sem_ = parse_sem(detail::read_file(path));
      } catch (const ParseError& e) {
        throw SemError(path.string() + ": " + e.what());
      } catch (const ValidationError& e) {
        throw SemError(path.string() + ": " + e.what());
      }
    }
    return *sem_;
  }

  LogTemplate log_template() {
    LogTemplate t = config_.has("synth.placements") ? LogTemplate{} : LogTemplate::repair();
    for (const auto& [name, spec] : config_.mapping("synth.placements"))
      t.placements.insert_or_assign(name, parse_placement_spec(name, spec));
    if (config_.has("synth.activities")) t.activities = config_.list("synth.activities");
    if (auto epoch = config_.get("synth.epoch")) {
      auto ts = parse_timestamp(*epoch);
      if (!ts) throw ConfigError("synth.epoch: cannot parse timestamp '" + *epoch + "'");
      t.epoch = *ts;
    }
    t.gap_millis = config_.get_int("synth.gap_hours", t.gap_millis / 3'600'000) * 3'600'000;
    t.default_duration = config_.get_int("synth.default_duration", t.default_duration);
    t.unit = duration_unit();
    t.duration_attribute = config_.get_or("enrich.duration", t.duration_attribute);
    if (t.duration_attribute == "none") throw ConfigError("synthetic logs need enrich.duration to read durations back");
    return t;
  }

  DurationUnit duration_unit() const {
    const std::string u = config_.get_or("enrich.unit", "hours");
    auto unit = parse_duration_unit(u);
    if (!unit) throw ConfigError("enrich.unit: unknown unit '" + u + "'");
    return *unit;
  }

  std::string target() {
    if (auto t = config_.get("plan.target")) return *t;
    return sem().features()[sem().order().back()];
  }

  /// plan.features when given, otherwise the plan that reads the template's placements back.
  SituationFeaturePlan plan() {
    const std::string tgt = target();
    SituationFeaturePlan plan;
    if (!config_.has("plan.features")) {
      plan = plan_for(log_template(), sem(), tgt);
    } else {
      bool found = false;
      for (const auto& [name, spec] : config_.mapping("plan.features")) {
        auto f = parse_feature_spec(name, spec);
        if (name == tgt) {
          plan.target = std::move(f);
          found = true;
        } else {
          plan.descriptive.push_back(std::move(f));
        }
      }
      if (!found) throw ConfigError("plan.target '" + tgt + "' is not among plan.features");
      plan.anchor = plan.target.activity ? Anchor::at(*plan.target.activity) : Anchor::trace_end();
    }
    if (auto a = config_.get("plan.anchor")) plan.anchor = *a == "end" ? Anchor::trace_end() : Anchor::at(*a);
    return plan;
  }

  CsvLogConfig csv_config() {
    CsvLogConfig c;
    c.case_column = config_.get_or("log.case", c.case_column);
    c.activity_column = config_.get_or("log.activity", c.activity_column);
    c.timestamp_column = config_.get_or("log.timestamp", c.timestamp_column);
    if (auto id = config_.get("log.event_id")) c.event_id_column = *id == "none" ? std::nullopt : std::optional(*id);
    if (config_.has("log.trace_columns")) {
      for (const auto& col : config_.list("log.trace_columns")) c.trace_columns.insert(col);
    } else {
      for (const auto& [name, p] : log_template().placements)
        if (p.kind == Placement::Kind::TraceAttr) c.trace_columns.insert(p.attribute);
    }
    return c;
  }

  /// A log file (CSV, or XES by extension) with durations enriched.
  EventLog load_log_file(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    EventLog log;
    try {
      if (path.extension() == ".xes") {
        auto result = parse_xes(text);
        log = std::move(result.log);
      } else {
        log = parse_csv(text, csv_config());
      }
    } catch (const ParseError& e) {
      throw Error(path.string() + ": " + e.what());
    }
    return enrich(std::move(log));
  }

  EventLog enrich(EventLog log) const {
    const std::string name = config_.get_or("enrich.duration", "duration");
    if (name == "none") return log;
    return enrich_durations(std::move(log), name, duration_unit());
  }

  /// `log = synth` samples the configured SEM; anything else is a path.
  EventLog log() {
    if (!log_) {
      if (config_.require("log") == "synth") {
        log_ = enrich(synthesize_log(sem(), log_template(), synth_traces(), derive_seed(seed_, stream::synth)));
      } else {
        log_ = load_log_file(config_.path("log"));
      }
    }
    return *log_;
  }

  std::size_t synth_traces() const { return config_.get_uint("synth.traces", 1000); }

  const SituationTable& table() {
    if (!table_) table_ = build_table(log(), plan());
    return *table_;
  }

  /// The instance to explain: `instance` (case id) and optional `instance.prefix`,
  /// read from `instance.log` when set, otherwise from the main table.
  Instance instance() {
    const std::string case_id = config_.require("instance");
    std::optional<std::size_t> prefix;
    if (config_.has("instance.prefix")) prefix = config_.get_uint("instance.prefix", 0);
    SituationTable own;
    const SituationTable* source = nullptr;
    if (config_.has("instance.log")) {
      own = build_table(load_log_file(config_.path("instance.log")), plan());
      source = &own;
    } else {
      source = &table();
    }
    std::vector<const Instance*> matches;
    for (const auto& row : source->rows)
      if (row.provenance.case_id == case_id && (!prefix || row.provenance.prefix_length == *prefix))
        matches.push_back(&row);
    if (matches.empty())
      throw ConfigError("no situation for case '" + case_id + "'" +
                        (prefix ? " with prefix length " + std::to_string(*prefix) : std::string()));
    if (matches.size() > 1) {
      std::string lengths;
      for (auto* m : matches) lengths += (lengths.empty() ? "" : ", ") + std::to_string(m->provenance.prefix_length);
      throw ConfigError("case '" + case_id + "' has several situations (prefix lengths " + lengths +
                        "); set instance.prefix");
    }
    return *matches.front();
  }

  ExplainOptions explain_options() {
    ExplainOptions o;
    const auto& tbl = table();
    o.actionable = config_.has("actionable") ? config_.list("actionable") : tbl.plan.descriptive_names();
    const auto names = tbl.plan.descriptive_names();
    for (const auto& a : o.actionable)
      if (std::find(names.begin(), names.end(), a) == names.end())
        throw ConfigError("actionable feature '" + a + "' is not a descriptive feature of the plan");
    if (o.actionable.empty()) throw ConfigError("no actionable features");
    o.threshold = config_.get_real("threshold", 0.0);
    if (!config_.has("threshold")) throw ConfigError("missing config key 'threshold'");
    const std::string dir = config_.get_or("direction", "below");
    auto d = parse_direction(dir);
    if (!d) throw ConfigError("direction must be 'below' or 'above', got '" + dir + "'");
    o.direction = *d;
    o.k = config_.get_uint("k", 8);
    o.candidates = config_.get_uint("candidates", 1000);
    if (o.k < 1) throw ConfigError("k must be at least 1");
    if (o.candidates < o.k) throw ConfigError("candidates must be at least k");
    o.seed = derive_seed(seed_, stream::candidates);
    return o;
  }

  EvaluationSettings evaluation_settings() const {
    EvaluationSettings s;
    s.epsilon = config_.get_real("evaluate.epsilon", s.epsilon);
    s.train_fraction = config_.get_real("evaluate.train_fraction", s.train_fraction);
    s.cf_instances = config_.get_uint("evaluate.cf_instances", s.cf_instances);
    s.cf_candidates = config_.get_uint("evaluate.cf_candidates", s.cf_candidates);
    s.rt.min_leaf = config_.get_uint("rt.min_leaf", s.rt.min_leaf);
    s.rt.max_depth = config_.get_uint("rt.max_depth", s.rt.max_depth);
    s.lwl_k = config_.get_uint("lwl.k", s.lwl_k);
    const std::string kernel = config_.get_or("lwl.kernel", "linear");
    auto kk = parse_kernel(kernel);
    if (!kk) throw ConfigError("lwl.kernel must be 'linear' or 'uniform', got '" + kernel + "'");
    s.lwl_kernel = *kk;
    if (s.epsilon <= 0.0) throw ConfigError("evaluate.epsilon must be positive");
    if (s.cf_candidates == 0) throw ConfigError("evaluate.cf_candidates must be at least 1");
    return s;
  }

  void write(const std::string& name, const std::string& content, Streams io) const {
    const auto path = out_dir_ / name;
    detail::write_file(path, content);
    io.err << "wrote " << path.string() << "\n";
  }

 private:
  Config config_;
  std::uint64_t seed_ = 0;
  std::filesystem::path out_dir_;
  std::optional<Sem> sem_;
  std::optional<EventLog> log_;
  std::optional<SituationTable> table_;
};

// ---------------------------------------------------------------------------
// Commands

/// log.csv and the sampled ground truth truth.csv.
inline int cmd_synth(Run& run, Streams io) {
  const LogTemplate tmpl = run.log_template();
  const std::size_t n = run.synth_traces();
  auto result = synthesize(run.sem(), tmpl, n, derive_seed(run.seed(), stream::synth), run.target());
  run.write("log.csv", run.header() + write_csv(result.log), io);
  run.write("truth.csv", run.header() + table_to_csv(result.truth), io);
  io.out << "synthesized " << result.log.traces.size() << " traces, " << result.log.event_count() << " events\n";
  return Ok;
}

/// table.csv and table.json (with domains).
inline int cmd_extract(Run& run, Streams io) {
  const auto& table = run.table();
  auto j = table_to_json(table);
  j["run"] = run.run_json();
  run.write("table.csv", run.header() + table_to_csv(table), io);
  run.write("table.json", j.dump(2) + "\n", io);
  io.out << "extracted " << table.rows.size() << " instances";
  if (table.dropped_missing_target) io.out << " (" << table.dropped_missing_target << " dropped: missing target)";
  io.out << "\n";
  return Ok;
}

/// Prints the parent graph in DOT.
inline int cmd_sem_check(Run& run, Streams io) {
  io.out << to_dot(run.sem());
  return Ok;
}

inline std::string explanation_json(const Run& run, const ExplanationSet& set) {
  auto j = render_json(set);
  j["run"] = run.run_json();
  return j.dump(2) + "\n";
}

/// explanations.txt, explanations.json and explanations_plot.csv.
inline int cmd_explain(Run& run, Streams io) {
  const auto options = run.explain_options();
  const Instance given = run.instance();
  SemPredictor predictor(run.sem());
  const ExplanationSet set = explain(run.table(), given, predictor, options);
  const std::string text = render_text(set);
  run.write("explanations.txt", text, io);
  run.write("explanations.json", explanation_json(run, set), io);
  run.write("explanations_plot.csv", run.header() + render_plot_csv(set), io);
  io.out << text;
  return set.explanations.empty() ? NoExplanation : Ok;
}

/// comparison.csv, fig4_predictions.csv, fig4_domains.csv and evaluation.json.
inline int cmd_evaluate(Run& run, Streams io) {
  const auto options = run.explain_options();
  const auto settings = run.evaluation_settings();
  const Instance given = run.instance();
  const auto result = run_evaluation(run.table(), run.sem(), given, options, settings, run.seed());
  auto j = evaluation_to_json(result);
  j["run"] = run.run_json();
  run.write("comparison.csv", run.header() + comparison_csv(result, run.seed()), io);
  run.write("fig4_predictions.csv", run.header() + predictions_csv(result), io);
  run.write("fig4_domains.csv", run.header() + domains_csv(result), io);
  run.write("evaluation.json", j.dump(2) + "\n", io);
  io.out << comparison_csv(result, run.seed());
  io.out << "mean |sem - rt| over selected: " << format_number(result.mean_gap(&ComparisonRow::rt))
         << ", mean |sem - lwl|: " << format_number(result.mean_gap(&ComparisonRow::lwl)) << "\n";
  return Ok;
}

/// Runs `body` and maps library errors to exit codes, reporting on `io.err`.
template <class F>
int guarded(F&& body, Streams io) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << "\n";
    return Usage;
  } catch (const SemError& e) {
    io.err << "SEM error: " << e.what() << "\n";
    return SemInconsistent;
  } catch (const AbductionError& e) {
    io.err << "SEM inconsistency: " << e.what() << "\n";
    return SemInconsistent;
  } catch (const CandidateError& e) {
    io.err << (e.sem_inconsistency() ? "SEM inconsistency: " : "error: ") << e.what() << "\n";
    return e.sem_inconsistency() ? SemInconsistent : Failure;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return Failure;
  }
}

}  // namespace cfx::cli

#endif  // CFX_CLI_HPP
