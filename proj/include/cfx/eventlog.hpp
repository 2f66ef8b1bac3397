#ifndef CFX_EVENTLOG_HPP
#define CFX_EVENTLOG_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "cfx/csv.hpp"
#include "cfx/error.hpp"
#include "cfx/value.hpp"

namespace cfx {

enum class Level { Trace, Event };

using Attributes = std::map<std::string, AttributeValue, std::less<>>;

struct Event {
  std::string id;
  std::string activity;
  Timestamp timestamp;
  Attributes attrs;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;
  Attributes attrs;

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Value kind of every attribute, keyed by (level, name).
using Schema = std::map<std::pair<Level, std::string>, ValueKind>;

struct EventLog {
  std::vector<Trace> traces;
  Schema schema;

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& t : traces) n += t.events.size();
    return n;
  }

  const Trace* find(std::string_view case_id) const {
    for (const auto& t : traces)
      if (t.case_id == case_id) return &t;
    return nullptr;
  }

  bool has_attribute(Level level, const std::string& name) const {
    return schema.count({level, name}) != 0;
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;
};

/// Checks every EventLog invariant; throws ValidationError on the first violation.
inline void validate(const EventLog& log) {
  std::unordered_set<std::string> cases;
  std::unordered_set<std::string> ids;
  auto check_attrs = [&](const Attributes& attrs, Level level, const std::string& where) {
    for (const auto& [name, value] : attrs) {
      auto it = log.schema.find({level, name});
      if (it == log.schema.end())
        throw ValidationError(where + ": attribute '" + name + "' missing from schema");
      if (it->second != kind_of(value))
        throw ValidationError(where + ": attribute '" + name + "' is " +
                              std::string(to_string(kind_of(value))) + ", schema says " +
                              std::string(to_string(it->second)));
    }
  };
  for (const auto& trace : log.traces) {
    if (!cases.insert(trace.case_id).second)
      throw ValidationError("duplicate case id '" + trace.case_id + "'");
    if (trace.events.empty()) throw ValidationError("trace '" + trace.case_id + "' has no events");
    check_attrs(trace.attrs, Level::Trace, "trace '" + trace.case_id + "'");
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const auto& e = trace.events[i];
      if (!ids.insert(e.id).second) throw ValidationError("duplicate event id '" + e.id + "'");
      if (i > 0 && e.timestamp < trace.events[i - 1].timestamp)
        throw ValidationError("trace '" + trace.case_id + "' is not sorted by timestamp");
      if (e.timestamp.millis < 0) throw ValidationError("event '" + e.id + "' has a negative timestamp");
      check_attrs(e.attrs, Level::Event, "event '" + e.id + "'");
    }
  }
}

namespace detail {

inline void sort_events(Trace& trace) {
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
}

/// Most specific kind that parses every sample: int, then float, then date, else string.
inline ValueKind infer_kind(const std::vector<std::string_view>& samples) {
  auto all = [&](auto pred) {
    return std::all_of(samples.begin(), samples.end(), pred);
  };
  if (all([](std::string_view s) { return parse_integer(s).has_value(); })) return ValueKind::Integer;
  if (all([](std::string_view s) { return parse_real(s).has_value(); })) return ValueKind::Real;
  if (all([](std::string_view s) { return parse_timestamp(s).has_value(); })) return ValueKind::Timestamp;
  return ValueKind::Text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/// Column layout of a flat CSV event log. Columns not named anywhere are event-level.
struct CsvLogConfig {
  std::string case_column = "case id";
  std::string activity_column = "activity name";
  std::string timestamp_column = "timestamp";
  /// When unset, event ids are generated as "e<row>" (1-based data row).
  std::optional<std::string> event_id_column = std::string("event id");
  std::set<std::string, std::less<>> trace_columns;
  std::set<std::string, std::less<>> event_columns;
};

inline EventLog parse_csv(std::string_view text, const CsvLogConfig& config) {
  auto records = csv::read(text);
  if (records.empty()) throw ParseError("missing header row", 1);
  const auto& header = records.front().fields;

  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second)
      throw ParseError("duplicate column '" + header[i] + "'", records.front().line);
  }
  auto require = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw ParseError("missing mandatory column '" + name + "'", records.front().line);
    return it->second;
  };
  const std::size_t case_col = require(config.case_column);
  const std::size_t activity_col = require(config.activity_column);
  const std::size_t time_col = require(config.timestamp_column);
  std::optional<std::size_t> id_col;
  if (config.event_id_column) id_col = require(*config.event_id_column);
  for (const auto& name : config.trace_columns) require(name);
  for (const auto& name : config.event_columns) require(name);

  struct AttrColumn {
    std::size_t index;
    std::string name;
    Level level;
    ValueKind kind = ValueKind::Text;
  };
  std::vector<AttrColumn> attr_columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == case_col || i == activity_col || i == time_col || (id_col && i == *id_col)) continue;
    Level level = config.trace_columns.count(header[i]) ? Level::Trace : Level::Event;
    attr_columns.push_back({i, header[i], level});
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(records[r].fields.size()),
                       records[r].line);
  }

  for (auto& col : attr_columns) {
    std::vector<std::string_view> samples;
    for (std::size_t r = 1; r < records.size(); ++r)
      if (!records[r].fields[col.index].empty()) samples.push_back(records[r].fields[col.index]);
    if (!samples.empty()) col.kind = detail::infer_kind(samples);
  }

  EventLog log;
  for (const auto& col : attr_columns) log.schema[{col.level, col.name}] = col.kind;

  std::unordered_map<std::string, std::size_t> trace_index;
  std::unordered_set<std::string> event_ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r].fields;
    const std::size_t line = records[r].line;
    const std::string& case_id = row[case_col];
    if (case_id.empty()) throw ParseError("empty case id", line);
    if (row[activity_col].empty()) throw ParseError("empty activity", line);
    auto ts = parse_timestamp(row[time_col]);
    if (!ts) throw ParseError("unparseable timestamp '" + row[time_col] + "' (row " + std::to_string(r) + ")", line);

    Event event;
    event.id = id_col ? row[*id_col] : "e" + std::to_string(r);
    if (event.id.empty()) throw ParseError("empty event id", line);
    if (!event_ids.insert(event.id).second) throw ParseError("duplicate event id '" + event.id + "'", line);
    event.activity = row[activity_col];
    event.timestamp = *ts;

    auto [it, inserted] = trace_index.emplace(case_id, log.traces.size());
    if (inserted) log.traces.push_back(Trace{case_id, {}, {}});
    Trace& trace = log.traces[it->second];

    for (const auto& col : attr_columns) {
      const std::string& cell = row[col.index];
      if (cell.empty()) continue;
      AttributeValue value = *parse_value(cell, col.kind);
      if (col.level == Level::Event) {
        event.attrs.emplace(col.name, std::move(value));
        continue;
      }
      auto existing = trace.attrs.find(col.name);
      if (existing == trace.attrs.end()) {
        trace.attrs.emplace(col.name, std::move(value));
      } else if (existing->second != value) {
        throw ParseError("trace-level column '" + col.name + "' varies within case '" + case_id + "'", line);
      }
    }
    trace.events.push_back(std::move(event));
  }
  for (auto& trace : log.traces) detail::sort_events(trace);
  return log;
}

inline EventLog parse_csv(std::istream& in, const CsvLogConfig& config) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_csv(text, config);
}

/// The config that write_csv uses for `log`; parse_csv(write_csv(log), csv_config_for(log)) == log.
inline CsvLogConfig csv_config_for(const EventLog& log) {
  CsvLogConfig config;
  for (const auto& [key, kind] : log.schema) {
    (key.first == Level::Trace ? config.trace_columns : config.event_columns).insert(key.second);
  }
  return config;
}

/// One row per event, trace attributes repeated on every row of their case.
inline std::string write_csv(const EventLog& log, const CsvLogConfig& config) {
  std::vector<std::string> trace_cols(config.trace_columns.begin(), config.trace_columns.end());
  std::vector<std::string> event_cols(config.event_columns.begin(), config.event_columns.end());
  std::vector<std::string> header;
  if (config.event_id_column) header.push_back(*config.event_id_column);
  header.push_back(config.case_column);
  header.push_back(config.activity_column);
  header.push_back(config.timestamp_column);
  header.insert(header.end(), trace_cols.begin(), trace_cols.end());
  header.insert(header.end(), event_cols.begin(), event_cols.end());
  {
    std::set<std::string> unique(header.begin(), header.end());
    if (unique.size() != header.size())
      throw ValidationError("CSV export needs distinct column names across levels");
  }

  std::string out = csv::join(header) + "\n";
  for (const auto& trace : log.traces) {
    for (const auto& event : trace.events) {
      std::vector<std::string> row;
      if (config.event_id_column) row.push_back(event.id);
      row.push_back(trace.case_id);
      row.push_back(event.activity);
      row.push_back(format_timestamp(event.timestamp));
      for (const auto& c : trace_cols) {
        auto it = trace.attrs.find(c);
        row.push_back(it == trace.attrs.end() ? std::string() : to_text(it->second));
      }
      for (const auto& c : event_cols) {
        auto it = event.attrs.find(c);
        row.push_back(it == event.attrs.end() ? std::string() : to_text(it->second));
      }
      out += csv::join(row) + "\n";
    }
  }
  return out;
}

inline std::string write_csv(const EventLog& log) { return write_csv(log, csv_config_for(log)); }

// ---------------------------------------------------------------------------
// XES subset

struct XesResult {
  EventLog log;
  /// Elements outside the supported subset that were skipped.
  std::size_t warnings = 0;
};

namespace detail {

inline std::optional<ValueKind> xes_kind(std::string_view tag) {
  if (tag == "string") return ValueKind::Text;
  if (tag == "int") return ValueKind::Integer;
  if (tag == "float") return ValueKind::Real;
  if (tag == "date") return ValueKind::Timestamp;
  return std::nullopt;
}

struct XesAttribute {
  std::string key;
  AttributeValue value;
};

inline std::optional<XesAttribute> read_xes_attribute(const std::string& tag,
                                                      const boost::property_tree::ptree& node,
                                                      std::size_t& warnings) {
  auto kind = xes_kind(tag);
  if (!kind) return std::nullopt;
  auto key = node.get_optional<std::string>("<xmlattr>.key");
  auto raw = node.get_optional<std::string>("<xmlattr>.value");
  if (!key || !raw) throw ParseError("<" + tag + "> attribute without key or value");
  auto value = parse_value(*raw, *kind);
  if (!value) throw ParseError("cannot read " + tag + " value '" + *raw + "' for key '" + *key + "'");
  for (const auto& child : node)
    if (child.first != "<xmlattr>") ++warnings;
  return XesAttribute{*key, std::move(*value)};
}

inline void note_kind(Schema& schema, Level level, const std::string& name, ValueKind kind) {
  auto [it, inserted] = schema.emplace(std::make_pair(level, name), kind);
  if (!inserted && it->second != kind)
    throw ValidationError("attribute '" + name + "' changes kind from " + std::string(to_string(it->second)) +
                          " to " + std::string(to_string(kind)));
}

}  // namespace detail

/// Reads `log`/`trace`/`event` with string/int/float/date attributes.
/// `concept:name` is the case id on traces and the activity on events,
/// `time:timestamp` the event time, `identity:id` the event id (generated as
/// "e<n>" in document order when absent).
inline XesResult parse_xes(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed XML: " + e.message(), e.line());
  }
  auto root = doc.get_child_optional("log");
  if (!root) throw ParseError("document has no <log> root element");

  XesResult result;
  EventLog& log = result.log;
  std::size_t& warnings = result.warnings;
  std::unordered_set<std::string> cases;
  std::unordered_set<std::string> ids;
  std::size_t event_counter = 0;

  for (const auto& [tag, node] : *root) {
    if (tag == "<xmlattr>") continue;
    if (tag != "trace") {
      ++warnings;
      continue;
    }
    Trace trace;
    std::optional<std::string> case_id;
    for (const auto& [ttag, tnode] : node) {
      if (ttag == "<xmlattr>") continue;
      if (ttag == "event") {
        ++event_counter;
        Event event;
        std::optional<std::string> activity;
        std::optional<Timestamp> time;
        std::optional<std::string> id;
        for (const auto& [etag, enode] : tnode) {
          if (etag == "<xmlattr>") continue;
          auto attr = detail::read_xes_attribute(etag, enode, warnings);
          if (!attr) {
            ++warnings;
            continue;
          }
          if (attr->key == "concept:name" && kind_of(attr->value) == ValueKind::Text) {
            activity = std::get<std::string>(attr->value);
          } else if (attr->key == "time:timestamp") {
            if (kind_of(attr->value) == ValueKind::Timestamp) {
              time = std::get<Timestamp>(attr->value);
            } else if (auto t = parse_timestamp(to_text(attr->value))) {
              time = *t;
            } else {
              throw ParseError("unparseable time:timestamp '" + to_text(attr->value) + "'");
            }
          } else if (attr->key == "identity:id" && kind_of(attr->value) == ValueKind::Text) {
            id = std::get<std::string>(attr->value);
          } else {
            detail::note_kind(log.schema, Level::Event, attr->key, kind_of(attr->value));
            event.attrs.insert_or_assign(attr->key, std::move(attr->value));
          }
        }
        if (!activity) throw ParseError("event " + std::to_string(event_counter) + " has no concept:name");
        if (!time) throw ParseError("event " + std::to_string(event_counter) + " has no time:timestamp");
        event.activity = *activity;
        event.timestamp = *time;
        event.id = id ? *id : "e" + std::to_string(event_counter);
        if (!ids.insert(event.id).second) throw ValidationError("duplicate event id '" + event.id + "'");
        trace.events.push_back(std::move(event));
        continue;
      }
      auto attr = detail::read_xes_attribute(ttag, tnode, warnings);
      if (!attr) {
        ++warnings;
        continue;
      }
      if (attr->key == "concept:name" && kind_of(attr->value) == ValueKind::Text) {
        case_id = std::get<std::string>(attr->value);
      } else {
        detail::note_kind(log.schema, Level::Trace, attr->key, kind_of(attr->value));
        trace.attrs.insert_or_assign(attr->key, std::move(attr->value));
      }
    }
    if (!case_id) throw ParseError("trace " + std::to_string(log.traces.size() + 1) + " has no concept:name");
    if (!cases.insert(*case_id).second) throw ValidationError("duplicate case id '" + *case_id + "'");
    if (trace.events.empty()) {
      ++warnings;
      continue;
    }
    trace.case_id = *case_id;
    detail::sort_events(trace);
    log.traces.push_back(std::move(trace));
  }
  return result;
}

inline XesResult parse_xes(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_xes(in);
}

// ---------------------------------------------------------------------------
// Enrichment

enum class DurationUnit { Hours, Minutes, Seconds };

inline std::int64_t unit_millis(DurationUnit unit) {
  switch (unit) {
    case DurationUnit::Hours: return 3'600'000;
    case DurationUnit::Minutes: return 60'000;
    case DurationUnit::Seconds: return 1'000;
  }
  return 1;
}

inline std::optional<DurationUnit> parse_duration_unit(std::string_view s) {
  if (s == "hours") return DurationUnit::Hours;
  if (s == "minutes") return DurationUnit::Minutes;
  if (s == "seconds") return DurationUnit::Seconds;
  return std::nullopt;
}

/// Adds `name` = time until the next event of the same trace, in whole `unit`s
/// (half-up). The last event of each trace gets no value.
inline EventLog enrich_durations(EventLog log, const std::string& name, DurationUnit unit) {
  if (log.has_attribute(Level::Event, name))
    throw ValidationError("event attribute '" + name + "' already exists");
  const std::int64_t per_unit = unit_millis(unit);
  for (auto& trace : log.traces) {
    for (std::size_t i = 0; i + 1 < trace.events.size(); ++i) {
      std::int64_t delta = trace.events[i + 1].timestamp.millis - trace.events[i].timestamp.millis;
      trace.events[i].attrs.emplace(name, AttributeValue{(delta + per_unit / 2) / per_unit});
    }
  }
  log.schema[{Level::Event, name}] = ValueKind::Integer;
  return log;
}

}  // namespace cfx

#endif  // CFX_EVENTLOG_HPP
