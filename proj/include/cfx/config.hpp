#ifndef CFX_CONFIG_HPP
#define CFX_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfx/error.hpp"
#include "cfx/situations.hpp"
#include "cfx/synth.hpp"
#include "cfx/value.hpp"

namespace cfx {

/// Bad or missing configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    std::string part = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Flat `key = value` configuration. `#` starts a comment line; later keys
/// override earlier ones. Relative paths resolve against the file's directory.
class Config {
 public:
  /// Every key the CLI understands. Unknown keys are rejected to catch typos.
  static const std::set<std::string, std::less<>>& known_keys() {
    static const std::set<std::string, std::less<>> keys{
        "seed",           "out",
        "sem",            "log",
        "log.case",       "log.activity",
        "log.timestamp",  "log.event_id",
        "log.trace_columns",
        "enrich.duration", "enrich.unit",
        "plan.anchor",    "plan.features",
        "plan.target",    "actionable",
        "threshold",      "direction",
        "k",              "candidates",
        "instance",       "instance.prefix",
        "instance.log",   "synth.traces",
        "synth.placements", "synth.activities",
        "synth.epoch",    "synth.gap_hours",
        "synth.default_duration",
        "evaluate.epsilon", "evaluate.train_fraction",
        "evaluate.cf_instances", "evaluate.cf_candidates",
        "rt.min_leaf",    "rt.max_depth",
        "lwl.k",          "lwl.kernel",
    };
    return keys;
  }

  static Config parse(std::string_view text, std::filesystem::path base_dir = {}) {
    Config config;
    config.base_dir_ = std::move(base_dir);
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      const std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
      config.set(detail::trim(std::string_view(t).substr(0, eq)), detail::trim(std::string_view(t).substr(eq + 1)),
                 line_no);
    }
    return config;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      return parse(buffer.str(), path.parent_path());
    } catch (const ParseError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }

  void set(const std::string& key, std::string value, std::size_t line = 0) {
    if (!known_keys().count(key)) {
      std::string msg = "unknown config key '" + key + "'";
      if (line) throw ParseError(msg, line);
      throw ConfigError(msg);
    }
    entries_[key] = std::move(value);
  }

  /// Applies a `key=value` command-line override.
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
    set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
  }

  bool has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

  std::optional<std::string> get(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_or(std::string_view key, std::string fallback) const { return get(key).value_or(std::move(fallback)); }

  std::string require(std::string_view key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing config key '" + std::string(key) + "'");
    return *v;
  }

  std::int64_t get_int(std::string_view key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto x = parse_integer(*v);
    if (!x) throw ConfigError("config key '" + std::string(key) + "' expects an integer, got '" + *v + "'");
    return *x;
  }

  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const {
    const std::int64_t x = get_int(key, static_cast<std::int64_t>(fallback));
    if (x < 0) throw ConfigError("config key '" + std::string(key) + "' must not be negative");
    return static_cast<std::uint64_t>(x);
  }

  double get_real(std::string_view key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto x = parse_real(*v);
    if (!x) throw ConfigError("config key '" + std::string(key) + "' expects a number, got '" + *v + "'");
    return *x;
  }

  /// Comma-separated list.
  std::vector<std::string> list(std::string_view key) const {
    auto v = get(key);
    return v ? detail::split(*v, ',') : std::vector<std::string>{};
  }

  /// `;`-separated `name: spec` pairs, in file order.
  std::vector<std::pair<std::string, std::string>> mapping(std::string_view key) const {
    std::vector<std::pair<std::string, std::string>> out;
    auto v = get(key);
    if (!v) return out;
    for (const auto& item : detail::split(*v, ';')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("config key '" + std::string(key) + "': entry '" + item + "' lacks ':'");
      out.emplace_back(detail::trim(std::string_view(item).substr(0, colon)),
                       detail::trim(std::string_view(item).substr(colon + 1)));
    }
    return out;
  }

  std::filesystem::path path(std::string_view key) const {
    std::filesystem::path p = require(key);
    return p.is_relative() && !base_dir_.empty() ? base_dir_ / p : p;
  }

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  /// FNV-1a over the sorted effective entries, so overrides change the hash.
  /// `out` is left out: where results are written does not change them.
  std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [k, v] : entries_) {
      if (k == "out") continue;
      feed(k);
      feed("=");
      feed(v);
      feed("\n");
    }
    return h;
  }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::filesystem::path base_dir_;
};

namespace detail {

/// `fn(arg, arg)` -> {fn, args}.
inline std::pair<std::string, std::vector<std::string>> call_syntax(const std::string& spec) {
  const auto open = spec.find('(');
  if (open == std::string::npos || spec.back() != ')')
    throw ConfigError("expected 'kind(arguments)', got '" + spec + "'");
  std::string fn = trim(std::string_view(spec).substr(0, open));
  auto args = split(std::string_view(spec).substr(open + 1, spec.size() - open - 2), ',');
  return {std::move(fn), std::move(args)};
}

}  // namespace detail

/// `trace(attribute)` or `event(activity, attribute)`.
inline SituationFeature parse_feature_spec(const std::string& name, const std::string& spec) {
  auto [fn, args] = detail::call_syntax(spec);
  if (fn == "trace" && args.size() == 1) return SituationFeature::of_trace(name, args[0]);
  if (fn == "event" && args.size() == 2) return SituationFeature::of_activity(name, args[0], args[1]);
  throw ConfigError("feature '" + name + "': expected trace(attr) or event(activity, attr), got '" + spec + "'");
}

/// `trace(attribute)`, `event(activity, attribute)` or `duration(activity)`.
inline Placement parse_placement_spec(const std::string& name, const std::string& spec) {
  auto [fn, args] = detail::call_syntax(spec);
  if (fn == "trace" && args.size() == 1) return Placement::trace(args[0]);
  if (fn == "event" && args.size() == 2) return Placement::event(args[0], args[1]);
  if (fn == "duration" && args.size() == 1) return Placement::duration(args[0]);
  throw ConfigError("placement '" + name + "': expected trace(attr), event(activity, attr) or duration(activity), got '" +
                    spec + "'");
}

}  // namespace cfx

#endif  // CFX_CONFIG_HPP
