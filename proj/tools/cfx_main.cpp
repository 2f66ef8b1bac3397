// cfx: counterfactual explanations for process outcomes.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfx/cli.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "flat key = value config file");
  cmd->add_option("--set", c.overrides, "override a config entry, key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "random seed (overrides 'seed')");
  cmd->add_option("-o,--out", c.out, "output directory (overrides 'out')");
}

cfx::Config load(const Common& c) {
  cfx::Config config = c.config.empty() ? cfx::Config{} : cfx::Config::load(c.config);
  for (const auto& o : c.overrides) config.apply_override(o);
  if (c.seed) config.set("seed", std::to_string(*c.seed));
  if (c.out) config.set("out", std::filesystem::absolute(*c.out).string());
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations for process outcomes from structural equation models"};
  app.require_subcommand(1);

  Common common;
  std::string sem_path;
  std::optional<std::string> case_id;
  std::optional<std::size_t> prefix;

  auto* synth = app.add_subcommand("synth", "sample a SEM into a synthetic event log (log.csv, truth.csv)");
  add_common(synth, common);

  auto* extract = app.add_subcommand("extract", "build the situation feature table (table.csv, table.json)");
  add_common(extract, common);

  auto* sem = app.add_subcommand("sem", "SEM utilities");
  sem->require_subcommand(1);
  auto* check = sem->add_subcommand("check", "validate a SEM and print its parent graph in DOT");
  add_common(check, common);
  check->add_option("file", sem_path, "SEM file (overrides 'sem')");

  auto* explain = app.add_subcommand(
      "explain",
      "explain one case (explanations.txt/.json, explanations_plot.csv); exit 3 when nothing is desirable. "
      "Desirability is strict: 'below 500' excludes 500 itself");
  add_common(explain, common);
  explain->add_option("--case", case_id, "case id of the instance (overrides 'instance')");
  explain->add_option("--prefix", prefix, "prefix length of the situation (overrides 'instance.prefix')");

  auto* evaluate = app.add_subcommand("evaluate", "compare RT and LWL against the SEM (comparison.csv, fig4_*.csv)");
  add_common(evaluate, common);
  evaluate->add_option("--case", case_id, "case id of the instance (overrides 'instance')");
  evaluate->add_option("--prefix", prefix, "prefix length of the situation (overrides 'instance.prefix')");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cfx::cli::Usage;
  }

  cfx::cli::Streams io{std::cout, std::cerr};
  return cfx::cli::guarded(
      [&] {
        cfx::Config config = load(common);
        if (!sem_path.empty()) config.set("sem", std::filesystem::absolute(sem_path).string());
        if (case_id) config.set("instance", *case_id);
        if (prefix) config.set("instance.prefix", std::to_string(*prefix));
        cfx::cli::Run run(std::move(config));
        if (*synth) return cfx::cli::cmd_synth(run, io);
        if (*extract) return cfx::cli::cmd_extract(run, io);
        if (*check) return cfx::cli::cmd_sem_check(run, io);
        if (*explain) return cfx::cli::cmd_explain(run, io);
        return cfx::cli::cmd_evaluate(run, io);
      },
      io);
}
