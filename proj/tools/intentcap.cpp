// intentcap: pool building, benchmark generation, evaluation and reporting.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "intentcap/app/commands.hpp"

namespace {

template <typename T>
std::vector<T> split_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = intentcap::trim(item);
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, int>) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw intentcap::ConfigError("not an integer: '" + item + "'");
      out.push_back(v);
    } else {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("intentcap"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Intention capture benchmark and evaluation tool"};
  app.require_subcommand(1);

  std::string config_path = "intentcap.json";
  std::string seed, levels, samples, mode, workers, metrics, models;
  bool resume = false, verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)");
    sub->add_option("--seed", seed, "Master RNG seed");
    sub->add_option("--levels", levels, "Comma-separated mixed intention levels");
    sub->add_option("--samples-per-level", samples, "Samples per level");
    sub->add_option("--mode", mode, "live, record or replay");
    sub->add_option("--workers", workers, "Concurrent samples");
    sub->add_option("--metrics", metrics, "Comma-separated set-similarity metrics");
    sub->add_option("--models", models, "Comma-separated subset of configured model ids");
  };

  std::string catalog, pools_out;
  auto* pool_build = app.add_subcommand("pool-build", "Build element pools from a service catalog");
  pool_build->add_option("--config", config_path, "Run configuration (JSON)");
  pool_build->add_option("--catalog", catalog, "Catalog file (overrides the config)");
  pool_build->add_option("--out", pools_out, "Pools file (overrides the config)");

  auto* bench_gen = app.add_subcommand("bench-gen", "Generate the benchmark");
  add_common(bench_gen);
  auto* eval_run = app.add_subcommand("eval-run", "Evaluate models on the benchmark");
  add_common(eval_run);
  eval_run->add_flag("--resume", resume, "Keep finished records from an interrupted run");

  std::string results_dir;
  auto* report = app.add_subcommand("report", "Rebuild aggregates and the report from records");
  report->add_option("--config", config_path, "Run configuration (JSON)");
  report->add_option("--results", results_dir, "Results directory (overrides the config)");

  std::string cassette_path;
  auto* cassette = app.add_subcommand("cassette", "Inspect a cassette file");
  cassette->require_subcommand(1);
  auto* cassette_ls = cassette->add_subcommand("ls", "List exchanges");
  cassette_ls->add_option("path", cassette_path, "Cassette file")->required();
  auto* cassette_verify = cassette->add_subcommand("verify", "Check hashes and duplicates");
  cassette_verify->add_option("path", cassette_path, "Cassette file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  using namespace intentcap;
  try {
    auto load = [&] {
      auto cfg = app::load_config(config_path);
      app::Overrides o;
      if (!seed.empty()) {
        std::size_t used = 0;
        try {
          o.seed = std::stoull(seed, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != seed.size() || seed.front() == '-') throw ConfigError("--seed must be an unsigned integer");
      }
      auto single = [](const std::string& flag, const std::string& v) {
        const auto list = split_list<int>(v);
        if (list.size() != 1) throw ConfigError(flag + " takes one integer");
        return list.front();
      };
      if (!levels.empty()) o.levels = split_list<int>(levels);
      if (!samples.empty()) o.samples_per_level = single("--samples-per-level", samples);
      if (!mode.empty()) o.mode = mode;
      if (!workers.empty()) o.workers = single("--workers", workers);
      if (!metrics.empty()) o.metrics = split_list<std::string>(metrics);
      if (!models.empty()) o.models = split_list<std::string>(models);
      o.apply(cfg);
      return cfg;
    };

    if (*pool_build) {
      std::filesystem::path cat = catalog, out = pools_out;
      if (cat.empty() || out.empty()) {
        const auto cfg = app::load_config(config_path);
        if (cat.empty()) cat = cfg.catalog;
        if (out.empty()) out = cfg.pools_file;
      }
      return app::cmd_pool_build(cat, out, std::cout);
    }
    if (*bench_gen) return app::cmd_bench_gen(load(), std::cout);
    if (*eval_run) return app::cmd_eval_run(load(), resume, std::cout);
    if (*report) {
      std::filesystem::path dir = results_dir;
      if (dir.empty()) dir = app::load_config(config_path).results_dir;
      return app::cmd_report(dir, std::cout);
    }
    if (*cassette_ls) return app::cmd_cassette_ls(cassette_path, std::cout);
    if (*cassette_verify) return app::cmd_cassette_verify(cassette_path, std::cout);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 2;
}
