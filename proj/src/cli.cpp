#include "semidfl/cli.hpp"

#include "semidfl/config.hpp"
#include "semidfl/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace semidfl {

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string format = "csv";
  bool quiet = false;
  std::optional<int> jobs;
};

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("config", o.config, "Config file")->required();
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--out", o.out_dir, "Output directory (SEMIDFL_OUT overrides)");
  cmd->add_option("--format", o.format, "Metrics format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--quiet", o.quiet, "Suppress progress output");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

std::filesystem::path output_dir(const Options& o) {
  if (const char* env = std::getenv("SEMIDFL_OUT"); env != nullptr && *env != '\0') return env;
  return o.out_dir;
}

ExperimentConfig load(const Options& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.jobs) cfg.run.jobs = *o.jobs;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  body(f);
  if (!f) throw Error("error while writing " + path.string());
}

void write_metrics(const std::filesystem::path& dir, const std::string& format,
                   const std::vector<RoundMetrics>& hist) {
  std::filesystem::create_directories(dir);
  if (format == "json") {
    write_file(dir / "metrics.json", [&](std::ostream& f) { f << metrics_json(hist).dump(2) << '\n'; });
  } else {
    write_file(dir / "metrics.csv", [&](std::ostream& f) { write_metrics_csv(f, hist); });
  }
}

int cmd_run(const Options& o, std::ostream& out) {
  const auto cfg = load(o);
  const auto dir = output_dir(o);
  for (int k = 0; k < cfg.run.repeats; ++k) {
    RunConfig rc = cfg.run;
    rc.seed = cfg.run.seed + static_cast<std::uint64_t>(k);
    RoundObserver observer;
    if (!o.quiet) {
      observer = [&](const RoundMetrics& m) {
        out << "seed " << rc.seed << " round " << m.round << " mean_acc " << format_double(m.mean_acc)
            << " std_acc " << format_double(m.std_acc) << " disagreement "
            << format_double(m.disagreement) << (m.regenerated ? " regenerated" : "") << '\n';
      };
    }
    const auto hist = run(rc, observer);
    const auto target = cfg.run.repeats > 1 ? dir / ("seed_" + std::to_string(rc.seed)) : dir;
    write_metrics(target, o.format, hist);
    if (!o.quiet) {
      out << "final mean_acc " << format_double(hist.back().mean_acc) << " +- "
          << format_double(hist.back().std_acc) << " -> " << target.string() << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  auto cfg = load(o);
  const auto dir = output_dir(o);
  const auto rows = run_matrix(cfg.run, cfg.sweep);
  std::filesystem::create_directories(dir);
  if (o.format == "json") {
    write_file(dir / "summary.json", [&](std::ostream& f) { f << sweep_json(rows).dump(2) << '\n'; });
  } else {
    write_file(dir / "summary.csv", [&](std::ostream& f) { write_sweep_csv(f, rows); });
  }
  if (!o.quiet) write_sweep_csv(out, rows);
  return 0;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto cfg = load(o);
  const auto topo = load_topology(cfg.run.topology);
  if (!o.quiet) {
    out << o.config << ": ok (" << topo.size() << " clients, " << topo.edges().size() << " edges, method "
        << to_string(cfg.run.method) << ", " << cfg.run.rounds << " rounds)\n";
  }
  return 0;
}

int cmd_presets(std::ostream& out) {
  for (const auto& name : preset_names()) {
    const auto topo = preset_topology(name);
    std::string roles;
    for (Role r : topo.roles()) roles += role_letter(r);
    out << name << "  " << roles << "  " << preset_description(name) << '\n';
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised decentralized federated learning simulator", "semidfl"};
  app.require_subcommand(1);
  Options run_opts, sweep_opts, validate_opts;
  auto* run_cmd = app.add_subcommand("run", "Execute one run and write per-round metrics");
  add_run_options(run_cmd, run_opts);
  auto* sweep_cmd = app.add_subcommand("sweep", "Execute the sweep matrix and write a summary");
  add_run_options(sweep_cmd, sweep_opts);
  auto* validate_cmd = app.add_subcommand("validate", "Check a config file without running");
  add_run_options(validate_cmd, validate_opts);
  auto* presets_cmd = app.add_subcommand("presets", "List built-in topologies");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "semidfl: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, out);
    if (*validate_cmd) return cmd_validate(validate_opts, out);
    if (*presets_cmd) return cmd_presets(out);
  } catch (const ConfigError& e) {
    err << "semidfl: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "semidfl: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace semidfl
