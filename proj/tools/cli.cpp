#include "cli.hpp"

#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "bbm/config.hpp"
#include "bbm/errors.hpp"
#include "bbm/experiments.hpp"
#include "bbm/report_io.hpp"

namespace bbm::cli {
namespace {

using experiments::ExperimentConfig;
using experiments::Verdict;
using experiments::VerdictStatus;

void add_common(CLI::App& sub, Invocation& inv, bool config_required) {
  auto* cfg = sub.add_option("-c,--config", inv.config, "experiment config file");
  if (config_required) cfg->required();
  sub.add_option("-o,--output", inv.output,
                 "output directory (default: config output, else ./results)");
  sub.add_option("--seed", inv.seed, "override the master seed");
  sub.add_option("-R,--replications", inv.replications,
                 "override the replication count")
      ->check(CLI::PositiveNumber);
  sub.add_option("-j,--workers", inv.workers,
                 "worker threads (default: available cores)");
  sub.add_flag("-v,--verbose", inv.verbosity, "progress on standard error");
}

int exit_code_for(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty()) return static_cast<int>(ExitCode::kPass);
  bool any_fail = false, all_inconclusive = true;
  for (const Verdict& v : verdicts) {
    any_fail |= v.status == VerdictStatus::kFail;
    all_inconclusive &= v.status == VerdictStatus::kInconclusive;
  }
  if (any_fail) return static_cast<int>(ExitCode::kFail);
  if (all_inconclusive) return static_cast<int>(ExitCode::kInconclusive);
  return static_cast<int>(ExitCode::kPass);
}

void report(const std::vector<Verdict>& verdicts) {
  for (const Verdict& v : verdicts) {
    std::cerr << '[' << experiments::to_string(v.status) << "] " << v.check
              << ": " << v.claim << " | expected " << v.expected
              << ", measured " << v.measured << ", se " << v.std_error
              << ", threshold " << v.threshold;
    if (!v.detail.empty()) std::cerr << " (" << v.detail << ')';
    std::cerr << '\n';
  }
}

class Session {
 public:
  explicit Session(const Invocation& inv) : inv_(inv) {}

  int run() {
    if (inv_.subcommand == "limits-selftest") return selftest();
    cfg_ = config::parse_config(inv_.config);
    if (inv_.seed) cfg_.master_seed = *inv_.seed;
    if (inv_.replications) cfg_.replications = *inv_.replications;
    if (inv_.workers) cfg_.workers = *inv_.workers;
    cfg_.validate();
    prepare_output(cfg_.output_dir);
    log("config " + inv_.config.string() + ", hash " +
        hex64(config::config_hash(cfg_)) + ", seed " +
        std::to_string(cfg_.master_seed));

    if (inv_.subcommand == "simulate") return simulate();
    if (inv_.subcommand == "ensemble") return ensemble(false);
    if (inv_.subcommand == "check") return ensemble(true);
    if (inv_.subcommand == "fluctuations") return fluctuations();
    if (inv_.subcommand == "overlap") return overlap();
    throw ConfigError("unknown subcommand '" + inv_.subcommand + "'");
  }

 private:
  void prepare_output(const std::filesystem::path& from_config) {
    out_dir_ = !inv_.output.empty()        ? inv_.output
               : !from_config.empty()      ? from_config
                                           : std::filesystem::path("results");
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) {
      throw std::runtime_error(out_dir_.string() +
                               ": cannot create output directory: " +
                               ec.message());
    }
  }

  std::filesystem::path file(const std::string& suffix) const {
    return out_dir_ / (cfg_.name + "." + suffix);
  }

  void log(const std::string& msg) const {
    if (inv_.verbosity > 0) std::cerr << "bbm: " << msg << '\n';
  }

  void write_metadata(std::size_t replications, std::size_t truncated,
                      std::size_t survived) const {
    experiments::RunMetadata meta{inv_.subcommand,
                                  experiments::resolve_workers(cfg_.workers),
                                  replications, truncated, survived};
    experiments::write_atomically(file("metadata.tsv"), [&](std::ostream& o) {
      experiments::write_metadata(o, cfg_, meta);
    });
  }

  void write_verdicts(const std::vector<Verdict>& verdicts) const {
    experiments::write_atomically(file("verdicts.tsv"), [&](std::ostream& o) {
      experiments::write_verdict_table(o, cfg_, verdicts);
    });
  }

  int simulate() {
    RngStream rng(cfg_.master_seed, inv_.replication);
    const Realization real = bbm::simulate(cfg_.sim, rng);
    const std::string prov = experiments::provenance_line(cfg_) +
                             " replication=" + std::to_string(inv_.replication);
    experiments::write_atomically(file("particles.tsv"), [&](std::ostream& o) {
      o << prov << '\n';
      write_particles(o, real);
    });
    experiments::write_atomically(file("snapshots.tsv"), [&](std::ostream& o) {
      o << prov << '\n';
      write_snapshots(o, real);
    });
    write_metadata(1, real.truncated() ? 1 : 0, real.survived() ? 1 : 0);
    std::cerr << "simulated " << real.particle_count() << " particles"
              << (real.truncated() ? " (truncated)" : "")
              << (real.survived() ? "" : ", extinct") << '\n';
    return static_cast<int>(ExitCode::kPass);
  }

  int ensemble(bool with_checks) {
    const auto start = std::chrono::steady_clock::now();
    const experiments::EnsembleSummary summary = experiments::run_ensemble(cfg_);
    log("ensemble of " + std::to_string(summary.replications) + " in " +
        std::to_string(std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count()) +
        " s");
    experiments::write_atomically(file("summary.tsv"), [&](std::ostream& o) {
      experiments::write_summary_table(o, summary);
    });
    if (cfg_.write_replications) {
      experiments::write_atomically(file("replications.tsv"), [&](std::ostream& o) {
        experiments::write_replication_table(o, summary);
      });
    }
    write_metadata(summary.replications, summary.truncated, summary.survived);
    std::cerr << "replications " << summary.replications << ", truncated "
              << summary.truncated << ", survived " << summary.survived << '\n';
    if (!with_checks) return static_cast<int>(ExitCode::kPass);
    const std::vector<Verdict> verdicts = experiments::run_checks(summary);
    write_verdicts(verdicts);
    report(verdicts);
    return exit_code_for(verdicts);
  }

  int fluctuations() {
    const experiments::FluctuationReport rep =
        experiments::fluctuation_experiment(cfg_);
    experiments::write_atomically(file("fluctuations.tsv"), [&](std::ostream& o) {
      experiments::write_fluctuation_table(o, cfg_, rep);
    });
    write_verdicts(rep.verdicts);
    write_metadata(rep.replications, 0, rep.used);
    report(rep.verdicts);
    return exit_code_for(rep.verdicts);
  }

  int overlap() {
    const experiments::OverlapDecayReport rep =
        experiments::overlap_decay_experiment(cfg_);
    experiments::write_atomically(file("overlap.tsv"), [&](std::ostream& o) {
      experiments::write_overlap_table(o, cfg_, rep);
    });
    write_verdicts(rep.verdicts);
    write_metadata(cfg_.replications, 0,
                   rep.survivors.empty() ? 0 : rep.survivors.back());
    report(rep.verdicts);
    return exit_code_for(rep.verdicts);
  }

  int selftest() {
    experiments::SelfTestSettings st;
    if (!inv_.config.empty()) {
      cfg_ = config::parse_config(inv_.config);
      st.master_seed = cfg_.master_seed;
      st.se_multiplier = cfg_.tests.se_multiplier;
      st.significance = cfg_.tests.significance;
    } else {
      cfg_.name = "limits_selftest";
    }
    if (inv_.seed) st.master_seed = cfg_.master_seed = *inv_.seed;
    prepare_output(cfg_.output_dir);
    const std::vector<Verdict> verdicts = experiments::limits_selftest(st);
    write_verdicts(verdicts);
    write_metadata(0, 0, 0);
    report(verdicts);
    return exit_code_for(verdicts);
  }

  const Invocation& inv_;
  ExperimentConfig cfg_;
  std::filesystem::path out_dir_;
};

}  // namespace

std::optional<Invocation> parse_arguments(int argc, const char* const* argv,
                                          int& exit_code) {
  CLI::App app{"Branching Brownian motion simulator and statistical checks",
               "bbm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(experiments::version()));
  // One Invocation per subcommand: CLI11 resets variables bound by
  // subcommands that were not selected.
  std::map<std::string, Invocation> invocations;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    add_common(*sub, invocations[name], name != "limits-selftest");
    return sub;
  };

  add("simulate", "simulate one realization and dump it")
      ->add_option("--replication", invocations["simulate"].replication,
                   "stream index of the realization (default 0)");
  add("ensemble", "run an ensemble, write summaries");
  add("check", "run an ensemble and its checks");
  add("fluctuations", "martingale fluctuation experiment");
  add("overlap", "overlap decay experiment");
  add("limits-selftest", "limit-law sampler self-tests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    exit_code = app.exit(e);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    exit_code = static_cast<int>(ExitCode::kError);
    return std::nullopt;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  Invocation inv = invocations.at(name);
  inv.subcommand = name;
  exit_code = 0;
  return inv;
}

int run(const Invocation& invocation) {
  try {
    return Session(invocation).run();
  } catch (const std::exception& e) {
    std::cerr << "bbm: error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kError);
  }
}

}  // namespace bbm::cli
