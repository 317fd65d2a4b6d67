// Acceptance driver: one PASS/FAIL line per criterion on standard output,
// the underlying verdicts on standard error. Exit status 0 iff every
// requested criterion passes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bbm/config.hpp"
#include "bbm/experiments.hpp"
#include "support/brute_force.hpp"

namespace {

namespace ex = bbm::experiments;

using Filter = std::function<bool(const ex::Verdict&)>;

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::filesystem::path config_path(const std::string& file) {
  return std::filesystem::path(BBM_SOURCE_DIR) / "configs" / "acceptance" / file;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

// A criterion passes iff at least one verdict is selected and every selected
// verdict passes; inconclusive counts as not passing.
Outcome judge(const std::vector<ex::Verdict>& verdicts, const Filter& keep) {
  std::size_t selected = 0;
  std::size_t passed = 0;
  for (const ex::Verdict& v : verdicts) {
    const bool used = keep(v);
    std::cerr << "  " << (used ? "" : "(info) ") << v.check << ": " << v.claim
              << " -> " << ex::to_string(v.status) << "; expected " << v.expected
              << ", measured " << v.measured << ", se " << v.std_error
              << ", threshold " << v.threshold << "; " << v.detail << '\n';
    if (!used) continue;
    ++selected;
    if (v.status == ex::VerdictStatus::kPass) ++passed;
  }
  std::ostringstream s;
  s << passed << "/" << selected << " verdicts pass";
  return {selected > 0 && passed == selected, s.str()};
}

Outcome ensemble(const std::string& file, const Filter& keep) {
  const ex::ExperimentConfig cfg = bbm::config::parse_config(config_path(file));
  const ex::EnsembleSummary summary = ex::run_ensemble(cfg);
  return judge(ex::run_checks(summary), keep);
}

Filter by_check(std::string check) {
  return [check = std::move(check)](const ex::Verdict& v) { return v.check == check; };
}

Outcome criterion(int n) {
  switch (n) {
    case 1:
      return ensemble("01_population_mean.ini", [](const ex::Verdict& v) {
        return v.check == "population_moments" && starts_with(v.claim, "E n(");
      });
    case 2:
      return ensemble("02_geometric.ini", [](const ex::Verdict& v) {
        return v.check == "population_moments" &&
               v.claim.find("Geometric") != std::string::npos;
      });
    case 3:
      return ensemble("03_martingale.ini", by_check("martingale"));
    case 4:
      return ensemble("04_second_moment.ini", by_check("second_moment"));
    case 5:
      return ensemble("05_death_functional.ini", by_check("death_functional"));
    case 6:
      return ensemble("06_many_to_one.ini", by_check("many_to_one"));
    case 7:
      return ensemble("07_barrier.ini", by_check("barrier_bound"));
    case 8: {
      const auto r = bbm::testing::compare_grouped_with_pairwise(20240601, 100, 200);
      std::ostringstream s;
      s << r.trees << " trees, " << r.comparisons
        << " comparisons, max relative error " << r.max_relative_error;
      if (!r.worst.empty()) s << " (" << r.worst << ")";
      return {r.trees == 100 && r.max_relative_error <= 1e-10, s.str()};
    }
    case 9:
      return ensemble("09_functional_limit.ini", by_check("functional_limit"));
    case 10:
      return ensemble("10_growth_rate.ini", by_check("growth_limit"));
    case 11: {
      const auto cfg = bbm::config::parse_config(config_path("11_gaussian_fluctuations.ini"));
      return judge(ex::fluctuation_experiment(cfg).verdicts, [](const ex::Verdict& v) {
        return starts_with(v.claim, "KS normality");
      });
    }
    case 12: {
      const auto cfg = bbm::config::parse_config(config_path("12_stable_tail.ini"));
      return judge(ex::fluctuation_experiment(cfg).verdicts, by_check("fluctuations"));
    }
    case 13: {
      const auto cfg = bbm::config::parse_config(config_path("13_overlap_decay.ini"));
      return judge(ex::overlap_decay_experiment(cfg).verdicts, [](const ex::Verdict& v) {
        return v.check == "overlap_decay" && starts_with(v.claim, "slope of ln E");
      });
    }
    case 14:
      return ensemble("14_critical_scaling.ini", by_check("critical_scaling"));
    case 15:
      return judge(ex::limits_selftest(ex::SelfTestSettings{}), by_check("limits_selftest"));
    default:
      throw std::invalid_argument("no criterion " + std::to_string(n));
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (int n = 1; n <= 15; ++n) wanted.push_back(n);
  }

  bool all_pass = true;
  for (const int n : wanted) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criterion(n);
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << n << ": " << (out.pass ? "PASS" : "FAIL") << " ("
              << out.summary << "; " << std::lround(secs) << " s)" << std::endl;
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
