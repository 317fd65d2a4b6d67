#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bbm/experiments.hpp"

namespace bbm::experiments {

std::string_view version() noexcept;

/// Writes through `path` + ".tmp" and renames over `path`, so readers see
/// either the old file or the complete new one. Throws std::runtime_error
/// naming the path on I/O failure.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body);

/// "# bbm <version> config_hash=<hex> seed=<n>", first line of every table.
std::string provenance_line(const ExperimentConfig& cfg);

/// Columns: statistic count mean variance std_error q05 q25 median q75 q95.
void write_summary_table(std::ostream& out, const EnsembleSummary& summary);

/// Columns: check claim status expected measured std_error threshold detail.
void write_verdict_table(std::ostream& out, const ExperimentConfig& cfg,
                         const std::vector<Verdict>& verdicts);

/// Long format: replication statistic value survived.
void write_replication_table(std::ostream& out, const EnsembleSummary& summary);

struct RunMetadata {
  std::string command;
  unsigned workers = 1;
  std::size_t replications = 0;
  std::size_t truncated = 0;
  std::size_t survived = 0;
};

/// key<TAB>value lines followed by the canonical config text.
void write_metadata(std::ostream& out, const ExperimentConfig& cfg,
                    const RunMetadata& meta);

/// Columns: replication rescaled standardized.
void write_fluctuation_table(std::ostream& out, const ExperimentConfig& cfg,
                             const FluctuationReport& report);

/// Columns: t mean_mass std_error survivors.
void write_overlap_table(std::ostream& out, const ExperimentConfig& cfg,
                         const OverlapDecayReport& report);

}  // namespace bbm::experiments
