#include "bbm/report_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <system_error>

#include "bbm/config.hpp"

namespace bbm::experiments {
namespace {

/// Shortest text that round-trips; NaN and infinities spelled out.
std::string cell(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Tabs and newlines would break the table layout.
std::string text_cell(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::string_view version() noexcept { return BBM_VERSION_STRING; }

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error(tmp.string() + ": cannot open for writing");
    }
    body(out);
    out.flush();
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error(path.string() + ": rename failed: " + ec.message());
  }
}

std::string provenance_line(const ExperimentConfig& cfg) {
  return "# bbm " + std::string(version()) +
         " config_hash=" + hex64(config::config_hash(cfg)) +
         " seed=" + std::to_string(cfg.master_seed);
}

void write_summary_table(std::ostream& out, const EnsembleSummary& summary) {
  out << provenance_line(summary.config) << '\n'
      << "statistic\tcount\tmean\tvariance\tstd_error\tq05\tq25\tmedian\tq75\tq95\n";
  for (const StatColumn& c : summary.columns) {
    const stat::Summary& s = c.summary;
    out << c.label << '\t' << s.count << '\t' << cell(s.mean) << '\t'
        << cell(s.variance) << '\t' << cell(s.std_error) << '\t' << cell(s.q05)
        << '\t' << cell(s.q25) << '\t' << cell(s.median) << '\t' << cell(s.q75)
        << '\t' << cell(s.q95) << '\n';
  }
}

void write_verdict_table(std::ostream& out, const ExperimentConfig& cfg,
                         const std::vector<Verdict>& verdicts) {
  out << provenance_line(cfg) << '\n'
      << "check\tclaim\tstatus\texpected\tmeasured\tstd_error\tthreshold\tdetail\n";
  for (const Verdict& v : verdicts) {
    out << v.check << '\t' << text_cell(v.claim) << '\t' << to_string(v.status)
        << '\t' << cell(v.expected) << '\t' << cell(v.measured) << '\t'
        << cell(v.std_error) << '\t' << cell(v.threshold) << '\t'
        << text_cell(v.detail) << '\n';
  }
}

void write_replication_table(std::ostream& out, const EnsembleSummary& summary) {
  out << provenance_line(summary.config) << '\n'
      << "replication\tstatistic\tvalue\tsurvived\n";
  for (std::size_t r = 0; r < summary.replications; ++r) {
    for (const StatColumn& c : summary.columns) {
      out << r << '\t' << c.label << '\t' << cell(c.samples[r]) << '\t'
          << (summary.survived_flags[r] ? 1 : 0) << '\n';
    }
  }
}

void write_metadata(std::ostream& out, const ExperimentConfig& cfg,
                    const RunMetadata& meta) {
  out << provenance_line(cfg) << '\n'
      << "version\t" << version() << '\n'
      << "command\t" << meta.command << '\n'
      << "config_hash\t" << hex64(config::config_hash(cfg)) << '\n'
      << "master_seed\t" << cfg.master_seed << '\n'
      << "workers\t" << meta.workers << '\n'
      << "replications\t" << meta.replications << '\n'
      << "truncated\t" << meta.truncated << '\n'
      << "survived\t" << meta.survived << '\n'
      << "\n# effective configuration\n"
      << config::to_config_text(cfg);
}

void write_fluctuation_table(std::ostream& out, const ExperimentConfig& cfg,
                             const FluctuationReport& report) {
  out << provenance_line(cfg) << '\n'
      << "# regime=" << limits::to_string(report.spec.regime)
      << " beta=" << cell(report.spec.beta) << '\n'
      << "index\trescaled\tstandardized\n";
  for (std::size_t i = 0; i < report.rescaled.size(); ++i) {
    out << i << '\t' << cell(report.rescaled[i]) << '\t'
        << cell(i < report.standardized.size() ? report.standardized[i]
                                               : std::nan(""))
        << '\n';
  }
  for (const auto& h : report.hill) {
    out << "# hill k=" << h.k << " fraction=" << cell(h.fraction)
        << " estimate=" << cell(h.estimate) << '\n';
  }
}

void write_overlap_table(std::ostream& out, const ExperimentConfig& cfg,
                         const OverlapDecayReport& report) {
  out << provenance_line(cfg) << '\n'
      << "# regime=" << limits::to_string(report.regime)
      << " expected_slope=" << cell(report.expected_slope)
      << " fitted_slope=" << cell(report.fit.slope)
      << " slope_se=" << cell(report.fit.slope_se)
      << " median_slope=" << cell(report.median_fit.slope)
      << " median_slope_se=" << cell(report.median_fit.slope_se) << '\n'
      << "t\tmean_mass\tstd_error\tmedian_mass\tmedian_std_error\tsurvivors\n";
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    out << cell(report.times[i]) << '\t' << cell(report.mean_mass[i]) << '\t'
        << cell(report.mean_mass_se[i]) << '\t' << cell(report.median_mass[i])
        << '\t' << cell(report.median_mass_se[i]) << '\t'
        << report.survivors[i] << '\n';
  }
}

}  // namespace bbm::experiments
