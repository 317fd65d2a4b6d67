#include "bbm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "bbm/errors.hpp"

namespace bbm {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[i] = kDigits[value & 0xf];
  return out;
}

namespace config {
namespace {

using experiments::ExperimentConfig;

struct Entry {
  std::string value;
  int line;
};

const std::map<std::string, std::set<std::string>>& grammar() {
  static const std::map<std::string, std::set<std::string>> g{
      {"experiment",
       {"name", "replications", "seed", "workers", "output",
        "write_replications"}},
      {"simulation",
       {"horizon", "snapshots", "snapshot_step", "offspring", "particle_cap",
        "retain_genealogy", "barrier"}},
      {"statistics",
       {"compute", "times", "betas", "a", "functions", "pair_functions",
        "sum_functions", "intervals", "extremal_levels"}},
      {"checks",
       {"run", "expect", "se_multiplier", "significance", "oracle_samples",
        "quadrature_tolerance", "min_survivors", "relative_tolerance"}},
      {"fluctuation", {"beta", "t", "gap", "hill_fractions", "hill_tolerance"}},
      {"overlap",
       {"beta", "a", "times", "slope_tolerance", "hill_fractions",
        "hill_tolerance"}},
  };
  return g;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

/// Splits on `sep` outside () and [] brackets.
std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (const char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  void load(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
      ++line_no;
      if (const auto hash = raw.find('#'); hash != std::string::npos) {
        raw.erase(hash);
      }
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (!grammar().contains(section)) {
          fail(line_no, "unknown section [" + section + "]");
        }
        sections_.insert(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
      if (section.empty()) fail(line_no, "key outside of any section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!grammar().at(section).contains(key)) {
        fail(line_no, "unknown key '" + key + "' in [" + section + "]");
      }
      const std::string full = section + "." + key;
      if (full == "checks.expect") {
        expects_.push_back({value, line_no});
        continue;
      }
      if (entries_.contains(full)) {
        fail(line_no, "duplicate key '" + full + "' (first set on line " +
                          std::to_string(entries_.at(full).line) + ")");
      }
      entries_[full] = {value, line_no};
    }
  }

  bool has_section(const std::string& s) const { return sections_.contains(s); }
  bool has(const std::string& key) const { return entries_.contains(key); }
  const std::vector<Entry>& expects() const { return expects_; }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
    const int line = entries_.contains(key) ? entries_.at(key).line : 0;
    if (line > 0) fail(line, key + ": " + msg);
    throw ConfigError(source_ + ": " + key + ": " + msg);
  }

  double number(const std::string& key, const std::string& text) const {
    const std::string t = strip_spaces(text);
    if (const auto slash = t.find('/'); slash != std::string::npos) {
      return number(key, t.substr(0, slash)) / number(key, t.substr(slash + 1));
    }
    if (t == "sqrt2") return std::numbers::sqrt2;
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
      fail_key(key, "'" + text + "' is not a number");
    }
    return v;
  }

  std::uint64_t integer(const std::string& key, const std::string& text) const {
    const std::string t = strip_spaces(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
      fail_key(key, "'" + text + "' is not a non-negative integer");
    }
    return v;
  }

  template <class T, class F>
  void get(const std::string& key, T& out, F convert) const {
    if (const auto it = entries_.find(key); it != entries_.end()) {
      out = convert(key, it->second.value);
    }
  }

  void get_number(const std::string& key, double& out) const {
    get(key, out, [&](const std::string& k, const std::string& v) {
      return number(k, v);
    });
  }
  template <class I>
  void get_integer(const std::string& key, I& out) const {
    get(key, out, [&](const std::string& k, const std::string& v) {
      return static_cast<I>(integer(k, v));
    });
  }
  void get_bool(const std::string& key, bool& out) const {
    get(key, out, [&](const std::string& k, const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      fail_key(k, "'" + v + "' is not a boolean");
    });
  }
  void get_string(const std::string& key, std::string& out) const {
    get(key, out, [](const std::string&, const std::string& v) { return v; });
  }
  void get_numbers(const std::string& key, std::vector<double>& out) const {
    get(key, out, [&](const std::string& k, const std::string& v) {
      std::vector<double> xs;
      for (const auto& item : split_top(v, ',')) xs.push_back(number(k, item));
      return xs;
    });
  }
  void get_list(const std::string& key, std::vector<std::string>& out) const {
    get(key, out, [&](const std::string&, const std::string& v) {
      std::vector<std::string> xs;
      for (const auto& item : split_top(v, ',')) xs.push_back(strip_spaces(item));
      return xs;
    });
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::vector<Entry> expects_;
  std::set<std::string> sections_;
};

void add_time(std::vector<double>& times, double t) {
  for (const double s : times) {
    if (std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t))) return;
  }
  times.push_back(t);
}

ExperimentConfig interpret(const Reader& r) {
  ExperimentConfig cfg;

  r.get_string("experiment.name", cfg.name);
  r.get_integer("experiment.replications", cfg.replications);
  r.get_integer("experiment.seed", cfg.master_seed);
  r.get_integer("experiment.workers", cfg.workers);
  std::string output;
  r.get_string("experiment.output", output);
  cfg.output_dir = output;
  r.get_bool("experiment.write_replications", cfg.write_replications);

  // Offspring law: "binary" or "k:weight, ..."; weights may be fractions.
  if (r.has("simulation.offspring")) {
    std::string spec;
    r.get_string("simulation.offspring", spec);
    if (strip_spaces(spec) != "binary") {
      std::map<int, double> weights;
      for (const auto& item : split_top(spec, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
          r.fail_key("simulation.offspring", "expected 'k:weight' pairs");
        }
        const auto k = r.integer("simulation.offspring", item.substr(0, colon));
        if (k > 1000) r.fail_key("simulation.offspring", "k above 1000");
        weights[static_cast<int>(k)] +=
            r.number("simulation.offspring", item.substr(colon + 1));
      }
      try {
        cfg.sim.offspring = OffspringDistribution(weights);
      } catch (const ValidationError& e) {
        r.fail_key("simulation.offspring", e.what());
      }
    }
  }
  r.get_integer("simulation.particle_cap", cfg.sim.particle_cap);
  r.get_bool("simulation.retain_genealogy", cfg.sim.retain_genealogy);
  if (r.has("simulation.barrier")) {
    std::vector<double> b;
    r.get_numbers("simulation.barrier", b);
    if (b.size() != 2) {
      r.fail_key("simulation.barrier", "expected 'slope, offset'");
    }
    cfg.sim.barrier = Barrier{b[0], b[1]};
  }

  std::vector<std::string> compute;
  r.get_list("statistics.compute", compute);
  for (const auto& name : compute) {
    const auto kind = experiments::stat_kind_from_string(name);
    if (!kind) r.fail_key("statistics.compute", "unknown statistic '" + name + "'");
    cfg.compute.push_back(*kind);
  }
  r.get_numbers("statistics.times", cfg.times);
  r.get_numbers("statistics.betas", cfg.betas);
  r.get_numbers("statistics.a", cfg.a_grid);
  r.get_list("statistics.functions", cfg.functions);
  r.get_list("statistics.pair_functions", cfg.pair_functions);
  r.get_list("statistics.sum_functions", cfg.sum_functions);
  r.get_numbers("statistics.extremal_levels", cfg.extremal_levels);
  if (r.has("statistics.intervals")) {
    std::vector<std::string> items;
    r.get_list("statistics.intervals", items);
    for (const auto& item : items) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        r.fail_key("statistics.intervals", "expected 's:t' pairs");
      }
      cfg.intervals.emplace_back(
          r.number("statistics.intervals", item.substr(0, colon)),
          r.number("statistics.intervals", item.substr(colon + 1)));
    }
  }

  if (r.has("checks.run")) {
    std::vector<std::string> items;
    r.get_list("checks.run", items);
    for (const auto& item : items) {
      experiments::CheckRequest req;
      const auto open = item.find('(');
      req.name = item.substr(0, open);
      if (open != std::string::npos) {
        if (item.back() != ')') r.fail_key("checks.run", "missing ')' in " + item);
        req.args = split_top(item.substr(open + 1, item.size() - open - 2), ',');
      }
      cfg.checks.push_back(std::move(req));
    }
  }
  for (const Entry& e : r.expects()) {
    const auto space = e.value.find_last_of(" \t");
    if (space == std::string::npos) {
      r.fail(e.line, "checks.expect: expected '<statistic label> <value>'");
    }
    cfg.expectations.push_back(
        {strip_spaces(e.value.substr(0, space)),
         r.number("checks.expect", e.value.substr(space + 1))});
  }
  r.get_number("checks.se_multiplier", cfg.tests.se_multiplier);
  r.get_number("checks.significance", cfg.tests.significance);
  r.get_integer("checks.oracle_samples", cfg.tests.oracle_samples);
  r.get_number("checks.quadrature_tolerance", cfg.tests.quadrature_tolerance);
  r.get_integer("checks.min_survivors", cfg.tests.min_survivors);
  r.get_number("checks.relative_tolerance", cfg.tests.relative_tolerance);

  if (r.has_section("fluctuation")) {
    experiments::FluctuationSettings fs;
    r.get_number("fluctuation.beta", fs.beta);
    r.get_number("fluctuation.t", fs.t);
    r.get_number("fluctuation.gap", fs.gap);
    r.get_numbers("fluctuation.hill_fractions", fs.hill_fractions);
    r.get_number("fluctuation.hill_tolerance", fs.hill_tolerance);
    cfg.fluctuation = fs;
  }
  if (r.has_section("overlap")) {
    experiments::OverlapDecaySettings os;
    r.get_number("overlap.beta", os.beta);
    r.get_number("overlap.a", os.a);
    r.get_numbers("overlap.times", os.times);
    r.get_number("overlap.slope_tolerance", os.slope_tolerance);
    r.get_numbers("overlap.hill_fractions", os.hill_fractions);
    r.get_number("overlap.hill_tolerance", os.hill_tolerance);
    cfg.overlap = os;
  }

  // Horizon defaults to the latest time anything needs.
  if (r.has("simulation.horizon")) {
    r.get_number("simulation.horizon", cfg.sim.horizon);
  } else {
    double h = 0.0;
    for (const double t : cfg.times) h = std::max(h, t);
    for (const auto& iv : cfg.intervals) h = std::max(h, iv.second);
    if (cfg.fluctuation) h = std::max(h, cfg.fluctuation->t + cfg.fluctuation->gap);
    if (cfg.overlap) {
      for (const double t : cfg.overlap->times) h = std::max(h, t);
    }
    if (!(h > 0.0)) {
      throw ConfigError(r.source() +
                        ": simulation.horizon: required (no statistic time "
                        "implies one)");
    }
    cfg.sim.horizon = h;
  }
  if (cfg.times.empty()) cfg.times = {cfg.sim.horizon};
  if (cfg.compute.empty()) cfg.compute = {experiments::StatKind::kCount};
  if (cfg.betas.empty()) cfg.betas = {0.0};
  std::sort(cfg.times.begin(), cfg.times.end());
  try {
    cfg.betas = stats::BetaGrid(cfg.betas).values();
  } catch (const std::exception& e) {
    r.fail_key("statistics.betas", e.what());
  }

  // Snapshot grid: explicit list, else everything the statistics need; plus
  // an optional regular grid.
  std::vector<double> snaps;
  if (r.has("simulation.snapshots")) {
    r.get_numbers("simulation.snapshots", snaps);
  } else {
    snaps = cfg.required_snapshot_times();
  }
  double step = 0.0;
  r.get_number("simulation.snapshot_step", step);
  if (step < 0.0) r.fail_key("simulation.snapshot_step", "must be > 0");
  if (step > 0.0) {
    for (std::size_t k = 1; k * step <= cfg.sim.horizon * (1 + 1e-12); ++k) {
      add_time(snaps, std::min(static_cast<double>(k) * step, cfg.sim.horizon));
    }
  }
  std::vector<double> unique;
  std::sort(snaps.begin(), snaps.end());
  for (const double t : snaps) add_time(unique, t);
  cfg.sim.snapshot_times = unique;

  cfg.validate();
  return cfg;
}

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (const double x : xs) out += (out.empty() ? "" : ", ") + num(x);
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text,
                                   std::string_view source) {
  Reader reader{std::string(source)};
  reader.load(text);
  return interpret(reader);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n"
      << "name = " << cfg.name << "\n"
      << "replications = " << cfg.replications << "\n"
      << "seed = " << cfg.master_seed << "\n"
      << "workers = " << cfg.workers << "\n";
  if (!cfg.output_dir.empty()) out << "output = " << cfg.output_dir.string() << "\n";
  out << "write_replications = " << (cfg.write_replications ? "true" : "false")
      << "\n\n[simulation]\n"
      << "horizon = " << num(cfg.sim.horizon) << "\n"
      << "snapshots = " << join_numbers(cfg.sim.snapshot_times) << "\n"
      << "offspring = ";
  bool first = true;
  for (const auto& [k, w] : cfg.sim.offspring.weights()) {
    if (w == 0.0) continue;
    out << (first ? "" : ", ") << k << ":" << num(w);
    first = false;
  }
  out << "\nparticle_cap = " << cfg.sim.particle_cap << "\n"
      << "retain_genealogy = " << (cfg.sim.retain_genealogy ? "true" : "false")
      << "\n";
  if (cfg.sim.barrier) {
    out << "barrier = " << num(cfg.sim.barrier->slope) << ", "
        << num(cfg.sim.barrier->offset) << "\n";
  }
  std::vector<std::string> compute;
  for (const auto k : cfg.compute) compute.push_back(experiments::to_string(k));
  out << "\n[statistics]\n"
      << "compute = " << join(compute) << "\n"
      << "times = " << join_numbers(cfg.times) << "\n"
      << "betas = " << join_numbers(cfg.betas) << "\n";
  if (!cfg.a_grid.empty()) out << "a = " << join_numbers(cfg.a_grid) << "\n";
  if (!cfg.functions.empty()) out << "functions = " << join(cfg.functions) << "\n";
  if (!cfg.pair_functions.empty()) {
    out << "pair_functions = " << join(cfg.pair_functions) << "\n";
  }
  if (!cfg.sum_functions.empty()) {
    out << "sum_functions = " << join(cfg.sum_functions) << "\n";
  }
  if (!cfg.intervals.empty()) {
    out << "intervals = ";
    for (std::size_t i = 0; i < cfg.intervals.size(); ++i) {
      out << (i ? ", " : "") << num(cfg.intervals[i].first) << ":"
          << num(cfg.intervals[i].second);
    }
    out << "\n";
  }
  if (!cfg.extremal_levels.empty()) {
    out << "extremal_levels = " << join_numbers(cfg.extremal_levels) << "\n";
  }
  out << "\n[checks]\n";
  if (!cfg.checks.empty()) {
    std::vector<std::string> runs;
    for (const auto& c : cfg.checks) {
      runs.push_back(c.args.empty() ? c.name : c.name + "(" + join(c.args) + ")");
    }
    out << "run = " << join(runs) << "\n";
  }
  for (const auto& e : cfg.expectations) {
    out << "expect = " << e.label << " " << num(e.value) << "\n";
  }
  out << "se_multiplier = " << num(cfg.tests.se_multiplier) << "\n"
      << "significance = " << num(cfg.tests.significance) << "\n"
      << "oracle_samples = " << cfg.tests.oracle_samples << "\n"
      << "quadrature_tolerance = " << num(cfg.tests.quadrature_tolerance) << "\n"
      << "min_survivors = " << cfg.tests.min_survivors << "\n"
      << "relative_tolerance = " << num(cfg.tests.relative_tolerance) << "\n";
  if (cfg.fluctuation) {
    const auto& f = *cfg.fluctuation;
    out << "\n[fluctuation]\n"
        << "beta = " << num(f.beta) << "\n"
        << "t = " << num(f.t) << "\n"
        << "gap = " << num(f.gap) << "\n"
        << "hill_fractions = " << join_numbers(f.hill_fractions) << "\n"
        << "hill_tolerance = " << num(f.hill_tolerance) << "\n";
  }
  if (cfg.overlap) {
    const auto& o = *cfg.overlap;
    out << "\n[overlap]\n"
        << "beta = " << num(o.beta) << "\n"
        << "a = " << num(o.a) << "\n"
        << "times = " << join_numbers(o.times) << "\n"
        << "slope_tolerance = " << num(o.slope_tolerance) << "\n"
        << "hill_fractions = " << join_numbers(o.hill_fractions) << "\n"
        << "hill_tolerance = " << num(o.hill_tolerance) << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // Execution knobs that cannot change results are left out.
  ExperimentConfig identity = cfg;
  identity.workers = 0;
  identity.output_dir.clear();
  return fnv1a64(to_config_text(identity));
}

}  // namespace config
}  // namespace bbm
