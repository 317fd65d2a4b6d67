#include "bbm/function_registry.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "bbm/errors.hpp"

namespace bbm {
namespace {

double parse_number(const std::string& text, std::string_view id) {
  if (text == "inf" || text == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("function '" + std::string(id) + "': bad number '" +
                      text + "'");
  }
  return value;
}

}  // namespace

NamedFunction parse_function(std::string_view id) {
  std::string compact;
  for (const char c : id) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  }

  std::string name = compact;
  std::vector<double> args;
  if (const auto open = compact.find('['); open != std::string::npos) {
    if (compact.back() != ']') {
      throw ConfigError("function '" + compact + "': missing ']'");
    }
    name = compact.substr(0, open);
    const std::string inner =
        compact.substr(open + 1, compact.size() - open - 2);
    std::size_t start = 0;
    while (start <= inner.size()) {
      const auto comma = inner.find(',', start);
      const auto stop = comma == std::string::npos ? inner.size() : comma;
      args.push_back(parse_number(inner.substr(start, stop - start), compact));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  auto expect_args = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw ConfigError("function '" + compact + "': wrong number of arguments");
    }
  };

  if (name == "one") {
    expect_args(0, 0);
    return {compact, [](double) { return 1.0; }};
  }
  if (name == "identity") {
    expect_args(0, 0);
    return {compact, [](double x) { return x; }};
  }
  if (name == "indicator") {
    expect_args(2, 2);
    const double lo = args[0];
    const double hi = args[1];
    if (!(lo <= hi)) {
      throw ConfigError("function '" + compact + "': need lo <= hi");
    }
    std::vector<double> jumps;
    if (std::isfinite(lo)) jumps.push_back(lo);
    if (std::isfinite(hi) && hi != lo) jumps.push_back(hi);
    return {compact,
            [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; },
            std::move(jumps)};
  }
  if (name == "poly") {
    expect_args(1, 3);
    args.resize(3, 0.0);
    const double c0 = args[0], c1 = args[1], c2 = args[2];
    return {compact, [c0, c1, c2](double x) { return c0 + x * (c1 + x * c2); }};
  }
  if (name == "gauss") {
    expect_args(2, 2);
    const double mu = args[0];
    const double sigma = args[1];
    if (!(sigma > 0.0)) {
      throw ConfigError("function '" + compact + "': sigma must be > 0");
    }
    return {compact, [mu, sigma](double x) {
              const double z = (x - mu) / sigma;
              return std::exp(-0.5 * z * z);
            }};
  }
  if (name == "exp") {
    expect_args(1, 1);
    const double c = args[0];
    return {compact, [c](double x) { return std::exp(c * x); }};
  }
  throw ConfigError("unknown function '" + compact +
                    "' (known: one, identity, indicator, poly, gauss, exp)");
}

}  // namespace bbm
