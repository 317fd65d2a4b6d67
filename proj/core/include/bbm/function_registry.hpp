#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bbm {

/// A scalar function with a stable textual id, so experiment configs can
/// name it. Grammar (whitespace ignored):
///
///   one                      f(x) = 1
///   identity                 f(x) = x
///   indicator[lo,hi]         1 on the closed interval; lo/hi may be ±inf
///   poly[c0,c1,c2]           c0 + c1 x + c2 x², one to three coefficients
///   gauss[mu,sigma]          exp(-(x-mu)²/(2 sigma²))
///   exp[c]                   e^{c x}
struct NamedFunction {
  std::string id;
  std::function<double(double)> fn;
  /// Finite points where fn jumps; quadrature splits there.
  std::vector<double> breakpoints = {};

  double operator()(double x) const { return fn(x); }
};

/// Throws ConfigError for an unknown name or malformed argument list.
NamedFunction parse_function(std::string_view id);

}  // namespace bbm
