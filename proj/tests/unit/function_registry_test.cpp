#include <gtest/gtest.h>

#include <cmath>

#include "bbm/errors.hpp"
#include "bbm/function_registry.hpp"

namespace bbm {
namespace {

TEST(FunctionRegistry, KnownFunctions) {
  EXPECT_EQ(parse_function("one")(3.0), 1.0);
  EXPECT_EQ(parse_function("identity")(-2.5), -2.5);
  const auto ind = parse_function("indicator[-1, 1]");
  EXPECT_EQ(ind.id, "indicator[-1,1]");
  EXPECT_EQ(ind(-1.0), 1.0);
  EXPECT_EQ(ind(1.0), 1.0);
  EXPECT_EQ(ind(1.0001), 0.0);
  EXPECT_EQ(ind.breakpoints, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(parse_function("indicator[0,inf]")(1e300), 1.0);
  EXPECT_EQ(parse_function("indicator[0,inf]").breakpoints, (std::vector<double>{0.0}));
  EXPECT_EQ(parse_function("poly[1,2,3]")(2.0), 17.0);
  EXPECT_EQ(parse_function("poly[4]")(2.0), 4.0);
  EXPECT_NEAR(parse_function("gauss[1,2]")(3.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(parse_function("exp[0.5]")(2.0), std::exp(1.0), 1e-15);
}

TEST(FunctionRegistry, Errors) {
  EXPECT_THROW(parse_function("sin"), ConfigError);
  EXPECT_THROW(parse_function("indicator[1]"), ConfigError);
  EXPECT_THROW(parse_function("indicator[2,1]"), ConfigError);
  EXPECT_THROW(parse_function("indicator[0,1"), ConfigError);
  EXPECT_THROW(parse_function("gauss[0,0]"), ConfigError);
  EXPECT_THROW(parse_function("poly[1,x]"), ConfigError);
  EXPECT_THROW(parse_function("one[1]"), ConfigError);
}

}  // namespace
}  // namespace bbm
