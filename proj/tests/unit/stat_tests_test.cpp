#include <gtest/gtest.h>

#include <cmath>

#include "bbm/rng.hpp"
#include "bbm/sampling.hpp"
#include "bbm/stat_tests.hpp"

namespace bbm::stat {
namespace {

std::vector<double> normals(std::size_t n, std::uint64_t stream, double shift = 0.0) {
  RngStream rng(31, stream);
  std::vector<double> out(n);
  for (auto& x : out) x = sample_gaussian_increment(1.0, rng) + shift;
  return out;
}

TEST(Summarize, IgnoresNaNAndComputesMoments) {
  const std::vector<double> v{1.0, 2.0, std::nan(""), 3.0, 4.0};
  const Summary s = summarize(v);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.std_error, std::sqrt(5.0 / 3.0 / 4.0));
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q25, 1.75);
}

TEST(Summarize, SingleValue) {
  const Summary s = summarize(std::vector<double>{7.0});
  EXPECT_EQ(s.count, 1u);
  EXPECT_EQ(s.mean, 7.0);
  EXPECT_EQ(s.median, 7.0);
}

TEST(Kolmogorov, KnownQuantile) {
  // The 5% critical value of the Kolmogorov distribution is 1.3581.
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
}

TEST(KsNormal, AcceptsNormalRejectsShifted) {
  EXPECT_GT(ks_normal(normals(10'000, 0)).p_value, 0.01);
  EXPECT_LT(ks_normal(normals(10'000, 1, 0.1)).p_value, 0.01);
}

TEST(KsTwoSample, SameAndDifferentLaws) {
  EXPECT_GT(ks_two_sample(normals(5'000, 2), normals(5'000, 3)).p_value, 0.01);
  EXPECT_LT(ks_two_sample(normals(5'000, 4), normals(5'000, 5, 0.2)).p_value, 0.01);
}

TEST(AndersonDarling, CdfKnownPoints) {
  // Limiting AD critical values: 2.492 at 5%, 3.857 at 1%.
  EXPECT_NEAR(anderson_darling_cdf(2.492), 0.95, 1e-3);
  EXPECT_NEAR(anderson_darling_cdf(3.857), 0.99, 1e-3);
  EXPECT_GT(anderson_darling_normal(normals(10'000, 6)).p_value, 0.01);
  EXPECT_LT(anderson_darling_normal(normals(10'000, 7, 0.1)).p_value, 0.01);
}

TEST(ChiSquare, PerfectFitAndDof) {
  const std::vector<double> obs{10, 20, 30}, exp{10, 20, 30};
  const auto r = chi_square_gof(obs, exp);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.dof, 2u);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  const auto fitted = chi_square_gof(obs, exp, 1);
  EXPECT_EQ(fitted.dof, 1u);
}

TEST(ChiSquare, KnownStatistic) {
  // Σ (o - e)²/e = 4/10 + 4/10 = 0.8 with one degree of freedom.
  const auto r = chi_square_gof(std::vector<double>{12, 8}, std::vector<double>{10, 10});
  EXPECT_NEAR(r.statistic, 0.8, 1e-15);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(0.4)), 1e-12);
}

TEST(Correlation, PearsonAndSpearman) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{1, 4, 9, 16, 1000};
  EXPECT_DOUBLE_EQ(spearman_correlation(x, y), 1.0);
  EXPECT_LT(pearson_correlation(x, y), 0.9);
  const std::vector<double> z{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(pearson_correlation(x, z), -1.0);
  // Ties share their mid-rank.
  const std::vector<double> t{1, 1, 2, 2, 3};
  EXPECT_NEAR(spearman_correlation(x, t), 0.9486832980505138, 1e-12);
}

TEST(FitLine, ExactAndWeighted) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  // A heavily down-weighted outlier barely moves the weighted fit.
  const std::vector<double> yo{1, 3, 5, 100}, sigma{1, 1, 1, 1e6};
  EXPECT_NEAR(fit_line(x, yo, sigma).slope, 2.0, 1e-6);
}

TEST(NormalCdf, Symmetry) {
  EXPECT_DOUBLE_EQ(standard_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(standard_normal_cdf(1.0) - standard_normal_cdf(-1.0), 0.682689492137086, 1e-14);
}

}  // namespace
}  // namespace bbm::stat
