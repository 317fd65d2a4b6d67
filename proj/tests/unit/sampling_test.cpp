#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bbm/sampling.hpp"
#include "bbm/stat_tests.hpp"

namespace bbm {
namespace {

constexpr double kSe = 4.0;

struct MeanVar {
  double mean = 0.0, var = 0.0;
  double se(std::size_t n) const { return std::sqrt(var / static_cast<double>(n)); }
};

MeanVar mean_var(const std::vector<double>& v) {
  MeanVar m;
  for (const double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (const double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

TEST(Offspring, BinaryMoments) {
  const auto m = offspring_moments(OffspringDistribution::binary());
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.factorial_moment, 2.0);
}

TEST(Offspring, ZeroOrThreeMoments) {
  const OffspringDistribution d({{0, 1.0 / 3.0}, {3, 2.0 / 3.0}});
  const auto m = offspring_moments(d);
  EXPECT_NEAR(m.mean, 2.0, 1e-15);
  EXPECT_NEAR(m.factorial_moment, 4.0, 1e-15);
  EXPECT_NEAR(d.extinction_weight(), 1.0 / 3.0, 1e-15);
}

TEST(Offspring, RejectsWrongMeanNamingTheInvariant) {
  try {
    OffspringDistribution d({{1, 1.0}});
    FAIL() << "accepted a mean-1 law";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("mean"), std::string::npos) << e.what();
  }
}

TEST(Offspring, RejectsUnnormalizedWeights) {
  try {
    OffspringDistribution d({{2, 0.9}});
    FAIL() << "accepted weights summing to 0.9";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("normalization"), std::string::npos) << e.what();
  }
}

TEST(Offspring, RejectsNegativeWeightsAndCounts) {
  EXPECT_THROW(OffspringDistribution({{1, -0.5}, {3, 1.5}}), ValidationError);
  EXPECT_THROW(OffspringDistribution({{-1, 0.5}, {5, 0.5}}), ValidationError);
}

TEST(Offspring, BinaryAlwaysTwo) {
  RngStream rng(5, 0);
  const auto d = OffspringDistribution::binary();
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_offspring(d, rng), 2);
}

TEST(Offspring, FrequencyOfZeroMatchesWeight) {
  const OffspringDistribution d({{0, 1.0 / 3.0}, {3, 2.0 / 3.0}});
  RngStream rng(5, 1);
  constexpr int n = 1'000'000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const int k = sample_offspring(d, rng);
    ASSERT_TRUE(k == 0 || k == 3);
    zeros += k == 0;
  }
  const double p = 1.0 / 3.0;
  EXPECT_NEAR(static_cast<double>(zeros) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Lifetime, MeanAndTail) {
  RngStream rng(6, 0);
  constexpr int n = 1'000'000;
  std::vector<double> x(n);
  int beyond_one = 0;
  for (auto& v : x) {
    v = sample_lifetime(rng);
    ASSERT_GT(v, 0.0);
    beyond_one += v > 1.0;
  }
  const auto m = mean_var(x);
  EXPECT_NEAR(m.mean, 1.0, kSe * m.se(n));
  const double p = std::exp(-1.0);
  EXPECT_NEAR(static_cast<double>(beyond_one) / n, p,
              kSe * std::sqrt(p * (1 - p) / n));
}

TEST(GaussianIncrement, ZeroStepIsExactlyZero) {
  RngStream rng(7, 0);
  const auto before = RngStream(7, 0)();
  EXPECT_EQ(sample_gaussian_increment(0.0, rng), 0.0);
  EXPECT_EQ(rng(), before);  // no draw consumed
}

TEST(GaussianIncrement, NegativeStepThrows) {
  RngStream rng(7, 0);
  EXPECT_THROW(sample_gaussian_increment(-1e-9, rng), ArgumentError);
  EXPECT_THROW(sample_gaussian_increment(std::nan(""), rng), ArgumentError);
}

TEST(GaussianIncrement, VarianceScalesWithStep) {
  constexpr int n = 1'000'000;
  for (const double dt : {1.0, 4.0}) {
    RngStream rng(8, static_cast<std::uint64_t>(dt));
    std::vector<double> x(n), sq(n);
    for (int i = 0; i < n; ++i) {
      x[i] = sample_gaussian_increment(dt, rng);
      sq[i] = x[i] * x[i];
    }
    // Var of the squares is 2 dt²; the sample variance is their mean.
    const auto m = mean_var(sq);
    EXPECT_NEAR(m.mean, dt, kSe * m.se(n)) << "dt = " << dt;
    EXPECT_NEAR(std::sqrt(m.mean), std::sqrt(dt), 0.01 * std::sqrt(dt));
  }
}

double mean_ppp_count(double floor, std::uint64_t stream, int draws) {
  RngStream rng(9, stream);
  double total = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto atoms = sample_exponential_ppp(floor, rng);
    total += static_cast<double>(atoms.size());
  }
  return total / draws;
}

TEST(ExponentialPpp, AtomsSortedDecreasingAboveFloor) {
  RngStream rng(9, 99);
  for (int i = 0; i < 1000; ++i) {
    const auto atoms = sample_exponential_ppp(-2.0, rng);
    ASSERT_TRUE(std::is_sorted(atoms.rbegin(), atoms.rend()));
    for (const double p : atoms) ASSERT_GE(p, -2.0);
  }
}

TEST(ExponentialPpp, MeanCountIsIntensityMass) {
  constexpr int n = 1'000'000;
  // Poisson(λ) counts: SE = sqrt(λ/n).
  EXPECT_NEAR(mean_ppp_count(0.0, 0, n), 1.0, kSe * std::sqrt(1.0 / n));
  const double floor2 = -std::log(2.0) / std::numbers::sqrt2;
  EXPECT_NEAR(mean_ppp_count(floor2, 1, n), 2.0, kSe * std::sqrt(2.0 / n));
}

TEST(ExponentialPpp, HighFloorIsAlmostAlwaysEmpty) {
  RngStream rng(9, 2);
  int nonempty = 0;
  for (int i = 0; i < 100'000; ++i) nonempty += !sample_exponential_ppp(10.0, rng).empty();
  EXPECT_EQ(nonempty, 0);
}

TEST(ExponentialPpp, CountsInWindowArePoisson) {
  // Count in [0, 1]: mean and variance e^0 - e^{-√2}.
  RngStream rng(9, 3);
  constexpr int n = 200'000;
  std::vector<double> counts(n);
  for (auto& c : counts) {
    for (const double p : sample_exponential_ppp(0.0, rng)) c += p <= 1.0;
  }
  const double lambda = 1.0 - std::exp(-std::numbers::sqrt2);
  const auto m = mean_var(counts);
  EXPECT_NEAR(m.mean, lambda, kSe * std::sqrt(lambda / n));
  // Dispersion index of a Poisson count is 1; its SE is about sqrt(2/n).
  EXPECT_NEAR(m.var / m.mean, 1.0, kSe * std::sqrt(2.0 / n));
}

std::vector<double> stable_draws(const StableSpec& spec, std::size_t n,
                                 std::uint64_t stream, StableMethod method) {
  RngStream rng(10, stream);
  std::vector<double> out(n);
  for (auto& x : out) x = sample_stable_positive(spec, rng, method);
  return out;
}

TEST(StablePositive, SpecValidation) {
  EXPECT_THROW((StableSpec{0.0}.validate()), ValidationError);
  EXPECT_THROW((StableSpec{1.0}.validate()), ValidationError);
  EXPECT_THROW((StableSpec{0.5, 0.0}.validate()), ValidationError);
  EXPECT_NO_THROW((StableSpec{0.5, 2.0}.validate()));
}

TEST(StablePositive, MethodsAgreeInLaw) {
  const StableSpec spec{0.7};
  const auto a = stable_draws(spec, 100'000, 0, StableMethod::kKanter);
  const auto b = stable_draws(spec, 100'000, 1, StableMethod::kPoissonSeries);
  EXPECT_GT(stat::ks_two_sample(a, b).p_value, 0.01);
}

TEST(StablePositive, LaplaceTransformAtOne) {
  // E e^{-S} = exp(-Γ(1-α)) for unit scale.
  const auto s = stable_draws(StableSpec{0.5}, 1'000'000, 2, StableMethod::kKanter);
  std::vector<double> e;
  for (const double x : s) e.push_back(std::exp(-x));
  const auto m = mean_var(e);
  EXPECT_NEAR(m.mean, std::exp(-std::tgamma(0.5)), kSe * m.se(e.size()));
}

TEST(StablePositive, ScaleEntersAsPower) {
  // scale c multiplies S by c^{1/α}: E e^{-S} = exp(-c Γ(1-α)).
  const auto s = stable_draws(StableSpec{0.5, 0.25}, 1'000'000, 3, StableMethod::kKanter);
  std::vector<double> e;
  for (const double x : s) e.push_back(std::exp(-x));
  const auto m = mean_var(e);
  EXPECT_NEAR(m.mean, std::exp(-0.25 * std::tgamma(0.5)), kSe * m.se(e.size()));
}

TEST(StablePositive, SumOfTwoIsRescaledCopy) {
  const double alpha = 0.7;
  const StableSpec spec{alpha};
  const auto x = stable_draws(spec, 100'000, 4, StableMethod::kKanter);
  const auto y = stable_draws(spec, 100'000, 5, StableMethod::kKanter);
  const auto z = stable_draws(spec, 100'000, 6, StableMethod::kKanter);
  std::vector<double> sum(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum[i] = (x[i] + y[i]) * std::pow(2.0, -1.0 / alpha);
  }
  EXPECT_GT(stat::ks_two_sample(sum, z).p_value, 0.01);
}

TEST(StablePositive, SeriesTruncatedMeanMatchesClosedForm) {
  // Mass below the floor: α/(1-α) · y^{1-α} with y = e^{β floor}, β = √2/α.
  const double alpha = 0.7, floor = -3.0;
  const double y = std::exp(std::numbers::sqrt2 / alpha * floor);
  EXPECT_NEAR(stable_series_truncated_mean(alpha, floor),
              alpha / (1 - alpha) * std::pow(y, 1 - alpha), 1e-12);
}

TEST(Samplers, NoNonFiniteValues) {
  RngStream rng(11, 0);
  bool all_finite = true;
  for (int i = 0; i < 10'000'000; ++i) {
    all_finite &= std::isfinite(sample_lifetime(rng));
    all_finite &= std::isfinite(sample_gaussian_increment(1.0, rng));
  }
  for (int i = 0; i < 1'000'000; ++i) {
    all_finite &= std::isfinite(sample_stable_positive(StableSpec{0.7}, rng));
  }
  EXPECT_TRUE(all_finite);
}

}  // namespace
}  // namespace bbm
