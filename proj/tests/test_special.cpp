#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <gtest/gtest.h>

#include "ampvbic/special.hpp"

using ampvbic::digamma;

TEST(Digamma, KnownValues) {
  EXPECT_NEAR(digamma(1.0), -std::numbers::egamma, 1e-14);
  EXPECT_NEAR(digamma(2.0), 1.0 - std::numbers::egamma, 1e-14);
  EXPECT_NEAR(digamma(0.5), -std::numbers::egamma - 2.0 * std::numbers::ln2, 1e-13);
}

TEST(Digamma, Recurrence) {
  for (double x : {0.013, 0.4, 1.7, 9.99, 10.0, 31.5, 1e4})
    EXPECT_NEAR(digamma(x + 1.0), digamma(x) + 1.0 / x, 1e-12 * std::max(1.0, std::abs(digamma(x))));
}

TEST(Digamma, MatchesBoostOnLogGrid) {
  for (double lx = std::log(0.01); lx < std::log(1e6); lx += 0.05) {
    const double x = std::exp(lx);
    const double ref = boost::math::digamma(x);
    EXPECT_NEAR(digamma(x), ref, 1e-10 * std::max(1.0, std::abs(ref))) << "x = " << x;
  }
}

TEST(Digamma, NonPositiveIsNaN) {
  EXPECT_TRUE(std::isnan(digamma(0.0)));
  EXPECT_TRUE(std::isnan(digamma(-1.5)));
}
