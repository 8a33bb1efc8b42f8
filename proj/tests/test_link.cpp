#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nullmodel/link.hpp"
#include "support/oracles.hpp"

using namespace nullmodel;

TEST(LogLink, Values) {
  const LinkSpec link = link_log();
  EXPECT_EQ(link.eps(-1.0, -2.0), 0.0);
  EXPECT_NEAR(edge_prob(link, -0.5, -0.5).p, std::exp(-1.0), 1e-15);
  EXPECT_NEAR(edge_prob(link, -0.5 * std::log(2.0), -0.5 * std::log(2.0)).p, 0.5, 1e-15);
  try {
    edge_prob(link, 0.05, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(CloglogLink, Values) {
  const LinkSpec link = link_cloglog();
  EXPECT_NEAR(edge_prob(link, 0.0, 0.0).p, 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(link.eps(0.0, 0.0), std::log(1.0 - std::exp(-1.0)), 1e-15);
  EXPECT_EQ(link.eps(-3.0, 1.0), link.eps(-1.0, -1.0));
  EXPECT_NEAR(-0.45868, link.eps(0, 0), 1e-5);
}

TEST(LogitLink, Values) {
  const LinkSpec link = link_logit();
  EXPECT_EQ(edge_prob(link, 0.0, 0.0).p, 0.5);
  EXPECT_NEAR(link.eps(0.0, 0.0), -std::log(2.0), 1e-15);
  EXPECT_NEAR(link.deps(0.0, 0.0), -0.5, 1e-15);
  const double a = 0.5 * std::log(2.0);
  EXPECT_NEAR(edge_prob(link, a, a).p, 2.0 / 3.0, 1e-15);
}

TEST(CloglogLink, SeriesMatchesClosedFormAtCutoff) {
  // Both branches evaluated just either side of the switch point.
  const double eta = std::log(detail::kCloglogSeriesCutoff);
  for (double d : {-1e-9, 1e-9}) {
    const double t = std::exp(eta + d);
    EXPECT_NEAR(detail::cloglog_eps(eta + d), std::log(-std::expm1(-t) / t), 1e-15);
    EXPECT_NEAR(detail::cloglog_deps(eta + d), t / std::expm1(t) - 1.0, 1e-14);
    const double q = 1.0 / std::expm1(t);
    EXPECT_NEAR(detail::cloglog_d2eps(eta + d), t * q * (1.0 - t * (1.0 + q)), 1e-13);
  }
}

TEST(CloglogLink, StableInDeepSparseRegime) {
  const LinkSpec link = link_cloglog();
  const EdgeProb e = edge_prob(link, -20.0, -20.0);
  EXPECT_NEAR(e.log_p, -40.0, 1e-12);
  EXPECT_GT(e.p, 0.0);
  EXPECT_NEAR(e.log_1mp, -std::exp(-40.0), 1e-30);
}

TEST(LogitLink, StableAtExtremes) {
  const LinkSpec link = link_logit();
  EXPECT_NEAR(edge_prob(link, -400.0, 0.0).log_p, -400.0, 1e-9);
  EXPECT_NEAR(edge_prob(link, 400.0, 0.0).log_1mp, -400.0, 1e-9);
  EXPECT_TRUE(std::isfinite(edge_prob(link, 400.0, 0.0).log_p));
}

class BuiltinLink : public ::testing::TestWithParam<int> {
 protected:
  LinkSpec link() const { return builtin_links()[static_cast<std::size_t>(GetParam())]; }
};

TEST_P(BuiltinLink, SubExponentialBoundSampled) {
  const LinkSpec l = link();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-6.0, 2.0);
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    const double bound = l.c0 * std::exp(x + y) + 1e-12;
    const SecondPartials s = l.d2eps(x, y);
    ASSERT_LE(std::abs(l.eps(x, y)), bound) << x << ' ' << y;
    ASSERT_LE(std::abs(l.deps(x, y)), bound) << x << ' ' << y;
    ASSERT_LE(std::abs(s.cross), bound) << x << ' ' << y;
    ASSERT_LE(std::abs(s.same), bound) << x << ' ' << y;
  }
}

TEST_P(BuiltinLink, PartialsMatchFiniteDifferences) {
  const LinkSpec l = link();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-6.0, 2.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    if (l.name == "log" && x + y >= -0.05) continue;
    const double fd = oracle::fd_scalar([&](double t) { return l.eps(t, y); }, x);
    const double d = l.deps(x, y);
    ASSERT_LE(std::abs(d - fd), 1e-6 * std::max(std::abs(d), std::abs(fd)) + 1e-12)
        << l.name << " deps at " << x << ' ' << y;
    const SecondPartials s = l.d2eps(x, y);
    const double fd_same = oracle::fd_scalar([&](double t) { return l.deps(t, y); }, x);
    const double fd_cross = oracle::fd_scalar([&](double t) { return l.deps(x, t); }, y);
    ASSERT_LE(std::abs(s.same - fd_same), 1e-6 * std::max(std::abs(s.same), std::abs(fd_same)) + 1e-12);
    ASSERT_LE(std::abs(s.cross - fd_cross),
              1e-6 * std::max(std::abs(s.cross), std::abs(fd_cross)) + 1e-12);
  }
}

TEST_P(BuiltinLink, SymmetricAndInUnitInterval) {
  const LinkSpec l = link();
  std::mt19937_64 rng(7);
  // Up to x + y = 3: beyond that cloglog's p rounds to exactly 1.
  std::uniform_real_distribution<double> u(-8.0, 1.5);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    if (l.name == "log" && x + y >= 0.0) continue;
    EXPECT_EQ(l.eps(x, y), l.eps(y, x));
    const EdgeProb a = edge_prob(l, x, y);
    const EdgeProb b = edge_prob(l, y, x);
    EXPECT_EQ(a.p, b.p);
    EXPECT_GT(a.p, 0.0);
    EXPECT_LT(a.p, 1.0);
    // log p = x + y + eps, evaluated independently.
    EXPECT_NEAR(a.log_p, x + y + l.eps(x, y), 1e-12 * (1.0 + std::abs(a.log_p)));
  }
}

INSTANTIATE_TEST_SUITE_P(AllLinks, BuiltinLink, ::testing::Values(0, 1, 2),
                         [](const auto& info) {
                           return builtin_links()[static_cast<std::size_t>(info.param)].name;
                         });

TEST(BoundedLinks, ProbabilityIncreasing) {
  for (const LinkSpec& l : {link_logit(), link_cloglog()}) {
    double prev = 0.0;
    for (double x = -30.0; x <= 3.0; x += 0.25) {
      const double p = edge_prob(l, x, 0.0).p;
      EXPECT_GT(p, prev) << l.name << " at " << x;
      EXPECT_LT(p, 1.0);
      prev = p;
    }
  }
}

TEST(LinkByName, Lookup) {
  EXPECT_EQ(link_by_name("cloglog")->c0, 0.5);
  EXPECT_EQ(link_by_name("logit")->c0, 1.0);
  EXPECT_EQ(link_by_name("log")->c0, 0.0);
  EXPECT_FALSE(link_by_name("probit"));
}

TEST(CustomLink, EpsOnlyFallback) {
  // Logit rebuilt without a log_probs evaluator.
  LinkSpec custom = link_logit();
  custom.name = "logit-custom";
  custom.log_probs = nullptr;
  for (double eta : {-5.0, -1.0, 0.0, 2.0}) {
    const EdgeProb a = edge_prob(custom, eta / 2, eta / 2);
    const EdgeProb b = edge_prob(link_logit(), eta / 2, eta / 2);
    EXPECT_NEAR(a.p, b.p, 1e-14);
    EXPECT_NEAR(a.log_1mp, b.log_1mp, 1e-12);
  }
}
