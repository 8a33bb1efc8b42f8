#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nullmodel/nullmodel.hpp"
#include "support/oracles.hpp"

using namespace nullmodel;

namespace {

ErrorKind fit_error(const Graph& g, const LinkSpec& link, const FitOptions& opts = {}) {
  try {
    const FitResult r = fit_mle(g, link, opts);
    ADD_FAILURE() << "fit returned, converged = " << r.converged;
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

/// Union of paths and cycles on n nodes, degrees 1 or 2.
Graph sparse_graph(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::configuration_graph(oracle::uniform_degrees(n, 1, 2, rng), rng);
}

}  // namespace

TEST(Plugin, PathOfThree) {
  const PluginEstimate est = plugin_estimate(oracle::path_graph(3));
  EXPECT_NEAR(est.alpha_tilde[0], -std::log(2.0), 1e-15);
  EXPECT_NEAR(est.alpha_tilde[1], 0.0, 1e-15);
  EXPECT_NEAR(est.alpha_tilde[2], -std::log(2.0), 1e-15);
  EXPECT_EQ(est.p_tilde(0, 1), 0.5);
  EXPECT_EQ(est.p_tilde(0, 2), 0.25);
  EXPECT_EQ(est.p_tilde(1, 2), 0.5);
  EXPECT_EQ(est.eps0, 1.0);
  ASSERT_TRUE(est.ll_tilde);
  EXPECT_NEAR(*est.ll_tilde, -1.67397, 1e-5);
}

TEST(Plugin, CycleIsSymmetric) {
  const PluginEstimate est = plugin_estimate(oracle::cycle_graph(4));
  for (double a : est.alpha_tilde) EXPECT_NEAR(a, std::log(2.0) - 0.5 * std::log(8.0), 1e-15);
  EXPECT_EQ(est.p_tilde(0, 2), 0.5);
  EXPECT_NEAR(std::exp(est.alpha_tilde[0] + est.alpha_tilde[1]), 0.5, 1e-15);
}

TEST(Plugin, UndefinedLikelihoodOnDenseGraph) {
  const Graph karate = read_edge_list(NULLMODEL_DATA_DIR "/karate.txt");
  const PluginEstimate est = plugin_estimate(karate);
  EXPECT_GT(est.max_p_tilde, 1.0);
  EXPECT_FALSE(est.ll_tilde);
}

TEST(Plugin, RefusesIsolatedNodes) {
  EXPECT_THROW(plugin_estimate(Graph({"a", "b", "c"}, {{0, 1}})), Error);
}

TEST(FitMle, CycleLogit) {
  const Graph c4 = oracle::cycle_graph(4);
  const FitResult fit = fit_mle(c4, link_logit());
  ASSERT_TRUE(fit.converged);
  for (double a : fit.alpha_hat) EXPECT_NEAR(a, 0.5 * std::log(2.0), 1e-10);
  EXPECT_NEAR(fitted_prob(fit, link_logit(), 0, 2).p, 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(fit.ll_hat, -3.81908, 1e-5);
  EXPECT_LE(fit.score_norm, FitOptions{}.tolerance);
}

TEST(FitMle, CycleLog) {
  const Graph c4 = oracle::cycle_graph(4);
  const FitResult fit = fit_mle(c4, link_log());
  ASSERT_TRUE(fit.converged);
  for (double a : fit.alpha_hat) EXPECT_NEAR(a, 0.5 * std::log(2.0 / 3.0), 1e-10);
  EXPECT_NEAR(fitted_prob(fit, link_log(), 1, 3).p, 2.0 / 3.0, 1e-10);
}

TEST(FitMle, CycleLogIsAnchoredOnItsFlatRidge) {
  // Any point a + t (1, 1, -1, -1) is also a maximizer; both solvers return
  // the symmetric one because the plug-in start is symmetric.
  const Graph c4 = oracle::cycle_graph(4);
  const Vector sym = Vector::Constant(4, 0.5 * std::log(2.0 / 3.0));
  Vector ridge(4);
  ridge << 1, 1, -1, -1;
  EXPECT_NEAR(log_lik(c4, link_log(), sym + 0.02 * ridge), log_lik(c4, link_log(), sym), 1e-14);
  for (Solver s : {Solver::ExactNewton, Solver::Preconditioned}) {
    FitOptions o;
    o.solver = s;
    const FitResult fit = fit_mle(c4, link_log(), o);
    ASSERT_TRUE(fit.converged);
    EXPECT_LE((fit.alpha_hat - sym).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(FitMle, PathOfThreeLogitDiverges) {
  const Graph p3 = oracle::path_graph(3);
  try {
    fit_mle(p3, link_logit());
    FAIL() << "expected MleDiverged";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MleDiverged);
    EXPECT_NE(std::string(e.what()).find("MLE does not exist (node of maximal degree)"),
              std::string::npos);
  }
}

TEST(FitMle, StarIsNonexistentForEveryLink) {
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 3}, {1, 2}};
  const Graph g = oracle::make_graph(4, e);
  for (const LinkSpec& link : builtin_links()) {
    const ErrorKind k = fit_error(g, link);
    EXPECT_TRUE(k == ErrorKind::MleDiverged || k == ErrorKind::LineSearchFailed) << link.name;
  }
}

TEST(FitMle, SaturatedCloglogIsNotConvergence) {
  // K4 under cloglog: the score underflows once p rounds to 1, which used to
  // pass the convergence test at alpha near 1.87.
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  const Graph k4 = oracle::make_graph(4, e);
  EXPECT_EQ(fit_error(k4, link_cloglog()), ErrorKind::MleDiverged);
  try {
    brute_force_mle(k4, link_cloglog());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::BoundaryEscape);
  }
}

TEST(FitMle, KarateAllLinksConverge) {
  const Graph g = read_edge_list(NULLMODEL_DATA_DIR "/karate.txt");
  for (const LinkSpec& link : builtin_links()) {
    const FitResult fit = fit_mle(g, link);
    ASSERT_TRUE(fit.converged) << link.name;
    EXPECT_LE(fit.score_norm, 1e-10);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        const double p = fitted_prob(fit, link, i, j).p;
        EXPECT_LT(p, 1.0);
        EXPECT_EQ(p, fitted_prob(fit, link, j, i).p);
      }
  }
}

TEST(FitMle, MonotoneAscent) {
  const Graph g = read_edge_list(NULLMODEL_DATA_DIR "/karate.txt");
  for (const LinkSpec& link : builtin_links()) {
    const FitResult fit = fit_mle(g, link);
    double prev = log_lik(g, link, fit.start);
    for (const TraceRecord& r : fit.trace) {
      EXPECT_GE(r.log_lik, prev - 1e-12 * std::abs(prev)) << link.name;
      prev = r.log_lik;
    }
  }
}

TEST(FitMle, LogitDegreeSufficiency) {
  std::mt19937_64 rng(41);
  int converged = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Graph g = oracle::random_graph(6 + trial % 20, 0.3, rng);
    FitResult fit;
    try {
      fit = fit_mle(g, link_logit());
    } catch (const Error&) {
      continue;
    }
    ++converged;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double fitted = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j)
        if (j != i) fitted += fitted_prob(fit, link_logit(), i, j).p;
      EXPECT_NEAR(fitted, static_cast<double>(g.degree(i)), 1e-8);
    }
  }
  EXPECT_GT(converged, 10);
}

TEST(FitMle, PreconditionedAgreesWithExact) {
  // On karate the log link puts hub pairs near p = 1, where H is a poor
  // preconditioner and the iteration crawls; only the sparse graph covers it.
  const Graph karate = read_edge_list(NULLMODEL_DATA_DIR "/karate.txt");
  const Graph sparse = sparse_graph(400, 3);
  for (const LinkSpec& link : builtin_links()) {
    for (const Graph* g : {&sparse, &karate}) {
      if (g == &karate && link.name == "log") continue;
      FitOptions exact;
      exact.solver = Solver::ExactNewton;
      FitOptions pre;
      pre.solver = Solver::Preconditioned;
      pre.max_iterations = 2000;
      const FitResult a = fit_mle(*g, link, exact);
      const FitResult b = fit_mle(*g, link, pre);
      ASSERT_TRUE(a.converged && b.converged) << link.name << " n = " << g->size();
      EXPECT_EQ(b.solver, Solver::Preconditioned);
      EXPECT_LE((a.alpha_hat - b.alpha_hat).lpNorm<Eigen::Infinity>(), 1e-8) << link.name;
    }
  }
}

TEST(FitMle, AutoSolverFollowsDenseCap) {
  const Graph g = oracle::cycle_graph(6);
  FitOptions o;
  o.dense_cap = 4;
  EXPECT_EQ(fit_mle(g, link_logit(), o).solver, Solver::Preconditioned);
  o.dense_cap = 6;
  EXPECT_EQ(fit_mle(g, link_logit(), o).solver, Solver::ExactNewton);
}

TEST(FitMle, RejectsBadOptions) {
  FitOptions o;
  o.contraction = 1.5;
  EXPECT_EQ(fit_error(oracle::cycle_graph(4), link_logit(), o), ErrorKind::InvalidArgument);
}

TEST(FitMle, IterationLimitReportsNotConverged) {
  const Graph g = read_edge_list(NULLMODEL_DATA_DIR "/karate.txt");
  FitOptions o;
  o.max_iterations = 1;
  const FitResult r = fit_mle(g, link_logit(), o);
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(fitted_prob(r, link_logit(), 0, 1), Error);
}

TEST(FittedProb, InvalidIndices) {
  const FitResult fit = fit_mle(oracle::cycle_graph(4), link_logit());
  EXPECT_THROW(fitted_prob(fit, link_logit(), 1, 1), Error);
  EXPECT_THROW(fitted_prob(fit, link_logit(), 0, 4), Error);
}

TEST(BruteForce, CycleMatchesAnalyticSolutions) {
  const Graph c4 = oracle::cycle_graph(4);
  const Vector logit = brute_force_mle(c4, link_logit());
  const Vector log = brute_force_mle(c4, link_log());
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(logit[i], 0.5 * std::log(2.0), 1e-6);
    EXPECT_NEAR(log[i], 0.5 * std::log(2.0 / 3.0), 1e-6);
  }
}

TEST(BruteForce, PathOfThreeLogitEscapes) {
  try {
    brute_force_mle(oracle::path_graph(3), link_logit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoundaryEscape);
  }
}

TEST(BruteForce, RejectsLargeGraphs) {
  EXPECT_THROW(brute_force_mle(oracle::cycle_graph(7), link_logit()), Error);
}

TEST(SampleGraph, DeterministicPerSeed) {
  const Vector a = heterogeneous_alpha(300, 6.0, link_logit());
  const Graph g1 = sample_graph(a, link_logit(), 42);
  const Graph g2 = sample_graph(a, link_logit(), 42);
  const Graph g3 = sample_graph(a, link_logit(), 43);
  EXPECT_EQ(g1, g2);
  EXPECT_FALSE(g1 == g3);
}

TEST(SampleGraph, NegligibleProbabilitiesGiveNoEdges) {
  const Graph g = sample_graph(Vector::Constant(50, -30.0), link_log(), 1);
  EXPECT_EQ(g.size(), 50u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(SampleGraph, MeanDegreeMatchesExpectation) {
  for (const LinkSpec& link : builtin_links()) {
    const Vector a = heterogeneous_alpha(2000, 6.0, link);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Graph g = sample_graph(a, link, seed);
      const double mean = static_cast<double>(g.total_degree()) / 2000.0;
      EXPECT_NEAR(mean, 6.0, 0.6) << link.name << " seed " << seed;
    }
  }
}

TEST(HeterogeneousAlpha, HitsTargetAndRejectsInfeasible) {
  for (const LinkSpec& link : builtin_links()) {
    const Vector a = heterogeneous_alpha(500, 5.0, link);
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = i + 1; j < a.size(); ++j) total += edge_prob(link, a[i], a[j]).p;
    EXPECT_NEAR(2.0 * total / 500.0, 5.0, 0.1) << link.name;
    EXPECT_NEAR(std::exp(a[a.size() - 1] - a[0]), 10.0, 1e-9);
  }
  try {
    heterogeneous_alpha(2, 5.0, link_logit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleTarget);
  }
}

TEST(SparseRegime, PluginCloseToMleAndBoundsHold) {
  // Sparse enough for every link's threshold: degrees 1..2 and X++ above 3600.
  const Graph g = sparse_graph(2600, 5);
  ASSERT_GE(g.min_degree(), 1);
  const PluginEstimate plug = plugin_estimate(g);
  for (const LinkSpec& link : builtin_links()) {
    const Certificate cert = certificate(g, link);
    ASSERT_TRUE(cert.applies) << link.name << " eps0 = " << plug.eps0;
    FitOptions o;
    o.solver = Solver::Preconditioned;
    const FitResult fit = fit_mle(g, link, o);
    ASSERT_TRUE(fit.converged);
    const ErrorReport rep = error_report(g, link, fit, plug);
    const BoundVerdict v = check_bounds(cert, rep);
    EXPECT_TRUE(v.sup_ok) << link.name;
    EXPECT_TRUE(v.p_ok) << link.name;
    ASSERT_TRUE(v.ll_ok);
    EXPECT_TRUE(*v.ll_ok) << link.name;
    EXPECT_TRUE(v.guaranteed);
  }
}

TEST(SparseRegime, UndampedNewtonHalvesTheError) {
  const Graph g = sparse_graph(800, 9);
  const LinkSpec link = link_log();
  ASSERT_TRUE(certificate(g, link).applies);
  FitOptions o;
  o.solver = Solver::ExactNewton;
  o.max_halvings = 0;
  o.record_iterates = true;
  const FitResult fit = fit_mle(g, link, o);
  ASSERT_TRUE(fit.converged);
  ASSERT_FALSE(fit.trace.empty());
  const double first = (fit.trace[0].iterate - fit.start).lpNorm<Eigen::Infinity>();
  for (int k = 1; k <= 6; ++k) {
    const Vector& xk = k <= static_cast<int>(fit.trace.size()) ? fit.trace[k - 1].iterate
                                                               : fit.alpha_hat;
    const double err = (fit.alpha_hat - xk).lpNorm<Eigen::Infinity>();
    EXPECT_LE(err, std::ldexp(first, -k + 1)) << "k = " << k;
  }
}
