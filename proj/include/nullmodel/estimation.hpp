#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "nullmodel/error.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/likelihood.hpp"
#include "nullmodel/link.hpp"

namespace nullmodel {

/**
 * Closed-form estimate from the degree sequence alone:
 * alpha_tilde_i = log X_{i+} - log sqrt(X_{++}), so that
 * exp(alpha_tilde_i + alpha_tilde_j) = X_{i+} X_{j+} / X_{++}.
 */
struct PluginEstimate {
  ParamVector alpha_tilde;
  std::vector<Degree> degrees;
  Degree total_degree = 0;
  double eps0 = 0.0;
  double max_p_tilde = 0.0;
  /// Bernoulli log-likelihood at p_tilde; empty when some p_tilde >= 1.
  std::optional<double> ll_tilde;

  double p_tilde(NodeIndex i, NodeIndex j) const {
    return static_cast<double>(degrees.at(i) * degrees.at(j)) /
           static_cast<double>(total_degree);
  }
};

inline PluginEstimate plugin_estimate(const Graph& g) {
  require_no_isolated(g);
  PluginEstimate est;
  est.degrees = g.degrees();
  est.total_degree = g.total_degree();
  const double total = static_cast<double>(g.total_degree());
  const double half_log_total = 0.5 * std::log(total);
  est.alpha_tilde.resize(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    est.alpha_tilde[static_cast<Eigen::Index>(i)] =
        std::log(static_cast<double>(g.degree(i))) - half_log_total;
  }
  est.eps0 = sparsity_stats(g).eps0;

  if (g.size() >= 2) {
    std::vector<Degree> sorted = g.degrees();
    std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end(), std::greater<>());
    est.max_p_tilde = static_cast<double>(sorted[0] * sorted[1]) / total;
  }
  if (est.max_p_tilde < 1.0) {
    double ll = 0.0;
    detail::for_each_pair(g, [&](std::size_t i, std::size_t j, bool edge) {
      const double p = est.p_tilde(i, j);
      ll += edge ? std::log(p) : std::log1p(-p);
    });
    est.ll_tilde = ll;
  }
  return est;
}

enum class Solver { Auto, ExactNewton, Preconditioned };

inline std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::Auto: return "auto";
    case Solver::ExactNewton: return "exact-newton";
    case Solver::Preconditioned: return "h-preconditioned";
  }
  return "unknown";
}

struct FitOptions {
  /// Stop once max_k |grad_k| / X_{k+} falls to this level...
  double tolerance = 1e-10;
  /// ...and the proposed step is this small in sup-norm. A vanishing score
  /// with steps that stay O(1) means the iterates are running off to infinity.
  double step_tolerance = 1e-6;
  int max_iterations = 100;
  Solver solver = Solver::Auto;
  std::size_t dense_cap = kDefaultDenseCap;
  double divergence_cap = 40.0;
  double contraction = 0.5;
  /// 0 disables damping: the full Newton step is always taken.
  int max_halvings = 50;
  /// Keep every iterate in the trace (for step-error analyses).
  bool record_iterates = false;
};

struct TraceRecord {
  double step_norm = 0.0;
  double log_lik = 0.0;
  double score_norm = 0.0;
  int halvings = 0;
  ParamVector iterate;  // empty unless FitOptions::record_iterates
};

struct FitResult {
  ParamVector alpha_hat;
  ParamVector start;
  double ll_hat = 0.0;
  int iterations = 0;
  double score_norm = 0.0;
  Solver solver = Solver::ExactNewton;
  bool converged = false;
  std::vector<TraceRecord> trace;
};

namespace detail {

inline bool has_dominating_node(const Graph& g) {
  const auto full = static_cast<Degree>(g.size()) - 1;
  return std::any_of(g.degrees().begin(), g.degrees().end(),
                     [full](Degree d) { return d == full; });
}

[[noreturn]] inline void throw_diverged(const Graph& g, const std::string& detail) {
  const std::string why = has_dominating_node(g) ? "node of maximal degree" : detail;
  throw Error(ErrorKind::MleDiverged, "MLE does not exist (" + why + ")");
}

inline std::optional<LikelihoodEval> try_evaluate(const Graph& g, const LinkSpec& link,
                                                  const ParamVector& alpha) {
  try {
    LikelihoodEval e = evaluate(g, link, alpha);
    if (!std::isfinite(e.log_lik) || !e.gradient.allFinite()) return std::nullopt;
    return e;
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::DomainError) return std::nullopt;
    throw;
  }
}

/// First edge whose fitted 1 - p is below double resolution. A maximizer
/// there is the supremum at p = 1 reached numerically, not a finite MLE: the
/// score has underflowed, so the iteration can look converged.
inline std::optional<Edge> saturated_edge(const Graph& g, const LinkSpec& link,
                                          const ParamVector& alpha) {
  const double floor = std::log(std::numeric_limits<double>::epsilon());
  for (const Edge& e : g.edges()) {
    const LogProbs lp = log_probs(link, alpha[static_cast<Eigen::Index>(e.first)],
                                  alpha[static_cast<Eigen::Index>(e.second)]);
    if (lp.log_1mp < floor) return e;
  }
  return std::nullopt;
}

/// The plug-in estimate, shifted uniformly when it falls outside a bounded
/// link's domain (dense graphs) so the largest predictor sits just below 0.
inline ParamVector feasible_start(const Graph& g, const LinkSpec& link) {
  ParamVector x = plugin_estimate(g).alpha_tilde;
  if (!try_evaluate(g, link, x) && x.size() >= 2) {
    std::vector<double> sorted(x.data(), x.data() + x.size());
    std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end(), std::greater<>());
    x.array() += (-1e-3 - (sorted[0] + sorted[1])) / 2.0;
  }
  if (!try_evaluate(g, link, x)) {
    throw Error(ErrorKind::DomainError, "no feasible starting point for link '" + link.name + "'");
  }
  return x;
}

/// Newton ascent direction (-Hess)^{-1} grad, falling back to -H^{-1} grad
/// when the exact Hessian is not negative definite. Along the orthonormal flat
/// directions (columns of `flat`) the step is only grad/rho, which is zero at
/// a maximizer, so the fit keeps the start's component there.
inline Vector newton_direction(const Graph& g, const LinkSpec& link, const ParamVector& alpha,
                               const Vector& grad, Solver solver, std::size_t cap,
                               const Matrix& flat) {
  if (solver == Solver::ExactNewton) {
    Matrix neg = -dense_hessian(g, link, alpha, cap);
    if (flat.cols() > 0) neg += neg.diagonal().mean() * flat * flat.transpose();
    Eigen::LLT<Matrix> llt(neg);
    if (llt.info() == Eigen::Success) {
      Vector dir = llt.solve(grad);
      if (dir.allFinite()) return dir;
    }
  }
  Vector dir = -StructuredHessian(g).apply_inverse(grad);
  if (flat.cols() > 0) {
    const double rho = static_cast<double>(g.total_degree()) / static_cast<double>(g.size());
    dir += flat * (flat.transpose() * grad / rho - flat.transpose() * dir);
  }
  return dir;
}

}  // namespace detail

/**
 * Maximum likelihood fit by damped Newton iteration started at the plug-in
 * estimate.
 *
 * Each iteration solves (Hessian) s = score, either exactly (dense Cholesky,
 * n <= dense_cap) or with the structured approximation H as a fixed
 * preconditioner, then halves the step until the log-likelihood increases and
 * every pair stays inside the link's domain. Steps that change the
 * log-likelihood by less than its rounding error are accepted when they reduce
 * the scaled score.
 *
 * Where the likelihood is flat (see flat_directions) the maximizer is not
 * unique; the one returned agrees with the plug-in start along those
 * directions.
 *
 * Throws MleDiverged when the iterates escape the divergence cap, are still
 * growing at max_iterations, or settle where an edge's fitted p rounds to 1;
 * LineSearchFailed when no admissible step exists.
 */
inline FitResult fit_mle(const Graph& g, const LinkSpec& link, const FitOptions& opts = {}) {
  require_no_isolated(g);
  if (!(opts.tolerance > 0.0) || opts.max_iterations <= 0 || opts.dense_cap == 0 ||
      !(opts.divergence_cap > 0.0) || !(opts.contraction > 0.0 && opts.contraction < 1.0) ||
      opts.max_halvings < 0) {
    throw Error(ErrorKind::InvalidArgument, "invalid fit options");
  }

  FitResult result;
  result.solver = opts.solver;
  if (result.solver == Solver::Auto) {
    result.solver = g.size() <= opts.dense_cap ? Solver::ExactNewton : Solver::Preconditioned;
  }

  ParamVector x = detail::feasible_start(g, link);
  auto current = detail::try_evaluate(g, link, x);
  result.start = x;

  const double start_norm = x.lpNorm<Eigen::Infinity>();
  double score = scaled_score_norm(g, current->gradient);
  bool growing = false;
  const auto flat_signs = detail::complement_bipartite_signs(g);

  for (;;) {
    const Matrix flat = detail::filter_flat(g, link, x, flat_signs);
    const Vector dir = detail::newton_direction(g, link, x, current->gradient, result.solver,
                                                std::max(opts.dense_cap, g.size()), flat);
    if (score <= opts.tolerance && dir.lpNorm<Eigen::Infinity>() <= opts.step_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= opts.max_iterations) break;

    const double slack = 1e-12 * std::max(1.0, std::abs(current->log_lik));
    double t = 1.0;
    int halvings = 0;
    std::optional<LikelihoodEval> next;
    ParamVector trial;
    for (;; ++halvings) {
      trial = x + t * dir;
      next = detail::try_evaluate(g, link, trial);
      if (next) {
        if (opts.max_halvings == 0 || next->log_lik > current->log_lik) break;
        if (next->log_lik >= current->log_lik - slack &&
            scaled_score_norm(g, next->gradient) < score) {
          break;
        }
      }
      next.reset();
      if (halvings >= opts.max_halvings) break;
      t *= opts.contraction;
    }
    if (!next) {
      throw Error(ErrorKind::LineSearchFailed,
                  "no admissible step after " + std::to_string(halvings) + " halvings at iteration " +
                      std::to_string(result.iterations + 1));
    }

    const double before = x.lpNorm<Eigen::Infinity>();
    TraceRecord rec;
    rec.step_norm = (trial - x).lpNorm<Eigen::Infinity>();
    x = std::move(trial);
    current = std::move(next);
    score = scaled_score_norm(g, current->gradient);
    ++result.iterations;
    rec.log_lik = current->log_lik;
    rec.score_norm = score;
    rec.halvings = halvings;
    if (opts.record_iterates) rec.iterate = x;
    result.trace.push_back(std::move(rec));

    const double after = x.lpNorm<Eigen::Infinity>();
    growing = after > before;
    if (after > opts.divergence_cap) {
      detail::throw_diverged(g, "|alpha| exceeded " + std::to_string(opts.divergence_cap));
    }
  }

  if (result.converged) {
    if (const auto e = detail::saturated_edge(g, link, x)) {
      detail::throw_diverged(g, "fitted probability of edge " + g.label(e->first) + "-" +
                                    g.label(e->second) + " rounds to 1");
    }
  }
  if (!result.converged && growing && x.lpNorm<Eigen::Infinity>() > start_norm + 1.0) {
    detail::throw_diverged(g, "|alpha| still growing after " +
                                  std::to_string(opts.max_iterations) + " iterations");
  }

  result.alpha_hat = x;
  result.ll_hat = current->log_lik;
  result.score_norm = score;
  return result;
}

inline EdgeProb fitted_prob(const FitResult& fit, const LinkSpec& link, NodeIndex i, NodeIndex j) {
  if (!fit.converged) throw Error(ErrorKind::NotConverged, "fit did not converge");
  if (i == j) throw Error(ErrorKind::InvalidArgument, "fitted_prob needs i != j");
  const auto n = static_cast<std::size_t>(fit.alpha_hat.size());
  if (i >= n || j >= n) throw Error(ErrorKind::InvalidArgument, "node index out of range");
  return edge_prob(link, fit.alpha_hat[static_cast<Eigen::Index>(i)],
                   fit.alpha_hat[static_cast<Eigen::Index>(j)]);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/**
 * Draws one graph from the model: every pair i < j, visited row-major, is an
 * edge when the next mt19937_64 uniform falls below p_ij. Node labels are the
 * decimal indices; isolated nodes are kept.
 */
inline Graph sample_graph(const ParamVector& alpha, const LinkSpec& link, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(alpha.size());
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = edge_prob(link, alpha[static_cast<Eigen::Index>(i)],
                                 alpha[static_cast<Eigen::Index>(j)])
                           .p;
      if (unit_uniform(rng) < p) edges.emplace_back(i, j);
    }
  }
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return Graph(std::move(labels), edges);
}

}  // namespace nullmodel
