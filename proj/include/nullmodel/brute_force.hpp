#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "nullmodel/error.hpp"
#include "nullmodel/estimation.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/likelihood.hpp"
#include "nullmodel/link.hpp"

namespace nullmodel {

struct BruteForceOptions {
  double lower = -20.0;
  double upper = 5.0;
  /// Sweeps stop once no coordinate moves by more than this.
  double tolerance = 1e-10;
  /// Golden-section bracket width at which a 1-D search stops.
  double bracket = 1e-12;
  int max_sweeps = 100000;
  /// Distance from the box (or, for bounded links, from the domain edge)
  /// that counts as pressing against it.
  double boundary_margin = 1e-6;
};

namespace detail {

/// Terms of the log-likelihood that involve alpha_i, with -inf outside the domain.
inline double coordinate_objective(const Graph& g, const LinkSpec& link, const ParamVector& alpha,
                                   std::size_t i, double xi) {
  const auto nb = g.neighbors(i);
  auto it = nb.begin();
  double ll = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const bool edge = it != nb.end() && *it == j;
    if (edge) ++it;
    if (j == i) continue;
    LogProbs lp;
    try {
      lp = log_probs(link, xi, alpha[static_cast<Eigen::Index>(j)]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DomainError) throw;
      return -std::numeric_limits<double>::infinity();
    }
    const double term = edge ? lp.log_p : lp.log_1mp;
    if (std::isnan(term)) return -std::numeric_limits<double>::infinity();
    ll += term;
  }
  return ll;
}

/// Largest admissible alpha_i: the box, or for a link that is undefined at
/// p >= 1 (probed at a predictor of 0), the largest partner's negative.
inline double coordinate_upper(const ParamVector& alpha, std::size_t i, double upper,
                               bool bounded) {
  if (!bounded) return upper;
  double partner = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (static_cast<std::size_t>(j) != i) partner = std::max(partner, alpha[j]);
  }
  return std::min(upper, -partner);
}

inline bool link_is_bounded(const LinkSpec& link) {
  try {
    (void)log_probs(link, 0.0, 0.0);
    return false;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DomainError) return true;
    throw;
  }
}

}  // namespace detail

/**
 * Test oracle: maximizes the log-likelihood by cyclic coordinate ascent, each
 * coordinate by golden-section search over the box. Slow and path-independent
 * of fit_mle. Throws BoundaryEscape when the maximizer presses the box or the
 * link's domain edge, or where an edge's p rounds to 1 (the MLE does not
 * exist or lies outside the box).
 * Where the likelihood is flat the result is the maximizer fit_mle targets.
 */
inline ParamVector brute_force_mle(const Graph& g, const LinkSpec& link,
                                   const BruteForceOptions& opts = {}) {
  require_no_isolated(g);
  if (g.size() > 6) {
    throw Error(ErrorKind::InvalidArgument, "brute_force_mle is for n <= 6, got n = " +
                                                std::to_string(g.size()));
  }
  const std::size_t n = g.size();
  const bool bounded = detail::link_is_bounded(link);
  constexpr double inv_phi = 0.6180339887498949;

  ParamVector alpha = ParamVector::Constant(static_cast<Eigen::Index>(n), -1.0);
  // On a flat ridge the ascent can wander along it into the domain edge and
  // stall there. Each sweep is pulled back to the point matching fit_mle's
  // start along the ridge, which leaves the likelihood unchanged.
  const Matrix flat = flat_directions(g, link, alpha);
  const ParamVector anchor = flat.cols() > 0 ? detail::feasible_start(g, link) : alpha;
  double last_ll = log_lik(g, link, alpha);
  int stalled = 0;
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double a = opts.lower;
      double b = detail::coordinate_upper(alpha, i, opts.upper, bounded);
      auto f = [&](double x) { return detail::coordinate_objective(g, link, alpha, i, x); };
      double c = b - inv_phi * (b - a);
      double d = a + inv_phi * (b - a);
      double fc = f(c);
      double fd = f(d);
      while (b - a > opts.bracket) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - inv_phi * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + inv_phi * (b - a);
          fd = f(d);
        }
      }
      const double best = fc >= fd ? c : d;
      // Never step to a worse value than the current coordinate.
      if (f(best) >= f(alpha[ii])) {
        max_move = std::max(max_move, std::abs(best - alpha[ii]));
        alpha[ii] = best;
      }
    }
    if (flat.cols() > 0) {
      const ParamVector pulled = alpha + flat * (flat.transpose() * (anchor - alpha));
      if (detail::try_evaluate(g, link, pulled)) alpha = pulled;
    }
    const double ll = log_lik(g, link, alpha);
    if (max_move <= opts.tolerance) break;
    // At golden-section resolution moves of ~1e-8 can persist without any
    // gain in the objective; treat repeated non-improvement as converged.
    stalled = ll <= last_ll ? stalled + 1 : 0;
    last_ll = std::max(last_ll, ll);
    if (stalled >= 5) break;
  }
  if (sweep >= opts.max_sweeps) {
    throw Error(ErrorKind::NotConverged, "coordinate ascent did not settle");
  }

  if (const auto e = detail::saturated_edge(g, link, alpha)) {
    throw Error(ErrorKind::BoundaryEscape, "fitted probability of edge " + g.label(e->first) +
                                               "-" + g.label(e->second) + " rounds to 1");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = alpha[static_cast<Eigen::Index>(i)];
    if (x - opts.lower < opts.boundary_margin || opts.upper - x < opts.boundary_margin) {
      throw Error(ErrorKind::BoundaryEscape,
                  "coordinate " + std::to_string(i) + " at the box edge (" + std::to_string(x) + ")");
    }
    if (bounded) {
      const double room = detail::coordinate_upper(alpha, i, opts.upper, true) - x;
      if (room < opts.boundary_margin) {
        throw Error(ErrorKind::BoundaryEscape,
                    "coordinate " + std::to_string(i) + " at the edge of the link's domain");
      }
    }
  }
  return alpha;
}

}  // namespace nullmodel
