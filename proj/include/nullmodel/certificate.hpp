#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nullmodel/error.hpp"
#include "nullmodel/estimation.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/likelihood.hpp"
#include "nullmodel/link.hpp"

namespace nullmodel {

/// Bounds on p, f, fbar and their partials over the neighbourhood
/// |alpha - alpha_tilde|_inf <= log(r) / 2, in units of p_tilde.
struct LemmaConstants {
  double r = 1.0;
  double P0 = 0.0;
  double P1 = 0.0;
  double P2 = 0.0;
  double P3 = 0.0;
  double F0 = 0.0;
  double F0bar = 0.0;
  double F1 = 0.0;
  double F1bar = 0.0;
  double F2 = 0.0;
  /// 1 - P0 eps0 > 0; otherwise the F constants are +inf.
  bool finite = true;
};

inline LemmaConstants lemma_constants(double c0, double eps0, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  LemmaConstants k;
  k.r = r;
  const double a = c0 * eps0 * r;
  const double ea = std::exp(a);
  k.P0 = r * ea;
  k.P1 = k.P0 * (1.0 + a);
  k.P2 = k.P0 * ((1.0 + a) * (1.0 + a) + a);
  k.P3 = k.P0 * ((1.0 + a) * (1.0 + a) * (1.0 + a) + (1.0 + a) * a + a);

  const double den = 1.0 - k.P0 * eps0;
  if (!(den > 0.0)) {
    k.finite = false;
    k.F0 = k.F0bar = k.F1 = k.F1bar = k.F2 = inf;
    return k;
  }
  const double q1 = k.P1 / den;
  k.F0 = c0 * r + q1;
  k.F0bar = c0 * r * ea + k.F0;
  k.F1 = c0 * r + eps0 * q1 * q1 + k.P2 / den;
  k.F1bar = ea * (c0 * r + c0 * k.F0 * eps0 * r + k.F1);
  k.F2 = c0 * r + 2.0 * eps0 * eps0 * q1 * q1 * q1 + 3.0 * eps0 * k.P2 * k.P1 / (den * den) +
         k.P3 / den;
  return k;
}

enum class CertificateStatus {
  Applies,
  /// eps0 > eps_bar0 (or an isolated node); constants are still reported.
  SparsityViolated,
  /// A denominator in the constant chain is non-positive.
  ConstantsDiverged,
  /// The chain is finite but h > 1.
  KantorovichFailed,
};

inline std::string_view to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Applies: return "applies";
    case CertificateStatus::SparsityViolated: return "sparsity-violated";
    case CertificateStatus::ConstantsDiverged: return "constants-diverged";
    case CertificateStatus::KantorovichFailed: return "kantorovich-failed";
  }
  return "unknown";
}

/**
 * Every explicit constant of the plug-in/MLE approximation bounds.
 *
 * The chain is evaluated in dependency order: lemma constants at r = 1 give
 * L1, L2, L2bar, L3, then B0, kappa and delta; r = exp(4 delta) then feeds the
 * Lipschitz constants M1, M1bar, M2 and lambda, and finally h and t_star.
 */
struct Certificate {
  double c0 = 0.0;
  double eps0 = 0.0;
  double eps_bar0 = 0.0;
  double C = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  Degree min_degree = 0;

  LemmaConstants at_unit;  // r = 1
  LemmaConstants at_r;     // r = exp(4 delta)
  double L1 = 0.0;
  double L2 = 0.0;
  double L2bar = 0.0;
  double L3 = 0.0;
  double B0 = 0.0;
  double kappa = 0.0;
  double delta = 0.0;
  double r = 1.0;
  double M1 = 0.0;
  double M1bar = 0.0;
  double M2 = 0.0;
  double lambda = 0.0;
  double h = 0.0;
  double t_star = 0.0;

  bool applies = false;
  CertificateStatus status = CertificateStatus::SparsityViolated;
  std::string reason;
};

/// Certificate from the sparsity statistic alone (all constants depend only
/// on c0 and eps0).
inline Certificate certificate_for(double c0, double eps0, Degree min_degree = 1) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Certificate c;
  c.c0 = c0;
  c.eps0 = eps0;
  c.min_degree = min_degree;
  c.eps_bar0 = sparsity_threshold(c0);
  c.C = 10.0 * (c0 + 1.0);
  c.C1 = 24.0 * (c0 + 1.0);
  c.C2 = 49.0 * (c0 + 1.0);

  auto diverge = [&](std::string why) {
    c.status = CertificateStatus::ConstantsDiverged;
    c.reason = std::move(why);
    c.applies = false;
    return c;
  };
  auto set_downstream_inf = [&](bool from_kappa) {
    if (from_kappa) c.kappa = c.delta = inf;
    c.r = inf;
    c.M1 = c.M1bar = c.M2 = c.lambda = c.h = c.t_star = inf;
  };

  c.at_unit = lemma_constants(c0, eps0, 1.0);
  c.L1 = 1.0 + c.at_unit.F0 + c.at_unit.F0bar;
  c.L2 = c.at_unit.F1;
  c.L2bar = c.at_unit.F0bar + c.at_unit.F1bar;
  c.L3 = 2.0 + c.L2 + c.L2bar;
  c.B0 = 1.5 * (c.L2 + c.L2bar + c.L3);
  if (!c.at_unit.finite) {
    c.B0 = inf;
    set_downstream_inf(true);
    c.at_r = c.at_unit;
    return diverge("1 - P0 eps0 <= 0 at r = 1");
  }
  if (!(c.B0 * eps0 < 1.0)) {
    set_downstream_inf(true);
    c.at_r = c.at_unit;
    return diverge("B0 eps0 >= 1");
  }
  c.kappa = 1.5 / (1.0 - c.B0 * eps0);
  c.delta = c.L1 * c.kappa * eps0;
  c.r = std::exp(4.0 * c.delta);

  c.at_r = lemma_constants(c0, eps0, c.r);
  if (!c.at_r.finite) {
    set_downstream_inf(false);
    c.r = std::exp(4.0 * c.delta);
    return diverge("1 - P0 eps0 <= 0 at r = exp(4 delta)");
  }
  c.M1 = c.at_r.F2 * eps0;
  c.M1bar = 2.0 * c.r * (1.0 + c.at_r.F0bar + c.at_r.F1bar);
  c.M2 = c.M1 + c.M1bar;
  c.lambda = 2.0 * c.M2;
  c.h = 2.0 * c.kappa * c.lambda * c.delta;

  if (c.h > 1.0) {
    c.t_star = inf;
    c.status = CertificateStatus::KantorovichFailed;
    c.reason = "h > 1";
    c.applies = false;
    return c;
  }
  c.t_star = (2.0 / c.h) * (1.0 - std::sqrt(1.0 - c.h)) * c.delta;

  if (min_degree < 1) {
    c.status = CertificateStatus::SparsityViolated;
    c.reason = "isolated node";
  } else if (eps0 > c.eps_bar0) {
    c.status = CertificateStatus::SparsityViolated;
    c.reason = "eps0 > eps_bar0";
  } else {
    c.status = CertificateStatus::Applies;
    c.applies = true;
  }
  return c;
}

inline Certificate certificate(const Graph& g, const LinkSpec& link) {
  require_no_isolated(g);
  const SparsityStats s = sparsity_stats(g);
  return certificate_for(link.c0, s.eps0, s.min_degree);
}

/// Realized distance between the MLE and the plug-in estimate.
struct ErrorReport {
  double C = 0.0;
  double eps0 = 0.0;
  double sup_err = 0.0;
  double l2_err = 0.0;
  double scaled_sup = 0.0;
  double scaled_l2 = 0.0;
  std::vector<double> per_node_scaled;
  std::vector<Degree> degrees;
  double p_rel_max = 0.0;
  /// |ll_hat - ll_tilde| / |ll_tilde|; empty when ll_tilde is undefined.
  std::optional<double> ll_rel;
};

inline ErrorReport error_report(const Graph& g, const LinkSpec& link, const FitResult& fit,
                                const PluginEstimate& plug) {
  if (!fit.converged) throw Error(ErrorKind::NotConverged, "fit did not converge");
  if (fit.alpha_hat.size() != plug.alpha_tilde.size() ||
      static_cast<std::size_t>(fit.alpha_hat.size()) != g.size()) {
    throw Error(ErrorKind::InvalidArgument, "fit, plug-in and graph sizes differ");
  }
  ErrorReport rep;
  rep.eps0 = plug.eps0;
  rep.C = 10.0 * (link.c0 + 1.0);
  rep.degrees = g.degrees();
  const Vector diff = fit.alpha_hat - plug.alpha_tilde;
  rep.sup_err = diff.lpNorm<Eigen::Infinity>();
  rep.l2_err = diff.norm();
  const double scale = rep.C * rep.eps0;
  rep.scaled_sup = rep.sup_err / scale;
  rep.scaled_l2 = rep.l2_err / (std::sqrt(static_cast<double>(g.size())) * scale);
  rep.per_node_scaled.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    rep.per_node_scaled[i] = diff[static_cast<Eigen::Index>(i)] / scale;
  }

  const ParamVector& a_hat = fit.alpha_hat;
  const ParamVector& a_tilde = plug.alpha_tilde;
  double worst = 0.0;
  detail::for_each_pair(g, [&](std::size_t i, std::size_t j, bool) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    const double log_hat = log_probs(link, a_hat[ii], a_hat[jj]).log_p;
    const double rel = std::abs(std::expm1(log_hat - (a_tilde[ii] + a_tilde[jj])));
    worst = std::max(worst, rel);
  });
  rep.p_rel_max = worst;

  if (plug.ll_tilde) {
    rep.ll_rel = std::abs(fit.ll_hat - *plug.ll_tilde) / std::abs(*plug.ll_tilde);
  }
  return rep;
}

struct BoundVerdict {
  bool sup_ok = false;
  bool p_ok = false;
  /// Empty when the report has no log-likelihood comparison.
  std::optional<bool> ll_ok;
  /// The certificate applies, so the three bounds are guaranteed rather than observed.
  bool guaranteed = false;

  bool all_hold() const { return sup_ok && p_ok && ll_ok.value_or(true); }
};

inline BoundVerdict check_bounds(const Certificate& cert, const ErrorReport& rep) {
  BoundVerdict v;
  v.sup_ok = rep.sup_err <= cert.C * cert.eps0;
  v.p_ok = rep.p_rel_max <= cert.C1 * cert.eps0;
  if (rep.ll_rel) v.ll_ok = *rep.ll_rel <= cert.C2 * cert.eps0;
  v.guaranteed = cert.applies;
  return v;
}

}  // namespace nullmodel
