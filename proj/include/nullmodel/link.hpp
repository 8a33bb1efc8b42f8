#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nullmodel/error.hpp"

namespace nullmodel {

/// Second partials of eps(x, y) with respect to its first argument.
struct SecondPartials {
  double cross = 0.0;  // d2 eps / dx dy
  double same = 0.0;   // d2 eps / dx^2
};

struct LogProbs {
  double log_p = 0.0;
  double log_1mp = 0.0;
};

/**
 * A member of the family log p(x, y) = x + y + eps(x, y).
 *
 * eps must satisfy eps(x, y) == eps(y, x); the partial with respect to the
 * second argument is deps(y, x). c0 is the declared sub-exponential constant:
 * |eps| and its partials are bounded by c0 * exp(x + y).
 *
 * log_probs is optional. When set it must return log p and log(1 - p)
 * evaluated stably from the linear predictor; otherwise both are derived
 * from eps.
 */
struct LinkSpec {
  std::string name;
  double c0 = 0.0;
  std::function<double(double, double)> eps;
  std::function<double(double, double)> deps;
  std::function<SecondPartials(double, double)> d2eps;
  std::function<LogProbs(double, double)> log_probs;
  /// eps depends on x + y only, so deps(x, y) == deps(y, x).
  bool sum_only = false;
};

namespace detail {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Complementary log-log: eps(eta) = log((1 - exp(-t)) / t), t = exp(eta).
// Below this t the Bernoulli-number series is used to avoid cancellation.
inline constexpr double kCloglogSeriesCutoff = 1e-2;

inline double cloglog_eps(double eta) {
  const double t = std::exp(eta);
  if (t < kCloglogSeriesCutoff) {
    const double t2 = t * t;
    return -t / 2.0 + t2 / 24.0 - t2 * t2 / 2880.0 + t2 * t2 * t2 / 181440.0;
  }
  return std::log(-std::expm1(-t) / t);
}

inline double cloglog_deps(double eta) {
  const double t = std::exp(eta);
  if (t < kCloglogSeriesCutoff) {
    const double t2 = t * t;
    return -t / 2.0 + t2 / 12.0 - t2 * t2 / 720.0 + t2 * t2 * t2 / 30240.0;
  }
  return t / std::expm1(t) - 1.0;
}

inline double cloglog_d2eps(double eta) {
  const double t = std::exp(eta);
  if (t < kCloglogSeriesCutoff) {
    const double t2 = t * t;
    return -t / 2.0 + t2 / 6.0 - t2 * t2 / 180.0 + t2 * t2 * t2 / 5040.0;
  }
  const double q = 1.0 / std::expm1(t);
  return t * q * (1.0 - t * (1.0 + q));
}

}  // namespace detail

/// log p = x + y; only defined while x + y < 0.
inline LinkSpec link_log() {
  LinkSpec link;
  link.name = "log";
  link.c0 = 0.0;
  link.sum_only = true;
  link.eps = [](double, double) { return 0.0; };
  link.deps = [](double, double) { return 0.0; };
  link.d2eps = [](double, double) { return SecondPartials{}; };
  link.log_probs = [](double x, double y) {
    const double eta = x + y;
    if (!(eta < 0.0)) {
      throw Error(ErrorKind::DomainError,
                  "log link needs x + y < 0, got " + std::to_string(eta));
    }
    return LogProbs{eta, std::log(-std::expm1(eta))};
  };
  return link;
}

/// log(-log(1 - p)) = x + y.
inline LinkSpec link_cloglog() {
  LinkSpec link;
  link.name = "cloglog";
  link.c0 = 0.5;
  link.sum_only = true;
  link.eps = [](double x, double y) { return detail::cloglog_eps(x + y); };
  link.deps = [](double x, double y) { return detail::cloglog_deps(x + y); };
  link.d2eps = [](double x, double y) {
    const double v = detail::cloglog_d2eps(x + y);
    return SecondPartials{v, v};
  };
  link.log_probs = [](double x, double y) {
    const double t = std::exp(x + y);
    return LogProbs{std::log(-std::expm1(-t)), -t};
  };
  return link;
}

/// logit p = x + y.
inline LinkSpec link_logit() {
  LinkSpec link;
  link.name = "logit";
  link.c0 = 1.0;
  link.sum_only = true;
  link.eps = [](double x, double y) { return -detail::softplus(x + y); };
  link.deps = [](double x, double y) { return -detail::sigmoid(x + y); };
  link.d2eps = [](double x, double y) {
    const double eta = x + y;
    const double v = -detail::sigmoid(eta) * detail::sigmoid(-eta);
    return SecondPartials{v, v};
  };
  link.log_probs = [](double x, double y) {
    const double eta = x + y;
    return LogProbs{-detail::softplus(-eta), -detail::softplus(eta)};
  };
  return link;
}

inline std::vector<LinkSpec> builtin_links() { return {link_cloglog(), link_log(), link_logit()}; }

inline std::optional<LinkSpec> link_by_name(std::string_view name) {
  if (name == "log") return link_log();
  if (name == "cloglog") return link_cloglog();
  if (name == "logit") return link_logit();
  return std::nullopt;
}

/// log p and log(1 - p) for the pair; DomainError when p would reach 1.
inline LogProbs log_probs(const LinkSpec& link, double x, double y) {
  if (link.log_probs) return link.log_probs(x, y);
  const double log_p = x + y + link.eps(x, y);
  if (!(log_p < 0.0)) {
    throw Error(ErrorKind::DomainError, "link '" + link.name + "' gives p >= 1");
  }
  return LogProbs{log_p, std::log(-std::expm1(log_p))};
}

struct EdgeProb {
  double p = 0.0;
  double log_p = 0.0;
  double log_1mp = 0.0;
};

inline EdgeProb edge_prob(const LinkSpec& link, double x, double y) {
  const LogProbs lp = log_probs(link, x, y);
  return EdgeProb{std::exp(lp.log_p), lp.log_p, lp.log_1mp};
}

/// Everything the likelihood needs from one unordered pair.
struct PairEval {
  double log_p = 0.0;
  double log_1mp = 0.0;
  double eps_x = 0.0;  // d eps / d alpha_i
  double eps_y = 0.0;  // d eps / d alpha_j
};

inline PairEval evaluate_pair(const LinkSpec& link, double x, double y) {
  const LogProbs lp = log_probs(link, x, y);
  PairEval out;
  out.log_p = lp.log_p;
  out.log_1mp = lp.log_1mp;
  out.eps_x = link.deps(x, y);
  out.eps_y = link.sum_only ? out.eps_x : link.deps(y, x);
  return out;
}

}  // namespace nullmodel
