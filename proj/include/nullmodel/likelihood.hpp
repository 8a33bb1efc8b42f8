#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nullmodel/error.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/link.hpp"

namespace nullmodel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ParamVector = Vector;

namespace detail {

/// Calls fn(i, j, x_ij) for every pair i < j in row-major order.
template <typename Fn>
void for_each_pair(const Graph& g, Fn&& fn) {
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.neighbors(i);
    auto it = std::upper_bound(nb.begin(), nb.end(), i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool edge = it != nb.end() && *it == j;
      if (edge) ++it;
      fn(i, j, edge);
    }
  }
}

inline void check_size(const Graph& g, const ParamVector& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != g.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "parameter vector has length " + std::to_string(alpha.size()) +
                    " but graph has " + std::to_string(g.size()) + " nodes");
  }
}

/// Neumaier-compensated running sum; order-dependent but deterministic.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

/// Bernoulli log-likelihood, summed over all pairs i < j in ascending order.
inline double log_lik(const Graph& g, const LinkSpec& link, const ParamVector& alpha) {
  detail::check_size(g, alpha);
  detail::CompensatedSum ll;
  detail::for_each_pair(g, [&](std::size_t i, std::size_t j, bool edge) {
    const LogProbs lp = log_probs(link, alpha[i], alpha[j]);
    ll.add(edge ? lp.log_p : lp.log_1mp);
  });
  return ll.value();
}

struct LikelihoodEval {
  double log_lik = 0.0;
  Vector gradient;
};

/**
 * Log-likelihood and score in one pass over the pairs.
 *
 * Per pair the score contribution to alpha_k is
 *   (X - e^{a_k + a_j}) + X f + e^{a_k + a_j} fbar,
 * with f = eps_k + p/(1-p) (1 + eps_k) and fbar = 1 - e^eps (1 + f).
 * Substituting fbar gives (X - p)(1 + f) with 1 + f = (1 + eps_k)/(1 - p),
 * which is evaluated per edge state so that neither branch cancels:
 * edges contribute 1 + eps_k, non-edges -(1 + eps_k) p/(1 - p).
 */
inline LikelihoodEval evaluate(const Graph& g, const LinkSpec& link, const ParamVector& alpha) {
  detail::check_size(g, alpha);
  LikelihoodEval out;
  out.gradient = Vector::Zero(static_cast<Eigen::Index>(g.size()));
  detail::CompensatedSum ll;
  auto& grad = out.gradient;
  detail::for_each_pair(g, [&](std::size_t i, std::size_t j, bool edge) {
    const PairEval pe = evaluate_pair(link, alpha[i], alpha[j]);
    const double ux = 1.0 + pe.eps_x;
    const double uy = 1.0 + pe.eps_y;
    if (edge) {
      ll.add(pe.log_p);
      grad[i] += ux;
      grad[j] += uy;
    } else {
      ll.add(pe.log_1mp);
      const double odds = std::exp(pe.log_p - pe.log_1mp);
      grad[i] -= ux * odds;
      grad[j] -= uy * odds;
    }
  });
  out.log_lik = ll.value();
  return out;
}

inline Vector gradient(const Graph& g, const LinkSpec& link, const ParamVector& alpha) {
  return evaluate(g, link, alpha).gradient;
}

/// max_k |grad_k| / X_{k+}.
inline double scaled_score_norm(const Graph& g, const Vector& grad) {
  double m = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    m = std::max(m, std::abs(grad[static_cast<Eigen::Index>(k)]) /
                        static_cast<double>(g.degree(k)));
  }
  return m;
}

/**
 * H = -(D + d d^T / X_{++}), with d the degree vector and D = diag(d).
 *
 * Depends on the graph only. Since d^T D^{-1} d = X_{++}, Sherman-Morrison
 * gives H^{-1} = -D^{-1} + 1 1^T / (2 X_{++}).
 */
class StructuredHessian {
 public:
  explicit StructuredHessian(const Graph& g)
      : degrees_(static_cast<Eigen::Index>(g.size())),
        total_(static_cast<double>(g.total_degree())) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      degrees_[static_cast<Eigen::Index>(i)] = static_cast<double>(g.degree(i));
    }
  }

  Eigen::Index size() const { return degrees_.size(); }
  const Vector& degrees() const { return degrees_; }
  double total_degree() const { return total_; }

  Matrix dense() const {
    Matrix h = -(degrees_ * degrees_.transpose()) / total_;
    h.diagonal() -= degrees_;
    return h;
  }

  Vector apply(const Vector& v) const {
    return -(degrees_.cwiseProduct(v)) - degrees_ * (degrees_.dot(v) / total_);
  }

  Vector apply_inverse(const Vector& v) const {
    if ((degrees_.array() <= 0.0).any()) {
      throw Error(ErrorKind::IsolatedNode, "structured Hessian is singular");
    }
    const double shift = v.sum() / (2.0 * total_);
    return (shift - v.cwiseQuotient(degrees_).array()).matrix();
  }

 private:
  Vector degrees_;
  double total_;
};

enum class HessianMode { Dense, Structured };

using HessianRep = std::variant<Matrix, StructuredHessian>;

inline constexpr std::size_t kDefaultDenseCap = 2000;

/// Exact Hessian of the log-likelihood; O(n^2) memory.
inline Matrix dense_hessian(const Graph& g, const LinkSpec& link, const ParamVector& alpha,
                            std::size_t cap = kDefaultDenseCap) {
  detail::check_size(g, alpha);
  if (g.size() > cap) {
    throw Error(ErrorKind::CapExceeded, "dense Hessian requested for n = " +
                                            std::to_string(g.size()) + " above cap " +
                                            std::to_string(cap));
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix h = Matrix::Zero(n, n);
  detail::for_each_pair(g, [&](std::size_t i, std::size_t j, bool edge) {
    const double x = alpha[i];
    const double y = alpha[j];
    const PairEval pe = evaluate_pair(link, x, y);
    const SecondPartials sx = link.d2eps(x, y);
    const SecondPartials sy = link.sum_only ? sx : link.d2eps(y, x);
    const double ux = 1.0 + pe.eps_x;
    const double uy = 1.0 + pe.eps_y;
    // Pair term of the score is u (X - p)/(1 - p). Differentiating:
    //   d2/dx dy = eps_xy (X - p)/(1 - p) + u_x u_y p (X - 1)/(1 - p)^2.
    double w1 = 1.0;
    double w2 = 0.0;
    if (!edge) {
      const double odds = std::exp(pe.log_p - pe.log_1mp);
      w1 = -odds;
      w2 = -odds * std::exp(-pe.log_1mp);
    }
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    const double cross = sx.cross * w1 + ux * uy * w2;
    h(a, b) += cross;
    h(b, a) += cross;
    h(a, a) += sx.same * w1 + ux * ux * w2;
    h(b, b) += sy.same * w1 + uy * uy * w2;
  });
  return h;
}

inline HessianRep hessian(const Graph& g, const LinkSpec& link, const ParamVector& alpha,
                          HessianMode mode, std::size_t cap = kDefaultDenseCap) {
  if (mode == HessianMode::Structured) return StructuredHessian(g);
  return dense_hessian(g, link, alpha, cap);
}

/// (-D^{-1} + 1 1^T / (2 X_{++})) v in O(n).
inline Vector apply_H_inverse(const Graph& g, const Vector& v) {
  require_no_isolated(g);
  if (static_cast<std::size_t>(v.size()) != g.size()) {
    throw Error(ErrorKind::InvalidArgument, "vector length does not match graph");
  }
  return StructuredHessian(g).apply_inverse(v);
}

namespace detail {

/**
 * Sign vectors v with v_i + v_j = 0 on every non-adjacent pair: one per
 * bipartite component of the complement graph, +1 on one side and -1 on the
 * other. A node adjacent to everything is its own component.
 */
inline std::vector<std::vector<int>> complement_bipartite_signs(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<int> color(n, 0);
  std::vector<NodeIndex> unvisited(n);
  for (std::size_t i = 0; i < n; ++i) unvisited[i] = n - 1 - i;
  std::vector<std::vector<int>> out;
  std::vector<char> mark(n, 0);

  while (!unvisited.empty()) {
    // Complement BFS: each scan either claims a node or charges an edge.
    std::vector<NodeIndex> comp{unvisited.back()};
    unvisited.pop_back();
    color[comp[0]] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      const NodeIndex u = comp[head];
      std::vector<NodeIndex> keep;
      for (NodeIndex w : unvisited) {
        if (g.has_edge(u, w)) {
          keep.push_back(w);
        } else {
          color[w] = -color[u];
          comp.push_back(w);
        }
      }
      unvisited.swap(keep);
    }
    // Bipartite in the complement iff each side is a clique in g.
    for (NodeIndex u : comp) mark[u] = 1;
    bool ok = true;
    for (int side : {1, -1}) {
      std::size_t size = 0;
      for (NodeIndex u : comp) size += color[u] == side;
      for (NodeIndex u : comp) {
        if (color[u] != side || !ok) continue;
        std::size_t same = 0;
        for (NodeIndex w : g.neighbors(u)) same += mark[w] == 1 && color[w] == side;
        ok = same + 1 == size;
      }
    }
    for (NodeIndex u : comp) mark[u] = 0;
    if (!ok) continue;
    std::vector<int> v(n, 0);
    for (NodeIndex u : comp) v[u] = color[u];
    out.push_back(std::move(v));
  }
  return out;
}

/// Keeps the sign vectors along which the likelihood is exactly flat at alpha.
inline Matrix filter_flat(const Graph& g, const LinkSpec& link, const ParamVector& alpha,
                          const std::vector<std::vector<int>>& signs) {
  std::vector<const std::vector<int>*> keep;
  if (link.sum_only) {
    for (const auto& v : signs) {
      Degree balance = 0;
      for (std::size_t k = 0; k < g.size(); ++k) balance += v[k] * g.degree(k);
      bool flat = balance == 0;
      for (std::size_t i = 0; i < g.size() && flat; ++i) {
        for (NodeIndex j : g.neighbors(i)) {
          if (j <= i || v[i] + v[j] == 0) continue;
          const auto ai = alpha[static_cast<Eigen::Index>(i)];
          const auto aj = alpha[static_cast<Eigen::Index>(j)];
          if (link.d2eps(ai, aj).cross != 0.0) {
            flat = false;
            break;
          }
        }
      }
      if (flat) keep.push_back(&v);
    }
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(g.size()),
                            static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = (*keep[c])[k];
    }
    out.col(static_cast<Eigen::Index>(c)).normalize();
  }
  return out;
}

}  // namespace detail

/**
 * Orthonormal directions along which the log-likelihood is exactly constant
 * near alpha, so the MLE is not unique. Moving along v with v_i + v_j = 0 on
 * every non-adjacent pair leaves the non-edge terms alone; the edge terms
 * are then linear when eps'' vanishes on the edges v moves (the log link),
 * and their slope sum_k X_{k+} v_k must be zero. The 4-cycle under the log
 * link has two such directions.
 */
inline Matrix flat_directions(const Graph& g, const LinkSpec& link, const ParamVector& alpha) {
  detail::check_size(g, alpha);
  return detail::filter_flat(g, link, alpha, detail::complement_bipartite_signs(g));
}

/**
 * Score of the Poisson log-likelihood at the plug-in estimate:
 * X_{k+} - sum_{j != k} exp(at_k + at_j), where exp(at_k + at_j) is
 * X_{k+} X_{j+} / X_{++}. Analytically equal to X_{k+}^2 / X_{++}.
 */
inline Vector poisson_score_at_plugin(const Graph& g) {
  require_no_isolated(g);
  const std::size_t n = g.size();
  const double total = static_cast<double>(g.total_degree());
  Vector score(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double dk = static_cast<double>(g.degree(k));
    detail::CompensatedSum expected;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      expected.add(dk * static_cast<double>(g.degree(j)) / total);
    }
    score[static_cast<Eigen::Index>(k)] = dk - expected.value();
  }
  return score;
}

}  // namespace nullmodel
