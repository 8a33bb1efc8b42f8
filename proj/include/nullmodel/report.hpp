#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nullmodel/certificate.hpp"
#include "nullmodel/error.hpp"
#include "nullmodel/estimation.hpp"
#include "nullmodel/graph.hpp"
#include "nullmodel/likelihood.hpp"
#include "nullmodel/link.hpp"

namespace nullmodel {

/// Six significant digits, the fixed float format of every CSV/report value.
inline std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string name;
  std::string path;
};

/// `name = relative/path` per line; '#' comments and blank lines skipped.
/// Relative paths are resolved against base_dir.
inline std::vector<ManifestEntry> parse_manifest(std::istream& in,
                                                 const std::filesystem::path& base_dir = {}) {
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::MalformedLine,
                  "manifest line " + std::to_string(line_no) + ": expected 'name = path'");
    }
    ManifestEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1))};
    if (e.name.empty() || e.path.empty()) {
      throw Error(ErrorKind::MalformedLine,
                  "manifest line " + std::to_string(line_no) + ": empty name or path");
    }
    std::filesystem::path p(e.path);
    if (p.is_relative() && !base_dir.empty()) e.path = (base_dir / p).string();
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest '" + path + "'");
  return parse_manifest(in, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Table rows

struct TableRow {
  std::string dataset;
  std::size_t n = 0;
  Degree x_plus_plus = 0;
  Degree max_degree = 0;
  std::string link;
  double valid_pct = 0.0;
  double scaled_l2 = std::numeric_limits<double>::quiet_NaN();
  double scaled_sup = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  std::string error;  // empty on success
};

inline TableRow table_row(const std::string& dataset, const Graph& g, const LinkSpec& link,
                          const FitOptions& opts = {}) {
  TableRow row;
  row.dataset = dataset;
  row.n = g.size();
  row.x_plus_plus = g.total_degree();
  row.max_degree = g.max_degree();
  row.link = link.name;
  row.valid_pct = 100.0 * sparsity_stats(g).valid_fraction(link.c0);
  try {
    const PluginEstimate plug = plugin_estimate(g);
    const FitResult fit = fit_mle(g, link, opts);
    row.iterations = fit.iterations;
    row.converged = fit.converged;
    if (fit.converged) {
      const ErrorReport rep = error_report(g, link, fit, plug);
      row.scaled_l2 = rep.scaled_l2;
      row.scaled_sup = rep.scaled_sup;
    } else {
      row.error = "not converged";
    }
  } catch (const Error& e) {
    row.converged = false;
    row.error = e.what();
  }
  return row;
}

inline std::vector<TableRow> table_rows(const std::string& dataset, const Graph& g,
                                        const FitOptions& opts = {}) {
  std::vector<TableRow> rows;
  for (const LinkSpec& link : builtin_links()) rows.push_back(table_row(dataset, g, link, opts));
  return rows;
}

inline const char* kTableCsvHeader =
    "dataset,n,x_plus_plus,max_degree,link,valid_pct,scaled_l2,scaled_sup,converged,iterations";

inline void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << kTableCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.n << ',' << r.x_plus_plus << ',' << r.max_degree << ','
        << r.link << ',' << fmt6(r.valid_pct) << ',' << fmt6(r.scaled_l2) << ','
        << fmt6(r.scaled_sup) << ',' << fmt_bool(r.converged) << ',' << r.iterations << '\n';
  }
}

inline void write_table_text(std::ostream& out, const std::vector<TableRow>& rows) {
  std::size_t name_w = 7;
  for (const auto& r : rows) name_w = std::max(name_w, r.dataset.size());
  out << std::left << std::setw(static_cast<int>(name_w)) << "dataset" << std::right
      << std::setw(8) << "n" << std::setw(10) << "X++" << std::setw(8) << "maxdeg" << "  "
      << std::left << std::setw(8) << "link" << std::right << std::setw(8) << "valid%"
      << std::setw(12) << "l2/(vnCe)" << std::setw(12) << "sup/(Ce)" << std::setw(6) << "conv"
      << std::setw(6) << "iter" << '\n';
  std::string previous;
  for (const auto& r : rows) {
    const bool first = r.dataset != previous;
    previous = r.dataset;
    out << std::left << std::setw(static_cast<int>(name_w)) << (first ? r.dataset : "")
        << std::right << std::setw(8) << (first ? std::to_string(r.n) : "") << std::setw(10)
        << (first ? std::to_string(r.x_plus_plus) : "") << std::setw(8)
        << (first ? std::to_string(r.max_degree) : "") << "  " << std::left << std::setw(8)
        << r.link << std::right << std::setw(8) << fmt6(r.valid_pct) << std::setw(12)
        << fmt6(r.scaled_l2) << std::setw(12) << fmt6(r.scaled_sup) << std::setw(6)
        << (r.converged ? "yes" : "no") << std::setw(6) << r.iterations << '\n';
  }
}

// ---------------------------------------------------------------------------
// Figure data

struct FigurePoint {
  std::string node;
  Degree degree = 0;
  double scaled_error = 0.0;
  std::string link;
};

inline std::vector<FigurePoint> figure_points(const Graph& g, const LinkSpec& link,
                                              const ErrorReport& rep) {
  std::vector<FigurePoint> pts;
  pts.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    pts.push_back({g.label(i), g.degree(i), rep.per_node_scaled[i], link.name});
  }
  return pts;
}

inline void write_figure_csv(std::ostream& out, const std::vector<FigurePoint>& pts,
                             bool header = true) {
  if (header) out << "node,degree,link,scaled_error\n";
  for (const auto& p : pts) {
    out << p.node << ',' << p.degree << ',' << p.link << ',' << fmt6(p.scaled_error) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Single-fit report

namespace detail {

class KeyValueWriter {
 public:
  explicit KeyValueWriter(std::ostream& out) : out_(out) {}
  void section(const std::string& name) {
    if (started_) out_ << '\n';
    started_ = true;
    out_ << '[' << name << "]\n";
  }
  void put(const std::string& key, const std::string& value) {
    out_ << key << " = " << value << '\n';
  }
  void put(const std::string& key, double v) { put(key, fmt6(v)); }
  void put_int(const std::string& key, long long v) { put(key, std::to_string(v)); }
  void put_bool(const std::string& key, bool v) { put(key, fmt_bool(v)); }

 private:
  std::ostream& out_;
  bool started_ = false;
};

}  // namespace detail

struct FitReport {
  const Graph* graph = nullptr;
  const LinkSpec* link = nullptr;
  const PluginEstimate* plugin = nullptr;
  const FitResult* fit = nullptr;
  const Certificate* certificate = nullptr;
  const ErrorReport* errors = nullptr;
  const BoundVerdict* bounds = nullptr;
};

/// Plain `key = value` lines grouped in [section]s; absent parts are skipped.
inline void write_fit_report(std::ostream& out, const FitReport& r) {
  detail::KeyValueWriter kv(out);
  if (r.graph) {
    const SparsityStats s = sparsity_stats(*r.graph);
    kv.section("graph");
    kv.put_int("n", static_cast<long long>(r.graph->size()));
    kv.put_int("edges", static_cast<long long>(r.graph->edge_count()));
    kv.put_int("x_plus_plus", r.graph->total_degree());
    kv.put_int("min_degree", s.min_degree);
    kv.put_int("max_degree", s.max_degree);
    kv.put("eps0", s.eps0);
    if (r.link) kv.put("valid_pct", 100.0 * s.valid_fraction(r.link->c0));
  }
  if (r.link) {
    kv.section("link");
    kv.put("name", r.link->name);
    kv.put("c0", r.link->c0);
  }
  if (r.plugin) {
    const auto& a = r.plugin->alpha_tilde;
    kv.section("plugin");
    kv.put("alpha_tilde_min", a.minCoeff());
    kv.put("alpha_tilde_max", a.maxCoeff());
    kv.put("max_p_tilde", r.plugin->max_p_tilde);
    kv.put("ll_tilde", r.plugin->ll_tilde ? fmt6(*r.plugin->ll_tilde) : "undefined");
  }
  if (r.fit) {
    kv.section("fit");
    kv.put("solver", std::string(to_string(r.fit->solver)));
    kv.put_bool("converged", r.fit->converged);
    kv.put_int("iterations", r.fit->iterations);
    kv.put("score_norm", r.fit->score_norm);
    kv.put("ll_hat", r.fit->ll_hat);
    kv.put("alpha_hat_min", r.fit->alpha_hat.minCoeff());
    kv.put("alpha_hat_max", r.fit->alpha_hat.maxCoeff());
  }
  if (r.certificate) {
    const Certificate& c = *r.certificate;
    kv.section("certificate");
    kv.put_bool("applies", c.applies);
    kv.put("status", std::string(to_string(c.status)));
    if (!c.reason.empty()) kv.put("reason", c.reason);
    kv.put("eps0", c.eps0);
    kv.put("eps_bar0", c.eps_bar0);
    kv.put("C", c.C);
    kv.put("C1", c.C1);
    kv.put("C2", c.C2);
    kv.put("L1", c.L1);
    kv.put("B0", c.B0);
    kv.put("kappa", c.kappa);
    kv.put("delta", c.delta);
    kv.put("r", c.r);
    kv.put("lambda", c.lambda);
    kv.put("h", c.h);
    kv.put("t_star", c.t_star);
  }
  if (r.errors) {
    const ErrorReport& e = *r.errors;
    kv.section("errors");
    kv.put("sup_err", e.sup_err);
    kv.put("l2_err", e.l2_err);
    kv.put("scaled_sup", e.scaled_sup);
    kv.put("scaled_l2", e.scaled_l2);
    kv.put("p_rel_max", e.p_rel_max);
    kv.put("ll_rel", e.ll_rel ? fmt6(*e.ll_rel) : "undefined");
  }
  if (r.bounds) {
    const BoundVerdict& b = *r.bounds;
    kv.section("bounds");
    kv.put_bool("guaranteed", b.guaranteed);
    kv.put_bool("sup_within_C_eps0", b.sup_ok);
    kv.put_bool("p_within_C1_eps0", b.p_ok);
    kv.put("ll_within_C2_eps0", b.ll_ok ? fmt_bool(*b.ll_ok) : "undefined");
  }
}

// ---------------------------------------------------------------------------
// Synthetic parameters

namespace detail {

/// Expected mean degree (2/n) sum_{i<j} p_ij for alpha_i = shift + i * step.
inline double expected_mean_degree(std::size_t n, double shift, double step,
                                   const LinkSpec& link) {
  double total = 0.0;
  if (link.sum_only) {
    // p_ij depends on i + j only; count the pairs i < j with i + j = k.
    for (std::size_t k = 1; k + 1 < 2 * n; ++k) {
      const std::size_t lo = k >= n ? k - (n - 1) : 0;
      const std::size_t hi = (k + 1) / 2;  // i < k / 2
      if (hi <= lo) continue;
      const double half = shift + 0.5 * static_cast<double>(k) * step;
      total += static_cast<double>(hi - lo) * edge_prob(link, half, half).p;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        total += edge_prob(link, shift + static_cast<double>(i) * step,
                           shift + static_cast<double>(j) * step)
                     .p;
      }
    }
  }
  return 2.0 * total / static_cast<double>(n);
}

}  // namespace detail

/**
 * Heterogeneous parameters for synthetic graphs: exp(alpha_i) log-spaced over
 * a `spread`-fold range, shifted by bisection so the expected mean degree
 * sum_i sum_{j != i} p_ij / n matches `mean_degree`.
 */
inline ParamVector heterogeneous_alpha(std::size_t n, double mean_degree, const LinkSpec& link,
                                       double spread = 10.0) {
  if (n < 2) throw Error(ErrorKind::InfeasibleTarget, "need at least 2 nodes");
  if (!(mean_degree >= 1.0)) throw Error(ErrorKind::InfeasibleTarget, "mean degree must be >= 1");
  if (mean_degree >= static_cast<double>(n - 1)) {
    throw Error(ErrorKind::InfeasibleTarget, "mean degree " + fmt6(mean_degree) +
                                                 " not below n - 1 = " + std::to_string(n - 1));
  }
  if (!(spread >= 1.0)) throw Error(ErrorKind::InvalidArgument, "spread must be >= 1");
  const double step = std::log(spread) / static_cast<double>(n - 1);

  auto mean_at = [&](double shift) -> std::optional<double> {
    try {
      return detail::expected_mean_degree(n, shift, step, link);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DomainError) return std::nullopt;
      throw;
    }
  };

  double lo = -60.0;
  double hi = 60.0;
  // Bounded links: the largest predictor 2*shift + (2n-3)*step must stay < 0.
  if (!mean_at(hi)) {
    hi = -0.5 * static_cast<double>(2 * n - 3) * step - 1e-9;
    if (!mean_at(hi)) throw Error(ErrorKind::InfeasibleTarget, "link domain too narrow");
  }
  if (*mean_at(hi) < mean_degree) {
    throw Error(ErrorKind::InfeasibleTarget,
                "mean degree " + fmt6(mean_degree) + " unreachable under link '" + link.name + "'");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (*mean_at(mid) < mean_degree) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  ParamVector alpha(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    alpha[static_cast<Eigen::Index>(i)] = lo + static_cast<double>(i) * step;
  }
  return alpha;
}

inline void write_alpha(std::ostream& out, const Graph& g, const ParamVector& alpha) {
  out << "# node alpha\n";
  char buf[64];
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", alpha[static_cast<Eigen::Index>(i)]);
    out << g.label(i) << ' ' << buf << '\n';
  }
}

}  // namespace nullmodel
