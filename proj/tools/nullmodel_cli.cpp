// nullmodel: fit degree-based null models, tabulate plug-in/MLE errors,
// emit per-node error data and sample synthetic graphs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nullmodel/nullmodel.hpp"

namespace nm = nullmodel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitFitFailed = 3;

struct CommonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  std::string solver = "auto";
  std::size_t dense_cap = nm::kDefaultDenseCap;
  std::string out;
};

nm::FitOptions fit_options(const CommonOptions& c) {
  nm::FitOptions o;
  o.tolerance = c.tol;
  o.max_iterations = c.max_iter;
  o.dense_cap = c.dense_cap;
  if (c.solver == "exact") {
    o.solver = nm::Solver::ExactNewton;
  } else if (c.solver == "precond") {
    o.solver = nm::Solver::Preconditioned;
  }
  return o;
}

nm::LinkSpec require_link(const std::string& name) {
  auto link = nm::link_by_name(name);
  if (!link) throw nm::Error(nm::ErrorKind::InvalidArgument, "unknown link '" + name + "'");
  return *link;
}

int exit_code_for(const nm::Error& e) {
  switch (e.kind()) {
    case nm::ErrorKind::MleDiverged: return kExitDiverged;
    case nm::ErrorKind::LineSearchFailed:
    case nm::ErrorKind::NotConverged: return kExitFitFailed;
    default: return kExitInput;
  }
}

/// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw nm::Error(nm::ErrorKind::Io, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

int run_fit(const std::string& path, const std::string& link_name, const CommonOptions& c) {
  const nm::LinkSpec link = require_link(link_name);
  const nm::Graph g = nm::read_edge_list(path);
  const nm::PluginEstimate plug = nm::plugin_estimate(g);
  const nm::Certificate cert = nm::certificate(g, link);
  const nm::FitResult fit = nm::fit_mle(g, link, fit_options(c));

  Output out(c.out);
  nm::FitReport rep{&g, &link, &plug, &fit, &cert, nullptr, nullptr};
  if (!fit.converged) {
    nm::write_fit_report(out.stream(), rep);
    std::cerr << "error: fit did not converge in " << fit.iterations << " iterations\n";
    return kExitFitFailed;
  }
  const nm::ErrorReport errors = nm::error_report(g, link, fit, plug);
  const nm::BoundVerdict verdict = nm::check_bounds(cert, errors);
  rep.errors = &errors;
  rep.bounds = &verdict;
  nm::write_fit_report(out.stream(), rep);
  return kExitOk;
}

int run_table(const std::string& manifest, bool csv, const CommonOptions& c) {
  const auto entries = nm::read_manifest(manifest);
  std::vector<nm::TableRow> rows;
  for (const auto& e : entries) {
    try {
      const nm::Graph g = nm::read_edge_list(e.path);
      for (auto& r : nm::table_rows(e.name, g, fit_options(c))) rows.push_back(std::move(r));
    } catch (const nm::Error& err) {
      for (const auto& link : nm::builtin_links()) {
        nm::TableRow r;
        r.dataset = e.name;
        r.link = link.name;
        r.error = err.what();
        rows.push_back(std::move(r));
      }
    }
  }
  for (const auto& r : rows) {
    if (!r.error.empty()) std::cerr << "warning: " << r.dataset << "/" << r.link << ": " << r.error << '\n';
  }
  if (csv) {
    Output out(c.out);
    nm::write_table_csv(out.stream(), rows);
  } else {
    nm::write_table_text(std::cout, rows);
    if (!c.out.empty()) {
      Output out(c.out);
      nm::write_table_csv(out.stream(), rows);
    }
  }
  return kExitOk;
}

int run_figure(const std::string& path, std::vector<std::string> links, const CommonOptions& c) {
  if (links.empty()) links = {"cloglog", "log", "logit"};
  std::vector<nm::LinkSpec> specs;
  for (const auto& name : links) specs.push_back(require_link(name));
  const nm::Graph g = nm::read_edge_list(path);
  const nm::PluginEstimate plug = nm::plugin_estimate(g);

  std::vector<nm::FigurePoint> points;
  for (const auto& link : specs) {
    const nm::FitResult fit = nm::fit_mle(g, link, fit_options(c));
    if (!fit.converged) {
      throw nm::Error(nm::ErrorKind::NotConverged, "link '" + link.name + "' did not converge");
    }
    const auto pts = nm::figure_points(g, link, nm::error_report(g, link, fit, plug));
    points.insert(points.end(), pts.begin(), pts.end());
  }
  Output out(c.out);
  nm::write_figure_csv(out.stream(), points);
  return kExitOk;
}

int run_sample(std::size_t n, double mean, double spread, const std::string& link_name,
               std::uint64_t seed, const std::string& out_path) {
  const nm::LinkSpec link = require_link(link_name);
  const nm::ParamVector alpha = nm::heterogeneous_alpha(n, mean, link, spread);
  const nm::Graph g = nm::sample_graph(alpha, link, seed);
  {
    Output out(out_path);
    out.stream() << "# n=" << n << " target_mean=" << nm::fmt6(mean) << " link=" << link.name
                 << " seed=" << seed << " realized_mean="
                 << nm::fmt6(static_cast<double>(g.total_degree()) / static_cast<double>(n))
                 << '\n';
    out.stream() << nm::serialize_edge_list(g);
  }
  Output alpha_out(out_path + ".alpha");
  nm::write_alpha(alpha_out.stream(), g, alpha);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degree-based network null models: plug-in estimates, MLE fits, error certificates"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_fit_flags = [&common](CLI::App* sub) {
    sub->add_option("--tol", common.tol, "Scaled score tolerance")->capture_default_str();
    sub->add_option("--max-iter", common.max_iter, "Newton iteration limit")->capture_default_str();
    sub->add_option("--solver", common.solver, "Newton solver")
        ->check(CLI::IsMember({"auto", "exact", "precond"}))
        ->capture_default_str();
    sub->add_option("--dense-cap", common.dense_cap, "Largest n for the dense Hessian")
        ->capture_default_str();
  };

  std::string path;
  std::string link_name = "logit";
  std::vector<std::string> figure_links;
  bool csv = false;

  auto* fit = app.add_subcommand("fit", "Fit one edge list and print a key-value report");
  fit->add_option("path", path, "Edge list")->required();
  fit->add_option("--link", link_name, "Link function")
      ->check(CLI::IsMember({"log", "cloglog", "logit"}))
      ->capture_default_str();
  add_fit_flags(fit);
  fit->add_option("--out", common.out, "Report file (default stdout)");

  std::string manifest;
  auto* table = app.add_subcommand("table", "Tabulate scaled errors for every dataset in a manifest");
  table->add_option("manifest", manifest, "Manifest of 'name = path' lines")->required();
  table->add_flag("--csv", csv, "Print CSV instead of the aligned table");
  add_fit_flags(table);
  table->add_option("--out", common.out, "CSV file");

  auto* figure = app.add_subcommand("figure", "Per-node scaled errors as CSV");
  figure->add_option("path", path, "Edge list")->required();
  figure->add_option("--link", figure_links, "Link function (repeatable; default all)")
      ->check(CLI::IsMember({"log", "cloglog", "logit"}));
  add_fit_flags(figure);
  figure->add_option("--out", common.out, "CSV file (default stdout)");

  std::size_t n = 0;
  double mean = 0.0;
  double spread = 10.0;
  std::uint64_t seed = 1;
  std::string sample_out;
  auto* sample = app.add_subcommand("sample", "Sample a synthetic graph with heterogeneous degrees");
  sample->add_option("n", n, "Number of nodes")->required();
  sample->add_option("mean", mean, "Target mean degree")->required();
  sample->add_option("--link", link_name, "Link function")
      ->check(CLI::IsMember({"log", "cloglog", "logit"}))
      ->capture_default_str();
  sample->add_option("--seed", seed, "mt19937_64 seed")->capture_default_str();
  sample->add_option("--spread", spread, "Ratio of largest to smallest exp(alpha)")
      ->capture_default_str();
  sample->add_option("--out", sample_out, "Edge list path; alpha goes to <out>.alpha")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return run_fit(path, link_name, common);
    if (*table) return run_table(manifest, csv, common);
    if (*figure) return run_figure(path, figure_links, common);
    if (*sample) return run_sample(n, mean, spread, link_name, seed, sample_out);
  } catch (const nm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
