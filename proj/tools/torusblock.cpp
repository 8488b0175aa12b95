// Command-line runner for the blocking experiments.
//
//   torusblock block --metric samples/flat.json --out out/flat-block --L 1,2,3
//   torusblock verdict --config samples/cosine-verdict.json --out out/cosine
//
// Settings are layered: command defaults, then --config, then flags.
// Errors are reported on stderr as a JSON document and exit nonzero.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusblock/experiments.hpp"

using torusblock::ExperimentConfig;
using torusblock::InputError;

namespace {

struct Flags {
  std::string metric, out = "out", config;
  std::vector<double> x, y, L;
  std::vector<long> klass;
  std::vector<std::string> tol;
  int seeds = 0, grid = 0, K = 0;
  unsigned threads = 0;
  double gamma_offset = 0.0;
  bool has_gamma_offset = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--metric", f.metric, "metric JSON file");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--config", f.config, "experiment config JSON file");
  sub->add_option("--x", f.x, "first point u,v (lattice coordinates)")->delimiter(',')->expected(2);
  sub->add_option("--y", f.y, "second point u,v")->delimiter(',')->expected(2);
  sub->add_option("--L", f.L, "length budgets, increasing")->delimiter(',');
  sub->add_option("--class", f.klass, "homotopy class q,p")->delimiter(',')->expected(2);
  sub->add_option("--seeds", f.seeds, "curve-shortening seeds per class");
  sub->add_option("--grid", f.grid, "foliation grid size");
  sub->add_option("--K", f.K, "periods for the asymptotic certificate");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--tol", f.tol, "tolerance override name=value (repeatable)");
  sub->add_option_function<double>(
      "--gamma-offset",
      [&f](double v) {
        f.gamma_offset = v;
        f.has_gamma_offset = true;
      },
      "transversal seed offset of the reference closed geodesic");
}

ExperimentConfig build_config(const std::string& command, const Flags& f) {
  ExperimentConfig c = torusblock::default_config(command);
  if (!f.config.empty()) torusblock::load_config_file(c, f.config);
  if (!f.metric.empty()) c.metric_file = f.metric;
  if (!f.x.empty()) c.x = {f.x[0], f.x[1]};
  if (!f.y.empty()) c.y = {f.y[0], f.y[1]};
  if (!f.L.empty()) c.L = f.L;
  if (!f.klass.empty()) {
    c.klass = {f.klass[0], f.klass[1]};
    c.classes = {c.klass};
  }
  if (f.seeds) c.seeds = f.seeds;
  if (f.grid) c.grid = f.grid;
  if (f.K) c.K = f.K;
  if (f.threads) c.threads = f.threads;
  if (f.has_gamma_offset) c.gamma_offset = f.gamma_offset;
  for (const auto& t : f.tol) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("tol", std::nullopt, "tol: expected name=value, got '" + t + "'");
    const std::string name = t.substr(0, eq);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(t.substr(eq + 1), &used);
      if (used != t.size() - eq - 1) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw InputError("tol." + name, std::nullopt, "tol." + name + ": not a number");
    }
    c.set_tolerance(name, v);
  }
  return c;
}

int fail(const torusblock::json& err, int code) {
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blocking numbers and minimal geodesics on Riemannian 2-tori"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"block", "blocking-set growth over length budgets"},
      {"minimal", "periodic minimisers of a class and bad gaps"},
      {"slope", "average slopes of periodic minimisers"},
      {"asymptotic", "asymptotic geodesic certificate"},
      {"verdict", "flat / non-flat summary"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(torusblock::error_json("usage", e.what()), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig config = build_config(command, flags);
    const auto out = torusblock::run_experiment(config);
    torusblock::write_outputs(flags.out, out);
    std::cout << flags.out << "/report.json\n";
    return 0;
  } catch (const InputError& e) {
    return fail(torusblock::error_json("input", e.what(), e.field(), e.line()), 2);
  } catch (const std::exception& e) {
    return fail(torusblock::error_json("runtime", std::string(command) + ": " + e.what()), 1);
  }
}
