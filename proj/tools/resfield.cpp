// resfield command-line front end.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "resfield/resfield.hpp"

namespace {

using namespace resfield;

constexpr const char* kVersion = RESFIELD_VERSION;

struct PointArgs {
  std::string file;
  std::size_t per_edge = 2;
  bool include_vertices = false;
};

struct SimArgs {
  std::string graph;
  PointArgs points;
  std::string algorithm = "spectral";
  std::string model;
  std::size_t copies = 1000;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::string interval = "-50,50";
  bool adaptive = false;
  std::string germ = "cauchy";
  unsigned threads = 1;
  std::string out = "-";
  std::string replay;
  bool quiet = false;
};

void emit(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_text_file(path, content);
  }
}

void info(bool quiet, const std::string& msg) {
  if (!quiet) std::cerr << msg << "\n";
}

std::pair<double, double> parse_interval(const std::string& text) {
  const auto parts = split_csv_line(text);
  if (parts.size() != 2) throw ParseError("interval must be 'lo,hi', got '" + text + "'");
  return {parse_double(parts[0], "interval lo"), parse_double(parts[1], "interval hi")};
}

PointSet select_points(const MetricGraph& g, const PointArgs& a) {
  if (!a.file.empty()) return load_points(g, read_text_file(a.file));
  return discretize(g, a.per_edge, a.include_vertices);
}

SimConfig make_config(const SimArgs& a) {
  SimConfig cfg;
  cfg.algorithm = parse_algorithm(a.algorithm);
  if (a.model.empty()) throw ArgumentError("--model is required");
  cfg.model = parse_model(a.model);
  cfg.copies = a.copies;
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  std::tie(cfg.lo, cfg.hi) = parse_interval(a.interval);
  cfg.adaptive_interval = a.adaptive;
  cfg.germ = parse_germ_density(a.germ);
  cfg.threads = a.threads;
  cfg.validate();
  return cfg;
}

Provenance sim_provenance(const SimArgs& a, const SimConfig& cfg) {
  Provenance p;
  p.set("resfield", kVersion);
  p.set("command", "simulate");
  p.set("graph", a.graph);
  p.set("points", a.points.file);
  p.set("points_per_edge", std::to_string(a.points.per_edge));
  p.set("include_vertices", a.points.include_vertices ? "1" : "0");
  p.set("algorithm", std::string(algorithm_name(cfg.algorithm)));
  p.set("model", cfg.model.to_string());
  p.set("M", std::to_string(cfg.copies));
  p.set("reps", std::to_string(cfg.reps));
  p.set("seed", std::to_string(cfg.seed));
  p.set("interval", format_double(cfg.lo) + "," + format_double(cfg.hi));
  p.set("adaptive_interval", cfg.adaptive_interval ? "1" : "0");
  p.set("germ", cfg.germ.to_string());
  return p;
}

void apply_replay(SimArgs& a) {
  const RealizationTable table = read_realization_csv(read_text_file(a.replay));
  const Provenance& p = table.provenance;
  auto need = [&](const char* key) -> const std::string& {
    const std::string* v = p.find(key);
    if (!v) throw ParseError("replay file lacks provenance key '" + std::string(key) + "'");
    return *v;
  };
  if (need("command") != "simulate") throw ParseError("replay file was not written by 'simulate'");
  a.graph = need("graph");
  a.points.file = need("points");
  a.points.per_edge = static_cast<std::size_t>(std::stoull(need("points_per_edge")));
  a.points.include_vertices = need("include_vertices") == "1";
  a.algorithm = need("algorithm");
  a.model = need("model");
  a.copies = static_cast<std::size_t>(std::stoull(need("M")));
  a.reps = static_cast<std::size_t>(std::stoull(need("reps")));
  a.seed = std::stoull(need("seed"));
  a.interval = need("interval");
  a.adaptive = need("adaptive_interval") == "1";
  a.germ = need("germ");
}

int run_simulate(SimArgs a) {
  if (!a.replay.empty()) apply_replay(a);
  if (a.graph.empty()) throw ArgumentError("--graph is required");
  const SimConfig cfg = make_config(a);
  const MetricGraph g = load_graph_file(a.graph);
  const LaplacianSystem sys = LaplacianSystem::build(g);
  const PointSet ps = select_points(g, a.points);
  const RealizationSet real = simulate(g, sys, ps, cfg);
  if (real.poisson) {
    std::cerr << "warning: poisson: observed Z range [" << format_double(real.poisson->z_min) << ", "
              << format_double(real.poisson->z_max) << "] within I=[" << format_double(cfg.lo) << ", "
              << format_double(cfg.hi) << "]; covariance truncation bias bound "
              << format_double(real.poisson->truncation_bound) << "\n";
  }
  emit(a.out, write_realization_csv(g, ps, real, sim_provenance(a, cfg)));
  info(a.quiet, "simulated " + std::to_string(ps.size()) + " points x " + std::to_string(cfg.reps) + " reps in " +
                    format_double(real.wall_seconds) + " s");
  return 0;
}

void add_sim_options(CLI::App* cmd, SimArgs& a, bool with_reps) {
  cmd->add_option("--graph", a.graph, "Graph file (JSON or CSV edge list)");
  cmd->add_option("--points", a.points.file, "Points CSV (kind,ref,t); overrides --points-per-edge");
  cmd->add_option("--points-per-edge", a.points.per_edge, "Equispaced interior points per edge")->check(CLI::PositiveNumber);
  cmd->add_flag("--include-vertices", a.points.include_vertices, "Also simulate at every vertex");
  cmd->add_option("--algorithm", a.algorithm, "spectral, poisson or germ")->capture_default_str();
  cmd->add_option("--model", a.model, "Covariance model, e.g. S1:a=0.2 or D2:a=0.2");
  cmd->add_option("--M", a.copies, "Independent copies per realization")->capture_default_str();
  if (with_reps) cmd->add_option("--reps", a.reps, "Realizations")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Master seed")->capture_default_str();
  cmd->add_option("--interval", a.interval, "Poisson germ interval lo,hi (write --interval=-50,50)")->capture_default_str();
  cmd->add_flag("--adaptive-interval", a.adaptive, "Poisson: fit I to each copy's Z range (compact f only)");
  cmd->add_option("--germ", a.germ, "Germ density: cauchy or normal[:location=..,scale=..]")->capture_default_str();
  cmd->add_option("--threads", a.threads, "Worker threads (0 = all cores)")->envname("RESFIELD_THREADS")->capture_default_str();
  cmd->add_flag("-q,--quiet", a.quiet, "Suppress progress messages");
}

int run_resistance(const std::string& graph, const PointArgs& pts, const std::string& anchor, const std::string& out) {
  const MetricGraph g = load_graph_file(graph);
  std::optional<std::size_t> u0;
  if (!anchor.empty()) u0 = g.vertex_index(anchor);
  const LaplacianSystem sys = LaplacianSystem::build(g, u0);
  const PointSet ps = select_points(g, pts);
  const ResistanceMatrix dmat = resistance_matrix(g, sys, ps);
  Provenance p;
  p.set("resfield", kVersion);
  p.set("command", "resistance");
  p.set("graph", graph);
  p.set("anchor", g.vertex(sys.anchor()).id);
  emit(out, write_resistance_csv(ps, dmat, p));
  return 0;
}

struct VariogramArgs {
  std::string graph;
  std::string realization;
  std::string model;
  std::size_t bins = kDefaultBinCount;
  std::uint64_t pair_seed = 0;
  std::string out = "-";
};

int run_variogram(const VariogramArgs& a, Estimator kind) {
  const MetricGraph g = load_graph_file(a.graph);
  const RealizationTable table = read_realization_csv(read_text_file(a.realization));
  std::string model_text = a.model;
  if (model_text.empty()) {
    const std::string* m = table.provenance.find("model");
    if (!m) throw ArgumentError("--model is required (realization file carries no model)");
    model_text = *m;
  }
  const CovarianceModel model = parse_model(model_text);
  std::vector<PointRef> refs;
  for (const auto& raw : table.points) refs.push_back(canonical_point(g, raw));
  const PointSet ps = PointSet::from_list(g, std::move(refs));
  const LaplacianSystem sys = LaplacianSystem::build(g);
  const ResistanceMatrix dmat = resistance_matrix(g, sys, ps);

  RealizationSet real;
  real.points = ps.size();
  real.reps = table.reps;
  real.values = table.values;
  const PairIndex idx = PairIndex::build(dmat, equal_width_bins(dmat.max(), a.bins), kDefaultPairCap, a.pair_seed);
  const VariogramEstimate est = detail::binned_estimate(real, idx, kind);
  for (const auto& n : est.notices) std::cerr << "notice: " << n << "\n";

  Provenance p;
  p.set("resfield", kVersion);
  p.set("command", kind == Estimator::Semivariogram ? "variogram" : "madogram");
  p.set("graph", a.graph);
  p.set("realization", a.realization);
  p.set("model", model.to_string());
  p.set("bins", std::to_string(a.bins));
  emit(a.out, write_variogram_csv(bin_tests(est, model), p));

  if (real.reps >= 2) {
    const auto lags = scale_relative_lags(dmat.max());
    const TTestReport report = variogram_ttest(est, model, lags);
    std::cerr << "lag_center,t_stat,critical,accept\n";
    for (const auto& t : report.lags)
      std::cerr << format_double(t.lag_center) << "," << format_double(t.t_stat) << "," << format_double(t.critical)
                << "," << (t.accept ? "yes" : "no") << "\n";
    std::cerr << "accepted " << report.accepted() << " of " << report.lags.size() << " lags\n";
  }
  return 0;
}

struct NormalityArgs {
  SimArgs sim;
  std::size_t n = 2;
  std::size_t batches = 100;
  std::size_t runs = 100;
  std::uint64_t weights_seed = 1;
  std::uint64_t locations_seed = 2;
};

int run_normality(NormalityArgs a) {
  if (a.sim.graph.empty()) throw ArgumentError("--graph is required");
  a.sim.reps = a.batches * a.runs;
  const SimConfig cfg = make_config(a.sim);
  const MetricGraph g = load_graph_file(a.sim.graph);
  const LaplacianSystem sys = LaplacianSystem::build(g);
  const PointSet locs = random_locations(g, a.n, a.locations_seed);
  const std::vector<double> w = draw_weights(a.n, a.weights_seed);
  const NormalityReport report = normality_experiment(g, sys, cfg, locs, w, a.runs, a.batches);
  Provenance p = sim_provenance(a.sim, cfg);
  p.set("command", "test normality");
  p.set("n", std::to_string(a.n));
  p.set("batches", std::to_string(a.batches));
  p.set("runs_per_batch", std::to_string(a.runs));
  p.set("weights_seed", std::to_string(a.weights_seed));
  p.set("locations_seed", std::to_string(a.locations_seed));
  emit(a.sim.out, write_normality_csv(report, p));
  info(a.sim.quiet, "in band at " + format_double(100.0 * report.fraction_in_band()) + "% of alpha levels");
  return 0;
}

struct BenchArgs {
  SimArgs sim;
  int k_min = 5;
  int k_max = 10;
};

int run_bench(BenchArgs a) {
  if (a.sim.model.empty()) a.sim.model = a.sim.algorithm == "spectral" ? "S1:a=0.2" : "D2:a=0.2";
  const SimConfig cfg = make_config(a.sim);
  const MetricGraph g = a.sim.graph.empty() ? streets503_graph() : load_graph_file(a.sim.graph);
  const BenchReport report = benchmark(g, cfg, doubling_counts(g.edge_count(), a.k_min, a.k_max));
  std::string csv = "target_points,points,seconds\n";
  for (const auto& r : report.rows)
    csv += std::to_string(r.target_points) + "," + std::to_string(r.points) + "," + format_double(r.seconds) + "\n";
  emit(a.sim.out, csv);
  std::cerr << "setup (factorization) " << format_double(report.setup_seconds) << " s; log-log slope "
            << format_double(report.slope) << "; max doubling ratio " << format_double(report.max_doubling_ratio) << "\n";
  return 0;
}

int run_validate(const std::string& path) {
  const MetricGraph g = parse_graph_document(read_text_file(path));
  const ValidationReport report = validate_graph(g);
  if (!report.empty()) throw ValidationError(report.to_string());
  std::cout << "ok: " << g.vertex_count() << " vertices, " << g.edge_count() << " edges, total length "
            << format_double(g.total_length()) << "\n";
  return 0;
}

// Fills options not given on the command line from a flat key=value file.
void apply_config(CLI::App* cmd, const std::string& path) {
  std::istringstream in(read_text_file(path));
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
    if (!opt || item.name == "config") throw ArgumentError("config file '" + path + "': unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ';';
  while (!s.empty() && s.back() == ';') s.pop_back();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::string config_path;
  CLI::App app{"Gaussian random fields on graphs with Euclidean edges"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto* graph_cmd = app.add_subcommand("graph", "Graph utilities");
  graph_cmd->require_subcommand(1);
  std::string validate_path;
  auto* validate_cmd = graph_cmd->add_subcommand("validate", "Check that a graph is simple, connected and positively lengthed");
  validate_cmd->add_option("file", validate_path, "Graph file")->required();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate realizations at a point set");
  sim_cmd->add_option("--config", config_path, "Flat key=value file of flag values (command line wins)");
  add_sim_options(sim_cmd, sim, true);
  sim_cmd->add_option("--out", sim.out, "Output CSV ('-' for stdout)")->capture_default_str();
  sim_cmd->add_option("--replay", sim.replay, "Re-run from the provenance header of a realization file");

  std::string res_graph;
  std::string res_anchor;
  std::string res_out = "-";
  PointArgs res_points;
  auto* res_cmd = app.add_subcommand("resistance", "Pairwise resistance distances");
  res_cmd->add_option("--config", config_path, "Flat key=value file of flag values (command line wins)");
  res_cmd->add_option("--graph", res_graph, "Graph file")->required();
  res_cmd->add_option("--points", res_points.file, "Points CSV (kind,ref,t)");
  res_cmd->add_option("--points-per-edge", res_points.per_edge, "Equispaced interior points per edge")->check(CLI::PositiveNumber);
  res_cmd->add_flag("--include-vertices", res_points.include_vertices, "Include every vertex");
  res_cmd->add_option("--anchor", res_anchor, "Anchor vertex id (default: smallest id)");
  res_cmd->add_option("--out", res_out, "Output CSV ('-' for stdout)");

  VariogramArgs vario;
  VariogramArgs mado;
  auto add_vario = [&config_path](CLI::App* cmd, VariogramArgs& v) {
    cmd->add_option("--config", config_path, "Flat key=value file of flag values (command line wins)");
    cmd->add_option("--graph", v.graph, "Graph file")->required();
    cmd->add_option("--realization", v.realization, "Realization CSV written by 'simulate'")->required();
    cmd->add_option("--model", v.model, "Model for the theoretical curve (default: from the file)");
    cmd->add_option("--bins", v.bins, "Equal-width bins over [0, 0.9 max d_R]")->capture_default_str();
    cmd->add_option("--pair-seed", v.pair_seed, "Seed for pair subsampling");
    cmd->add_option("--out", v.out, "Output CSV ('-' for stdout)");
  };
  auto* vario_cmd = app.add_subcommand("variogram", "Empirical semi-variogram with Student tests");
  add_vario(vario_cmd, vario);
  auto* mado_cmd = app.add_subcommand("madogram", "Empirical semi-madogram with Student tests");
  add_vario(mado_cmd, mado);

  NormalityArgs norm;
  norm.sim.copies = 500;
  auto* test_cmd = app.add_subcommand("test", "Statistical experiments");
  test_cmd->require_subcommand(1);
  auto* norm_cmd = test_cmd->add_subcommand("normality", "Shapiro-Wilk batches on a random linear combination");
  norm_cmd->add_option("--config", config_path, "Flat key=value file of flag values (command line wins)");
  add_sim_options(norm_cmd, norm.sim, false);
  norm_cmd->add_option("--n", norm.n, "Number of locations")->capture_default_str();
  norm_cmd->add_option("--batches", norm.batches, "Batches")->capture_default_str();
  norm_cmd->add_option("--runs", norm.runs, "Realizations per batch")->capture_default_str();
  norm_cmd->add_option("--weights-seed", norm.weights_seed, "Seed of the Unif(-10,10) weights")->capture_default_str();
  norm_cmd->add_option("--locations-seed", norm.locations_seed, "Seed of the random locations")->capture_default_str();
  norm_cmd->add_option("--out", norm.sim.out, "Output CSV ('-' for stdout)");

  BenchArgs bench;
  bench.sim.copies = 200;
  auto* bench_cmd = app.add_subcommand("bench", "Time simulation against the number of points");
  bench_cmd->add_option("--config", config_path, "Flat key=value file of flag values (command line wins)");
  add_sim_options(bench_cmd, bench.sim, false);
  bench_cmd->add_option("--k-min", bench.k_min, "Smallest size is edges * 2^k-min")->capture_default_str();
  bench_cmd->add_option("--k-max", bench.k_max, "Largest size is edges * 2^k-max")->capture_default_str();
  bench_cmd->add_option("--out", bench.sim.out, "Output CSV ('-' for stdout)");

  std::string examples_dir = "networks";
  auto* ex_cmd = app.add_subcommand("examples", "Write the bundled example networks");
  ex_cmd->add_option("dir", examples_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (!config_path.empty()) {
      for (auto* sub : {sim_cmd, res_cmd, vario_cmd, mado_cmd, norm_cmd, bench_cmd})
        if (*sub) apply_config(sub, config_path);
    }
    if (*validate_cmd) return run_validate(validate_path);
    if (*sim_cmd) return run_simulate(sim);
    if (*res_cmd) return run_resistance(res_graph, res_points, res_anchor, res_out);
    if (*vario_cmd) return run_variogram(vario, Estimator::Semivariogram);
    if (*mado_cmd) return run_variogram(mado, Estimator::Semimadogram);
    if (*norm_cmd) return run_normality(norm);
    if (*bench_cmd) return run_bench(bench);
    if (*ex_cmd) {
      for (const auto& f : write_examples(examples_dir)) std::cout << f << "\n";
      return 0;
    }
  } catch (const resfield::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 2;
}
