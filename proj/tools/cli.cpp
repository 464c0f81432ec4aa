#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "paratransit/branch_bound.hpp"
#include "paratransit/errors.hpp"
#include "paratransit/gcn.hpp"
#include "paratransit/instance.hpp"
#include "paratransit/milp_model.hpp"
#include "paratransit/oracle.hpp"
#include "paratransit/random.hpp"
#include "paratransit/scenario.hpp"
#include "paratransit/solution_io.hpp"

namespace paratransit::cli {

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "csv";
  double time_limit = 30.0;
  bool verbose = false;
};

struct GeneratorFlags {
  GeneratorConfig config;
  std::string demand_mode = "grouped";

  GeneratorConfig resolve() const {
    GeneratorConfig c = config;
    c.demand_mode = demand_mode_from_string(demand_mode);
    return c;
  }
};

void add_generator_flags(CLI::App* cmd, GeneratorFlags& flags, bool with_counts) {
  if (with_counts) {
    cmd->add_option("--requests", flags.config.request_count, "Persons requesting a ride")->capture_default_str();
    cmd->add_option("--capacity", flags.config.capacity, "Vehicle capacity in seats")->capture_default_str();
  }
  cmd->add_option("--center-lat", flags.config.center_lat, "Depot / sampling-square centre latitude")
      ->capture_default_str();
  cmd->add_option("--center-lon", flags.config.center_lon, "Depot / sampling-square centre longitude")
      ->capture_default_str();
  cmd->add_option("--jitter", flags.config.jitter, "Half-width of the sampling square, degrees")
      ->capture_default_str();
  cmd->add_option("--demand-mode", flags.demand_mode, "unit | grouped")
      ->check(CLI::IsMember({"unit", "grouped"}))
      ->capture_default_str();
  cmd->add_option("--max-group", flags.config.max_group, "Largest party size in grouped mode")
      ->capture_default_str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
}

std::string default_solution_path(const std::string& instance_path) {
  std::filesystem::path p(instance_path);
  p.replace_extension();
  return p.string() + ".solution.json";
}

void print_stats(const SolveStats& stats, const GlobalOptions& g, std::ostream& out) {
  if (g.format == "json") {
    out << stats_json(stats) << "\n";
  } else {
    out << kStatsCsvHeader << "\n" << stats_csv_row(stats) << "\n";
  }
}

int cmd_generate(const GlobalOptions& g, const GeneratorFlags& flags, std::ostream& out) {
  const Instance instance = generate_instance(flags.resolve(), g.seed);
  write_text(g.output, instance_to_json(instance), out);
  return kExitOk;
}

struct SolveFlags {
  std::string instance;
  std::optional<long> node_limit;
  double gap_target = 0.0;
  std::optional<int> min_vehicles;
  std::optional<int> max_vehicles;
  std::string warm_start_model;
  int beam = 1;
  std::string node_selection = "plunge";
};

int cmd_solve(const GlobalOptions& g, const SolveFlags& f, std::ostream& out, std::ostream& err) {
  const Instance instance = read_instance(f.instance);
  ModelOptions mo;
  mo.min_vehicles = f.min_vehicles;
  mo.max_vehicles = f.max_vehicles;
  const MilpModel model = build_model(instance, mo);

  SearchParams params;
  params.time_limit_s = g.time_limit;
  params.node_limit = f.node_limit;
  params.gap_target_percent = f.gap_target;
  params.verbose = g.verbose;
  if (f.node_selection == "best") params.node_selection = NodeSelection::best_bound;
  if (f.node_selection == "dfs") params.node_selection = NodeSelection::depth_first;
  if (!f.warm_start_model.empty()) {
    const gcn::Model net = gcn::load_model(f.warm_start_model);
    const gcn::Example ex = gcn::make_training_example(instance, {});
    const auto fwd = gcn::forward(net, ex.features, ex.a_hat, ex.edge_costs);
    params.warm_start = gcn::decode_routes(fwd.heatmap, instance, f.beam);
  }

  try {
    const SolveResult result = solve(model, params);
    SolutionFile sol;
    sol.objective = result.stats.objective;
    sol.routes = result.routes;
    sol.stats = result.stats;
    sol.status = to_string(result.stats.termination);
    const std::string path = g.output.empty() ? default_solution_path(f.instance) : g.output;
    write_solution(sol, path);
    print_stats(result.stats, g, out);
    return result.stats.termination == Termination::optimal ? kExitOk : kExitLimit;
  } catch (const NoIncumbentError& e) {
    err << "error: " << e.what() << " (best bound " << e.best_bound() << ")\n";
    return kExitNoIncumbent;
  }
}

int cmd_oracle(const GlobalOptions& g, const std::string& instance_path, std::ostream& out) {
  const Instance instance = read_instance(instance_path);
  const OracleResult r = exact_cvrp(instance);
  SolutionFile sol;
  sol.objective = r.objective;
  sol.routes = r.routes;
  sol.status = "oracle";
  const std::string path = g.output.empty() ? default_solution_path(instance_path) : g.output;
  write_solution(sol, path);
  if (g.format == "json") {
    out << nlohmann::json{{"objective", r.objective}, {"routes", r.routes.size()},
                          {"partitions_evaluated", r.partitions_evaluated}}
               .dump()
        << "\n";
  } else {
    out << "objective,routes,partitions_evaluated\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.10g,%zu,%ld\n", r.objective, r.routes.size(), r.partitions_evaluated);
    out << buf;
  }
  return kExitOk;
}

struct GridFlags {
  std::vector<int> requests{10, 15, 20, 30, 40};
  std::vector<int> capacities{10, 15, 20};
  std::optional<long> node_limit;
  int jobs = 1;
  std::string trends_dir;
  GeneratorFlags generator;
};

int cmd_grid(const GlobalOptions& g, const GridFlags& f, std::ostream& out) {
  GridConfig config;
  config.requests = f.requests;
  config.capacities = f.capacities;
  config.seed_base = g.seed;
  config.time_limit_s = g.time_limit;
  config.node_limit = f.node_limit;
  config.generator = f.generator.resolve();
  config.jobs = f.jobs;
  config.verbose = g.verbose;
  const auto rows = run_scenario_grid(config);
  write_text(g.output, g.format == "json" ? grid_to_json(rows) : grid_to_csv(rows), out);
  if (!f.trends_dir.empty()) emit_trends(rows, f.trends_dir);
  return kExitOk;
}

int cmd_trends(const GlobalOptions& g, const std::string& grid_path, std::ostream& out) {
  std::ifstream in(grid_path);
  if (!in) throw std::runtime_error("cannot open " + grid_path + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto rows = grid_from_csv(buffer.str());
  const auto written = emit_trends(rows, g.output.empty() ? "trends" : g.output);
  for (const auto& p : written) out << p.string() << "\n";
  return kExitOk;
}

struct TrainFlags {
  std::string dataset;
  int train_count = 200;
  int epochs = 200;
  int batch_size = 0;
  double learning_rate = 1e-3;
  gcn::Hyperparams hp;
  std::optional<int> knn;
  GeneratorFlags generator;
};

int cmd_train(const GlobalOptions& g, const TrainFlags& f, std::ostream& out) {
  if (g.output.empty()) throw std::runtime_error("train-gcn: --output <checkpoint> is required");
  gcn::GraphOptions graph;
  graph.knn = f.knn;
  std::vector<gcn::Example> examples;
  if (!f.dataset.empty()) {
    std::ifstream in(f.dataset);
    if (!in) throw std::runtime_error("cannot open " + f.dataset + " for reading");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(f.dataset + ": " + e.what());
    }
    const auto base = std::filesystem::path(f.dataset).parent_path();
    if (!doc.contains("examples") || !doc["examples"].is_array()) {
      throw ParseError(f.dataset + ": missing field \"examples\"");
    }
    for (const auto& item : doc["examples"]) {
      const Instance instance = read_instance(base / item.at("instance").get<std::string>());
      const SolutionFile sol = read_solution(base / item.at("solution").get<std::string>());
      if (const auto v = check_feasibility(instance, sol.routes); !v.empty()) {
        throw std::runtime_error("training label infeasible: " + v.front());
      }
      examples.push_back(gcn::make_training_example(instance, sol.routes, graph));
    }
  } else {
    GeneratorConfig cfg = f.generator.resolve();
    for (int k = 0; k < f.train_count; ++k) {
      const Instance instance = generate_instance(cfg, g.seed + static_cast<std::uint64_t>(k));
      examples.push_back(gcn::make_training_example(instance, label_instance(instance, g.time_limit), graph));
    }
  }
  gcn::TrainParams tp;
  tp.epochs = f.epochs;
  tp.batch_size = f.batch_size;
  tp.learning_rate = f.learning_rate;
  tp.seed = g.seed;
  tp.verbose = g.verbose;
  const gcn::Model init = gcn::init_model(f.hp, g.seed);
  const double initial = gcn::loss_and_gradient(init, examples, nullptr);
  const auto result = gcn::train(init, examples, tp);
  const double final_loss = gcn::loss_and_gradient(result.model, examples, nullptr);
  gcn::save_model(result.model, g.output);
  out << "examples,initial_loss,final_loss\n" << examples.size() << "," << initial << "," << final_loss << "\n";
  return kExitOk;
}

struct DecodeFlags {
  std::string instance;
  std::string model;
  int beam = 1;
  std::optional<int> knn;
};

int cmd_decode(const GlobalOptions& g, const DecodeFlags& f, std::ostream& out) {
  const Instance instance = read_instance(f.instance);
  const gcn::Model net = gcn::load_model(f.model);
  gcn::GraphOptions graph;
  graph.knn = f.knn;
  const gcn::Example ex = gcn::make_training_example(instance, {}, graph);
  const auto fwd = gcn::forward(net, ex.features, ex.a_hat, ex.edge_costs);
  Routes routes = gcn::decode_routes(fwd.heatmap, instance, f.beam);
  SolutionFile sol;
  sol.objective = routes_cost(instance, routes);
  sol.routes = routes;
  sol.status = "gcn-decode";
  write_solution(sol, g.output.empty() ? default_solution_path(f.instance) : g.output);
  out << "objective,routes\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g,%zu\n", sol.objective, routes.size());
  out << buf;
  return kExitOk;
}

struct GradcheckFlags {
  int seeds = 10;
  int requests = 6;
  gcn::Hyperparams hp{4, 6, 3, 6};
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GlobalOptions& g, const GradcheckFlags& f, std::ostream& out) {
  out << "seed,checked,skipped_kinks,max_relative_error\n";
  double worst = 0.0;
  for (int s = 0; s < f.seeds; ++s) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(s);
    GeneratorConfig cfg;
    cfg.request_count = f.requests;
    cfg.capacity = 3;
    cfg.max_group = 2;
    const Instance instance = generate_instance(cfg, seed);
    const gcn::Example ex = gcn::make_training_example(instance, nearest_neighbor_routes(instance));
    const gcn::Model model = gcn::init_model(f.hp, seed);
    const auto report = gcn::gradient_check(model, {ex});
    worst = std::max(worst, report.max_relative_error);
    out << seed << "," << report.checked << "," << report.skipped_kinks << "," << report.max_relative_error << "\n";
  }
  return worst < f.tolerance ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Paratransit routing toolkit: instance generation, MILP branch and bound, "
               "exact oracle, scenario grids and a GCN edge-heatmap model"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed / seed base")->capture_default_str();
  app.add_option("-o,--output", g.output, "Output path (file or directory, per subcommand)");
  app.add_option("--format", g.format, "Stats output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--time-limit", g.time_limit, "Branch-and-bound wall-clock limit, seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Progress logging on stderr");

  GeneratorFlags gen_flags;
  auto* generate = app.add_subcommand("generate", "Generate a random instance (JSON)");
  add_generator_flags(generate, gen_flags, true);

  SolveFlags solve_flags;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance with branch and bound");
  solve_cmd->add_option("instance", solve_flags.instance, "Instance JSON")->required();
  solve_cmd->add_option("--node-limit", solve_flags.node_limit, "Stop after this many nodes");
  solve_cmd->add_option("--gap-target", solve_flags.gap_target, "Stop once the gap (%) is at most this");
  solve_cmd->add_option("--min-vehicles", solve_flags.min_vehicles, "Lower bound on routes");
  solve_cmd->add_option("--max-vehicles", solve_flags.max_vehicles, "Upper bound on routes");
  solve_cmd->add_option("--warm-start-model", solve_flags.warm_start_model,
                        "GCN checkpoint whose decoded routes seed the incumbent");
  solve_cmd->add_option("--beam", solve_flags.beam, "Beam width for the warm-start decoder")->capture_default_str();
  solve_cmd->add_option("--node-selection", solve_flags.node_selection, "plunge | best | dfs")
      ->check(CLI::IsMember({"plunge", "best", "dfs"}))
      ->capture_default_str();

  std::string oracle_instance;
  auto* oracle = app.add_subcommand("oracle", "Brute-force optimum for tiny instances");
  oracle->add_option("instance", oracle_instance, "Instance JSON")->required();

  GridFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "Run the requests x capacity scenario grid");
  grid->add_option("--requests", grid_flags.requests, "Request counts")->delimiter(',')->capture_default_str();
  grid->add_option("--capacities", grid_flags.capacities, "Vehicle capacities")->delimiter(',')->capture_default_str();
  grid->add_option("--node-limit", grid_flags.node_limit, "Per-cell node limit");
  grid->add_option("--jobs", grid_flags.jobs, "Cells solved concurrently")->capture_default_str();
  grid->add_option("--trends-dir", grid_flags.trends_dir, "Also write trend CSVs to this directory");
  add_generator_flags(grid, grid_flags.generator, false);

  std::string trends_input;
  auto* trends = app.add_subcommand("trends", "Split a grid CSV into per-n and per-Q trend files");
  trends->add_option("grid_csv", trends_input, "Grid CSV produced by `grid`")->required();

  TrainFlags train_flags;
  train_flags.generator.config.request_count = 10;
  train_flags.generator.config.capacity = 6;
  train_flags.generator.config.max_group = 3;
  auto* train = app.add_subcommand("train-gcn", "Train the edge-heatmap GCN");
  train->add_option("--dataset", train_flags.dataset, "JSON list of {instance, solution} file pairs");
  train->add_option("--train-count", train_flags.train_count, "Generated instances when no dataset is given")
      ->capture_default_str();
  train->add_option("--requests", train_flags.generator.config.request_count, "Requests per generated instance")
      ->capture_default_str();
  train->add_option("--capacity", train_flags.generator.config.capacity, "Capacity of generated instances")
      ->capture_default_str();
  add_generator_flags(train, train_flags.generator, false);
  train->add_option("--epochs", train_flags.epochs)->capture_default_str();
  train->add_option("--batch-size", train_flags.batch_size, "0 = full batch")->capture_default_str();
  train->add_option("--lr", train_flags.learning_rate)->capture_default_str();
  train->add_option("--hidden", train_flags.hp.hidden)->capture_default_str();
  train->add_option("--layers", train_flags.hp.layers)->capture_default_str();
  train->add_option("--edge-hidden", train_flags.hp.edge_hidden)->capture_default_str();
  train->add_option("--knn", train_flags.knn, "Sparsify the input graph to k nearest neighbours");

  DecodeFlags decode_flags;
  auto* decode = app.add_subcommand("decode", "Decode routes from a trained GCN heatmap");
  decode->add_option("instance", decode_flags.instance, "Instance JSON")->required();
  decode->add_option("--model", decode_flags.model, "GCN checkpoint")->required();
  decode->add_option("--beam", decode_flags.beam, "Beam width")->capture_default_str();
  decode->add_option("--knn", decode_flags.knn, "k used at training time, if any");

  GradcheckFlags grad_flags;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of GCN gradients");
  gradcheck->add_option("--seeds", grad_flags.seeds)->capture_default_str();
  gradcheck->add_option("--requests", grad_flags.requests)->capture_default_str();
  gradcheck->add_option("--tolerance", grad_flags.tolerance)->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*generate) return cmd_generate(g, gen_flags, out);
    if (*solve_cmd) return cmd_solve(g, solve_flags, out, err);
    if (*oracle) return cmd_oracle(g, oracle_instance, out);
    if (*grid) return cmd_grid(g, grid_flags, out);
    if (*trends) return cmd_trends(g, trends_input, out);
    if (*train) return cmd_train(g, train_flags, out);
    if (*decode) return cmd_decode(g, decode_flags, out);
    if (*gradcheck) return cmd_gradcheck(g, grad_flags, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace paratransit::cli
