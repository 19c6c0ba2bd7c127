// Command-line front end: enumeration, scoring, exact posteriors, the
// simulated estimation pipeline, raw circuit simulation, and report
// merging. Every JSON report embeds the resolved configuration so a run
// can be reproduced from its output alone.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qbn/estimate.hpp"
#include "qbn/json_io.hpp"
#include "qbn/oracle.hpp"

namespace {

using qbn::Json;

struct CommonConfig {
  std::string data_path;
  std::string feature_spec = "trivial";
  std::string prior = "uniform-subsets";
  std::string phi = "constant";
  int lmax = -1;
  int threads = 1;
  int max_qubits = 26;
  int graph_bound = 5;
  int perm_bound = 8;
  std::vector<int> cardinalities;
  Json phi_table = Json::array();
  std::string config_path;
  std::string output_path;
};

Json resolved_config(const CommonConfig& c, const std::string& command) {
  Json out{{"command", command},
           {"prior", c.prior},
           {"phi", c.phi},
           {"feature", c.feature_spec},
           {"threads", c.threads},
           {"max_qubits", c.max_qubits},
           {"graph_bound", c.graph_bound},
           {"perm_bound", c.perm_bound}};
  if (!c.data_path.empty()) out["data"] = c.data_path;
  if (c.lmax >= 0) out["lmax"] = c.lmax;
  return out;
}

// Values from --config fill anything the command line left at default.
void merge_config_file(CLI::App* cmd, CommonConfig& c) {
  if (c.config_path.empty()) return;
  std::ifstream in(c.config_path);
  if (!in) throw qbn::Error("cannot open config file " + c.config_path);
  Json j = Json::parse(in);
  auto unset = [&](const char* flag) {
    auto* opt = cmd->get_option_no_throw(flag);
    return opt == nullptr || opt->count() == 0;
  };
  if (j.contains("prior") && unset("--prior")) c.prior = j["prior"].get<std::string>();
  if (j.contains("phi") && unset("--phi")) c.phi = j["phi"].get<std::string>();
  if (j.contains("feature") && unset("--feature")) c.feature_spec = j["feature"].get<std::string>();
  if (j.contains("lmax") && unset("--lmax")) c.lmax = j["lmax"].get<int>();
  if (j.contains("threads") && unset("--threads")) c.threads = j["threads"].get<int>();
  if (j.contains("max_qubits") && unset("--max-qubits")) c.max_qubits = j["max_qubits"].get<int>();
  if (j.contains("cardinalities")) c.cardinalities = j["cardinalities"].get<std::vector<int>>();
  if (j.contains("phi_table")) c.phi_table = j["phi_table"];
}

qbn::PriorSpec parse_prior(const CommonConfig& c) {
  qbn::PriorSpec prior;
  if (c.prior == "uniform-subsets")
    prior.parent_prior = qbn::ParentPrior::UniformSubsets;
  else if (c.prior == "uniform-sizes")
    prior.parent_prior = qbn::ParentPrior::UniformSizes;
  else
    throw CLI::ValidationError("--prior", "expected uniform-subsets or uniform-sizes");
  if (c.phi == "constant") {
    prior.phi = qbn::OrderPotential::Constant;
  } else if (c.phi == "delta-id") {
    prior.phi = qbn::OrderPotential::DeltaNatural;
  } else if (c.phi == "table") {
    prior.phi = qbn::OrderPotential::Table;
    for (const auto& entry : c.phi_table)
      prior.phi_table[{entry.at("j").get<int>(),
                       qbn::list_to_mask(entry.at("S").get<std::vector<int>>())}] =
          entry.at("value").get<double>();
    if (prior.phi_table.empty())
      throw CLI::ValidationError("--phi", "table potential needs phi_table entries in the config file");
  } else {
    throw CLI::ValidationError("--phi", "expected constant, delta-id, or table");
  }
  return prior;
}

qbn::ModularFeatureSet parse_feature(const std::string& spec, int n) {
  if (spec == "trivial") return qbn::ModularFeatureSet::trivial(n);
  if (spec.rfind("edge:", 0) == 0) {
    const auto dash = spec.find('-', 5);
    if (dash == std::string::npos)
      throw CLI::ValidationError("--feature", "edge form is edge:FROM-TO");
    try {
      const int from = std::stoi(spec.substr(5, dash - 5));
      const int to = std::stoi(spec.substr(dash + 1));
      return qbn::edge_feature(from, to, n);
    } catch (const std::invalid_argument&) {
      throw CLI::ValidationError("--feature", "edge endpoints must be integers");
    }
  }
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream in(spec.substr(1));
    if (!in) throw qbn::Error("cannot open feature file " + spec.substr(1));
    Json j = Json::parse(in);
    if (!j.contains("n")) j["n"] = n;
    return qbn::feature_from_json(j);
  }
  throw CLI::ValidationError("--feature", "expected trivial, edge:J1-J2, or @file.json");
}

qbn::Dataset load_data(const CommonConfig& c) {
  if (c.data_path.empty()) throw CLI::RequiredError("--data");
  std::ifstream in(c.data_path);
  if (!in) throw qbn::Error("cannot open dataset " + c.data_path);
  qbn::LoadOptions opts;
  opts.cardinality_override = c.cardinalities;
  return qbn::load_dataset(in, opts);
}

void emit(const Json& payload, const CommonConfig& c, bool json_to_stdout = true) {
  const std::string text = payload.dump(2) + "\n";
  if (!c.output_path.empty()) {
    std::ofstream out(c.output_path);
    if (!out) throw qbn::Error("cannot open output file " + c.output_path);
    out << text;
  }
  if (json_to_stdout && c.output_path.empty()) std::cout << text;
}

int env_max_qubits() {
  if (const char* env = std::getenv("QBN_MAX_QUBITS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 26;
}

std::string format_mask(qbn::NodeMask m) {
  std::string s = "{";
  bool first = true;
  for (int v : qbn::mask_to_list(m)) {
    if (!first) s += ",";
    s += std::to_string(v);
    first = false;
  }
  return s + "}";
}

std::string format_graph(const qbn::Graph& g) {
  std::string s = "(";
  for (int j = g.n - 1; j >= 0; --j) {
    s += format_mask(g.parents[j]);
    if (j > 0) s += ", ";
  }
  return s + ")";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian network structure posteriors, classically and on a simulated quantum circuit"};
  app.require_subcommand(1);

  CommonConfig cfg;
  cfg.max_qubits = env_max_qubits();
  app.add_option("--threads", cfg.threads, "simulation worker threads");

  // enumerate -------------------------------------------------------------
  auto* enumerate = app.add_subcommand("enumerate", "list DAGs, induced frames, combinations, or orders");
  enumerate->require_subcommand(1);
  int enum_n = 3, enum_k = 0, enum_bound = 5;
  bool enum_json = false;
  std::string sigma_csv, graph_json;

  auto* dags = enumerate->add_subcommand("dags", "natural-order DAGs on n nodes");
  dags->add_option("--n", enum_n, "node count")->required();
  dags->add_option("--bound", enum_bound, "enumeration bound");
  dags->add_flag("--json", enum_json, "emit JSON instead of text");

  auto* fcg = enumerate->add_subcommand("fcg", "fully connected DAG induced by a permutation");
  fcg->add_option("--sigma", sigma_csv, "permutation image, e.g. 0,2,1")->required();
  fcg->add_flag("--json", enum_json);

  auto* combos = enumerate->add_subcommand("combinations", "k-subsets of {0..n-1}");
  combos->add_option("--n", enum_n)->required();
  combos->add_option("--k", enum_k)->required();
  combos->add_flag("--json", enum_json);

  auto* sym = enumerate->add_subcommand("sym", "permutations consistent with a graph");
  sym->add_option("--graph", graph_json, "graph as inline JSON")->required();
  sym->add_option("--bound", enum_bound, "enumeration bound")->capture_default_str();
  sym->add_flag("--json", enum_json);

  // score ------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "build the local evidence table from a dataset");
  score->add_option("--data", cfg.data_path, "CSV/TSV dataset")->required();
  score->add_option("--feature", cfg.feature_spec, "trivial | edge:J1-J2 | @file.json");
  score->add_option("--lmax", cfg.lmax, "largest conditioning-set size kept");
  score->add_option("--prior", cfg.prior, "uniform-subsets | uniform-sizes");
  score->add_option("--phi", cfg.phi, "constant | delta-id");
  score->add_option("--config", cfg.config_path, "JSON config file");
  score->add_option("-o,--output", cfg.output_path, "write JSON here");

  // posterior ---------------------------------------------------------------
  auto* posterior = app.add_subcommand("posterior", "exact classical feature posterior");
  std::string model = "ordered";
  bool per_graph = false;
  posterior->add_option("--data", cfg.data_path)->required();
  posterior->add_option("--model", model, "ordered | unordered");
  posterior->add_option("--feature", cfg.feature_spec);
  posterior->add_option("--lmax", cfg.lmax);
  posterior->add_option("--prior", cfg.prior);
  posterior->add_option("--phi", cfg.phi);
  posterior->add_flag("--per-graph", per_graph, "emit the full per-graph posterior");
  posterior->add_option("--graph-bound", cfg.graph_bound);
  posterior->add_option("--perm-bound", cfg.perm_bound);
  posterior->add_option("--config", cfg.config_path);
  posterior->add_option("-o,--output", cfg.output_path);

  // estimate ------------------------------------------------------------
  auto* estimate = app.add_subcommand("estimate", "simulated-circuit feature posterior");
  std::string mode = "exact";
  std::uint64_t shots = 100000, seed = 1;
  std::string emit_circuit;
  estimate->add_option("--data", cfg.data_path)->required();
  estimate->add_option("--feature", cfg.feature_spec);
  estimate->add_option("--lmax", cfg.lmax);
  estimate->add_option("--prior", cfg.prior);
  estimate->add_option("--phi", cfg.phi);
  estimate->add_option("--mode", mode, "exact | sampled");
  estimate->add_option("--shots", shots);
  estimate->add_option("--seed", seed);
  estimate->add_option("--max-qubits", cfg.max_qubits, "memory bound (env QBN_MAX_QUBITS)");
  estimate->add_option("--emit-circuit", emit_circuit, "also dump the numerator-run circuit JSON");
  estimate->add_option("--config", cfg.config_path);
  estimate->add_option("-o,--output", cfg.output_path);

  // simulate -------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "run a circuit JSON file");
  std::string circuit_path, dump_prefix, sample_qubits_csv;
  simulate->add_option("--circuit", circuit_path)->required();
  simulate->add_option("--shots", shots);
  simulate->add_option("--seed", seed);
  simulate->add_option("--qubits", sample_qubits_csv, "qubits to sample, e.g. 16,17");
  simulate->add_option("--dump-state", dump_prefix, "write <prefix>.bin and <prefix>.json");
  simulate->add_option("--max-qubits", cfg.max_qubits);
  simulate->add_option("-o,--output", cfg.output_path);

  // report ----------------------------------------------------------------
  auto* report = app.add_subcommand("report", "merge result files into one summary");
  std::vector<std::string> report_inputs;
  report->add_option("inputs", report_inputs, "result JSON files")->required();
  report->add_option("-o,--output", cfg.output_path);

  try {
    app.parse(argc, argv);

    auto parse_int_list = [](const std::string& csv) {
      std::vector<int> out;
      std::stringstream ss(csv);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
      return out;
    };

    if (dags->parsed()) {
      const auto list = qbn::enumerate_dags(enum_n, enum_bound);
      if (enum_json || !cfg.output_path.empty()) {
        Json arr = Json::array();
        for (const auto& g : list) arr.push_back(qbn::to_json(g));
        emit(Json{{"config", resolved_config(cfg, "enumerate dags")}, {"count", list.size()}, {"graphs", arr}},
             cfg);
      } else {
        for (std::size_t i = 0; i < list.size(); ++i)
          std::cout << "G_" << i << " = " << format_graph(list[i]) << "\n";
      }
    } else if (fcg->parsed()) {
      const qbn::Permutation p(parse_int_list(sigma_csv));
      const qbn::Graph g = qbn::fcg_for_permutation(p);
      if (enum_json || !cfg.output_path.empty())
        emit(Json{{"config", resolved_config(cfg, "enumerate fcg")}, {"sigma", p.sigma}, {"graph", qbn::to_json(g)}},
             cfg);
      else
        std::cout << format_graph(g) << "\n";
    } else if (combos->parsed()) {
      const auto list = qbn::combinations(enum_n, enum_k);
      if (enum_json || !cfg.output_path.empty()) {
        emit(Json{{"config", resolved_config(cfg, "enumerate combinations")}, {"combinations", list}}, cfg);
      } else {
        for (const auto& row : list) {
          for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? " " : "") << row[i];
          std::cout << "\n";
        }
      }
    } else if (sym->parsed()) {
      const qbn::Graph g = qbn::graph_from_json(Json::parse(graph_json));
      const auto orders = qbn::consistent_permutations(g, enum_bound);
      if (enum_json || !cfg.output_path.empty()) {
        Json arr = Json::array();
        for (const auto& p : orders) arr.push_back(p.sigma);
        emit(Json{{"config", resolved_config(cfg, "enumerate sym")}, {"count", orders.size()}, {"orders", arr}},
             cfg);
      } else {
        for (const auto& p : orders) {
          for (std::size_t i = 0; i < p.sigma.size(); ++i) std::cout << (i ? "," : "") << p.sigma[i];
          std::cout << "\n";
        }
      }
    } else if (score->parsed()) {
      merge_config_file(score, cfg);
      const qbn::Dataset d = load_data(cfg);
      const qbn::PriorSpec prior = parse_prior(cfg);
      const auto feature = parse_feature(cfg.feature_spec, d.n);
      const std::optional<int> lmax = cfg.lmax >= 0 ? std::optional<int>(cfg.lmax) : std::nullopt;
      const auto table =
          qbn::build_score_table(d, prior, feature.is_trivial() ? nullptr : &feature, lmax);
      Json out = qbn::to_json(table);
      out["config"] = resolved_config(cfg, "score");
      emit(out, cfg);
    } else if (posterior->parsed()) {
      merge_config_file(posterior, cfg);
      const qbn::Dataset d = load_data(cfg);
      const qbn::PriorSpec prior = parse_prior(cfg);
      const auto feature = parse_feature(cfg.feature_spec, d.n);
      const std::optional<int> lmax = cfg.lmax >= 0 ? std::optional<int>(cfg.lmax) : std::nullopt;
      qbn::PosteriorReport r;
      if (per_graph) {
        r = qbn::graph_posterior(d, prior, model == "unordered" ? qbn::ModelKind::Unordered : qbn::ModelKind::Ordered,
                                 std::min(cfg.graph_bound, 4), cfg.perm_bound);
      } else if (model == "unordered") {
        r = qbn::unordered_feature_posterior(d, prior, feature, cfg.graph_bound);
      } else if (model == "ordered") {
        r = qbn::ordered_feature_posterior(d, prior, feature, lmax, cfg.perm_bound);
      } else {
        throw CLI::ValidationError("--model", "expected ordered or unordered");
      }
      Json out = qbn::to_json(r);
      out["config"] = resolved_config(cfg, "posterior");
      out["config"]["model"] = model;
      emit(out, cfg);
    } else if (estimate->parsed()) {
      merge_config_file(estimate, cfg);
      const qbn::Dataset d = load_data(cfg);
      const qbn::PriorSpec prior = parse_prior(cfg);
      const auto feature = parse_feature(cfg.feature_spec, d.n);
      qbn::EstimateOptions opts;
      if (cfg.lmax >= 0) opts.lmax = cfg.lmax;
      opts.mode = mode == "sampled" ? qbn::EstimateOptions::Mode::Sampled : qbn::EstimateOptions::Mode::ExactAmplitude;
      if (mode != "sampled" && mode != "exact") throw CLI::ValidationError("--mode", "expected exact or sampled");
      opts.shots = shots;
      opts.seed = seed;
      opts.sim.max_qubits = cfg.max_qubits;
      opts.sim.threads = cfg.threads;
      opts.perm_bound = cfg.perm_bound;
      if (!emit_circuit.empty()) {
        const auto layout = qbn::QubitLayout::make(d.n, opts.lmax);
        const auto table = qbn::build_score_table(d, prior, feature.is_trivial() ? nullptr : &feature, opts.lmax);
        const auto circuit = qbn::build_state_prep(layout, table);
        std::ofstream out(emit_circuit);
        if (!out) throw qbn::Error("cannot open " + emit_circuit);
        out << qbn::circuit_to_json(circuit, &layout).dump(2) << "\n";
      }
      const auto r = qbn::estimate_feature_posterior(d, prior, feature, opts);
      Json out = qbn::to_json(r);
      out["config"] = resolved_config(cfg, "estimate");
      out["config"]["mode"] = mode;
      out["config"]["shots"] = shots;
      out["config"]["seed"] = seed;
      emit(out, cfg);
      if (cfg.output_path.empty() && r.oracle_value)
        std::cerr << "discrepancy vs oracle: " << *r.discrepancy << "\n";
    } else if (simulate->parsed()) {
      std::ifstream in(circuit_path);
      if (!in) throw qbn::Error("cannot open circuit file " + circuit_path);
      const qbn::Circuit c = qbn::circuit_from_json(Json::parse(in));
      qbn::SimOptions sopts;
      sopts.max_qubits = cfg.max_qubits;
      sopts.threads = cfg.threads;
      const qbn::StateVector state = qbn::run(c, sopts);
      Json out{{"config", resolved_config(cfg, "simulate")},
               {"qubit_count", state.qubit_count},
               {"norm", std::sqrt(state.norm_sq())}};
      if (!sample_qubits_csv.empty())
        out["histogram"] = qbn::histogram_to_json(qbn::sample(state, parse_int_list(sample_qubits_csv), shots, seed));
      if (!dump_prefix.empty()) {
        qbn::dump_state(state, dump_prefix + ".bin", dump_prefix + ".json");
        out["state_dump"] = dump_prefix + ".bin";
      }
      emit(out, cfg);
    } else if (report->parsed()) {
      Json merged{{"config", resolved_config(cfg, "report")}, {"results", Json::array()}};
      for (const auto& path : report_inputs) {
        std::ifstream in(path);
        if (!in) throw qbn::Error("cannot open result file " + path);
        Json j = Json::parse(in);
        merged["results"].push_back(Json{{"source", path}, {"payload", j}});
      }
      emit(merged, cfg);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const qbn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
