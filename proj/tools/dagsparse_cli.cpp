// dagsparse command line: dataset generation, training, pruning, graph
// analysis and full multi-seed campaigns. Exit codes: 0 success, 1 run or
// cell failures, 2 configuration or input errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/checkpoint.hpp"
#include "dagsparse/experiment.hpp"
#include "dagsparse/format.hpp"
#include "dagsparse/graph_stats.hpp"
#include "dagsparse/similarity.hpp"
#include "dagsparse/sweep.hpp"

namespace fs = std::filesystem;
using namespace dagsparse;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "key = value config file");
    app->add_option("--set", overrides, "override one config key (key=value)")->take_all();
  }
  Campaign load() const {
    ConfigMap m = file.empty() ? ConfigMap{} : read_config_file(file);
    for (const auto& o : overrides) apply_override(m, o);
    return campaign_from_config(m);
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file_atomic(path, text);
}

NetConfig net_for(const Campaign& c, const Dataset& d) {
  NetConfig n = c.net;
  n.input_resolution = d.resolution;
  n.input_channels = d.channels;
  n.num_classes = d.num_classes;
  return n;
}

std::vector<double> parse_taus(const std::string& text) {
  if (text.empty()) return default_tau_grid();
  std::vector<double> taus;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) taus.push_back(std::stod(item));
  return taus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-sparsified DAG networks: training, pruning and graph analysis"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset and save it");
  ConfigArgs gen_cfg;
  gen_cfg.attach(gen);
  std::string gen_spec = "shapes1", gen_out;
  bool gen_probe = false;
  gen->add_option("--spec", gen_spec, "dataset spec, e.g. shapes2+embed32+tear4")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "output .dgds file")->required();
  gen->add_flag("--probe", gen_probe, "print the linear probe test accuracy");

  // campaign
  auto* camp = app.add_subcommand("campaign", "run every (dataset, seed) cell and write the report");
  ConfigArgs camp_cfg;
  camp_cfg.attach(camp);
  bool show_keys = false;
  camp->add_flag("--keys", show_keys, "list config keys and exit");

  // train
  auto* train_cmd = app.add_subcommand("train", "train one fully connected DAG network");
  ConfigArgs train_cfg;
  train_cfg.attach(train_cmd);
  std::string train_data, train_out;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--data", train_data, ".dgds dataset")->required();
  train_cmd->add_option("-o,--out", train_out, "run directory")->required();
  train_cmd->add_option("--seed", train_seed, "training seed")->capture_default_str();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy and sparsity over a threshold grid");
  std::string sw_ckpt, sw_data, sw_taus, sw_out;
  sweep_cmd->add_option("--checkpoint", sw_ckpt)->required();
  sweep_cmd->add_option("--data", sw_data)->required();
  sweep_cmd->add_option("--taus", sw_taus, "comma list (default 0.001..0.012)");
  sweep_cmd->add_option("-o,--output", sw_out, "CSV path (default stdout)");

  // prune
  auto* prune_cmd = app.add_subcommand("prune", "threshold a trained network and excise dead paths");
  std::string pr_ckpt, pr_out;
  double pr_tau = kDefaultTau;
  prune_cmd->add_option("--checkpoint", pr_ckpt)->required();
  prune_cmd->add_option("--tau", pr_tau)->capture_default_str();
  prune_cmd->add_option("-o,--output", pr_out, "DOT path (default stdout)");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "graph characteristics of a pruned DOT file");
  std::string st_dot;
  std::uint64_t st_seed = 0;
  stats_cmd->add_option("--dot", st_dot)->required();
  stats_cmd->add_option("--seed", st_seed, "layout seed")->capture_default_str();

  // similarity
  auto* sim_cmd = app.add_subcommand("similarity", "RBF similarity of the runs in a features CSV");
  std::string sim_in, sim_out;
  double sim_gamma = 0;
  sim_cmd->add_option("--features", sim_in, "features_all.csv")->required();
  sim_cmd->add_option("-o,--output", sim_out, "output prefix (writes .csv and .pgm)")->required();
  sim_cmd->add_option("--gamma", sim_gamma, "kernel width, default 1/features");

  // retrain
  auto* rt_cmd = app.add_subcommand("retrain", "train a pruned architecture from scratch");
  std::string rt_ckpt, rt_data;
  double rt_tau = kDefaultTau;
  std::uint64_t rt_seed = 1;
  bool rt_fit = false;
  rt_cmd->add_option("--checkpoint", rt_ckpt, "checkpoint of the full network")->required();
  rt_cmd->add_option("--data", rt_data)->required();
  rt_cmd->add_option("--tau", rt_tau)->capture_default_str();
  rt_cmd->add_option("--seed", rt_seed, "new initialisation seed")->capture_default_str();
  rt_cmd->add_flag("--fit-c", rt_fit, "match the full network's parameter count");

  // report
  auto* rep_cmd = app.add_subcommand("report", "aggregate finished run directories");
  std::string rep_dir;
  rep_cmd->add_option("--out", rep_dir, "campaign directory containing campaign.cfg")->required();

  // export-dot
  auto* exp_cmd = app.add_subcommand("export-dot", "write the full DAG with its learned edge weights");
  std::string ex_ckpt, ex_out;
  exp_cmd->add_option("--checkpoint", ex_ckpt)->required();
  exp_cmd->add_option("-o,--output", ex_out, "DOT path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const Campaign c = gen_cfg.load();
      const Dataset d = make_dataset(c, gen_spec);
      save_dataset(gen_out, d);
      std::cout << d.name << ": " << d.train.size() << " train / " << d.test.size() << " test, " << d.resolution << "x"
                << d.resolution << "x" << d.channels << ", " << d.num_classes << " classes\n";
      if (gen_probe) std::cout << "linear probe accuracy " << fmt6(linear_probe_accuracy(d)) << "\n";
      return 0;
    }
    if (*camp) {
      if (show_keys) {
        std::cout << config_help();
        return 0;
      }
      const Campaign c = camp_cfg.load();
      const CampaignReport r = run_campaign(c, &std::cout);
      std::cout << r.cells.size() << " cells, " << r.skipped() << " already complete, " << r.failed() << " failed\n";
      for (const auto& e : r.config_errors) std::cerr << "config error: " << e << "\n";
      return r.exit_code();
    }
    if (*train_cmd) {
      const Campaign c = train_cfg.load();
      const Dataset d = load_dataset(train_data);
      TrainConfig t = c.train;
      t.seed = train_seed;
      const DagSpec g = build_full_dag(c.nodes, c.stages);
      fs::create_directories(train_out);
      const std::string ckpt = (fs::path(train_out) / "checkpoint.dgsp").string();
      TrainState<float> s = fs::exists(ckpt) ? load_checkpoint<float>(ckpt) : make_train_state<float>(g, net_for(c, d), t);
      while (s.epochs_done < s.config.epochs) {
        train_epochs(s, d, std::min(s.config.epochs, s.epochs_done + c.checkpoint_every));
        save_checkpoint(ckpt, s);
        const auto& last = s.log.epochs.back();
        std::cout << "epoch " << last.epoch << " loss " << fmt6(last.train_loss) << " sparsity "
                  << fmt6(last.sparsity_loss) << " acc " << fmt6(last.test_accuracy) << "\n";
      }
      if (s.config.epochs == 0) save_checkpoint(ckpt, s);
      std::string log = "epoch,lr,train_loss,sparsity_loss,test_accuracy\n";
      for (const auto& e : s.log.epochs)
        log += std::to_string(e.epoch) + "," + fmt6(e.lr) + "," + fmt6(e.train_loss) + "," + fmt6(e.sparsity_loss) +
               "," + fmt6(e.test_accuracy) + "\n";
      write_file_atomic((fs::path(train_out) / "train_log.csv").string(), log);
      return 0;
    }
    if (*sweep_cmd) {
      TrainState<float> s = load_checkpoint<float>(sw_ckpt);
      const Dataset d = load_dataset(sw_data);
      const auto pts = sweep(s.graph, to_edge_params(s.edges), s.params, s.net, d, parse_taus(sw_taus));
      std::string out = "tau,sparsity,accuracy,retained_edges,retained_nodes,disconnected\n";
      for (const auto& p : pts)
        out += fmt6(p.tau) + "," + fmt6(p.sparsity) + "," + fmt6(p.accuracy) + "," +
               std::to_string(p.pruned.retained_edges.size()) + "," + std::to_string(p.pruned.graph.node_count) + "," +
               (p.pruned.disconnected ? "1" : "0") + "\n";
      emit(sw_out, out);
      return 0;
    }
    if (*prune_cmd) {
      TrainState<float> s = load_checkpoint<float>(pr_ckpt);
      const EdgeParams edges = to_edge_params(s.edges);
      const PrunedGraph pg = prune(s.graph, edges, pr_tau);
      const int stages = s.graph.num_stages();
      emit(pr_out, pruned_dot_text(pg, edges, s.graph.node_count, stages, param_count(pg.graph, s.net)));
      if (pg.disconnected) std::cerr << "warning: the pruned graph is disconnected\n";
      return 0;
    }
    if (*stats_cmd) {
      std::ifstream in(st_dot);
      if (!in) throw ConfigError("cannot read " + st_dot);
      const LoadedPruned lp = read_pruned_dot(in);
      const GraphFeatures f = compute_features(lp.pruned, lp.original, lp.parameters, st_seed);
      std::cout << features_csv_header() << "\n" << features_csv_row(f) << "\n";
      return 0;
    }
    if (*sim_cmd) {
      const auto rows = read_csv(sim_in);
      if (rows.size() < 3) throw ConfigError(sim_in + " needs at least two runs");
      FeatureTable t = make_feature_table();
      const auto& h = rows[0];
      auto col = [&](const std::string& name) {
        auto it = std::find(h.begin(), h.end(), name);
        if (it == h.end()) throw ConfigError(sim_in + " lacks column " + name);
        return static_cast<std::size_t>(it - h.begin());
      };
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][col("status")] != "ok") continue;
        FeatureRow r;
        r.run_id = rows[i][col("run")];
        r.dataset = rows[i][col("dataset")];
        r.seed = std::stoull(rows[i][col("seed_index")]);
        for (const auto& name : t.names) r.values.push_back(std::stod(rows[i][col(name)]));
        t.rows.push_back(std::move(r));
      }
      const Eigen::MatrixXd k =
          similarity_matrix(t, sim_gamma > 0 ? std::optional<double>(sim_gamma) : std::nullopt);
      write_file_atomic(sim_out + ".csv", similarity_csv(t, k));
      write_file_atomic(sim_out + ".pgm", similarity_pgm(k));
      const BlockMeans bm = block_means(t, k);
      std::cout << "mean within-dataset similarity " << fmt6(bm.within) << ", across " << fmt6(bm.across) << "\n";
      return 0;
    }
    if (*rt_cmd) {
      TrainState<float> s = load_checkpoint<float>(rt_ckpt);
      const Dataset d = load_dataset(rt_data);
      const PrunedGraph pg = prune(s.graph, to_edge_params(s.edges), rt_tau);
      if (pg.disconnected) {
        std::cerr << "the pruned graph is disconnected; nothing to retrain\n";
        return 1;
      }
      RetrainOptions opt;
      opt.fit_channels = rt_fit;
      opt.target_params = param_count(s.graph, s.net);
      auto r = retrain<float>(pg.graph, s.net, s.config, d, rt_seed, opt);
      NetConfig net = s.net;
      net.base_channels = r.channels;
      const double acc = evaluate_accuracy(pg.graph, net, r.params, edge_matrix<float>(r.edges), d, d.test);
      std::cout << "variant,status,channels,parameters,test_accuracy\n"
                << (rt_fit ? "fitc" : "plain") << ",ok," << r.channels << "," << param_count(pg.graph, net) << ","
                << fmt6(acc) << "\n";
      return 0;
    }
    if (*rep_cmd) {
      ConfigMap m = read_config_file((fs::path(rep_dir) / "campaign.cfg").string());
      m["out_dir"] = rep_dir;
      write_report(campaign_from_config(m), &std::cout);
      return 0;
    }
    if (*exp_cmd) {
      TrainState<float> s = load_checkpoint<float>(ex_ckpt);
      const EdgeParams edges = to_edge_params(s.edges);
      std::ostringstream os;
      write_dot(os, s.graph, &edges);
      emit(ex_out, os.str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
