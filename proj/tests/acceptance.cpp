// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --work-dir DIR --desk-config FILE [--reuse] [--only N,...]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/checkpoint.hpp"
#include "dagsparse/experiment.hpp"
#include "dagsparse/format.hpp"
#include "dagsparse/graph_stats.hpp"
#include "dagsparse/similarity.hpp"
#include "dagsparse/sweep.hpp"
#include "gradcheck.hpp"
#include "properties.hpp"

using namespace dagsparse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;
int expected_failures = 0;
std::set<int> expect_fail;

void report(int id, const std::string& title, const Outcome& o) {
  const bool expected = expect_fail.count(id) > 0;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail;
  if (expected) std::cout << (o.pass ? " (listed as expected failure)" : " (expected failure)");
  std::cout << std::endl;
  if (!o.pass) ++(expected ? expected_failures : failures);
}

// 1 -----------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_name;
  int checks = 0;
  auto take = [&](const std::vector<gradcheck::Result>& rs, const std::string& prefix) {
    for (const auto& r : rs) {
      ++checks;
      if (!(r.error <= worst)) {
        worst = r.error;
        worst_name = prefix + r.name;
      }
    }
  };
  take(gradcheck::check_primitives(1), "");
  for (std::uint64_t seed : {2u, 3u, 4u}) take(gradcheck::check_network(seed), "net" + std::to_string(seed) + ".");
  const double dt = seconds_since(t0);
  return {worst < 1e-4 && dt < 60.0, std::to_string(checks) + " tensors, max rel err " + num(worst, 3) + " (" +
                                          worst_name + "), " + num(dt, 3) + " s"};
}

// 2 -----------------------------------------------------------------------

Outcome graph_oracles() {
  Rng rng(2024);
  int path_graphs = 0, path_bad = 0;
  while (path_graphs < 600) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(6)), rng.uniform(0.2, 1.0));
    const auto ref = oracle::enumerate_paths(g);
    if (ref.count == 0) continue;
    ++path_graphs;
    const PathStats p = path_stats(g);
    const double mean = static_cast<double>(ref.total_length) / static_cast<double>(ref.count);
    if (p.count != ref.count || p.max_path != ref.max_length || std::abs(p.mean_path - mean) > 1e-12 ||
        std::abs(p.log_paths - std::log(static_cast<double>(ref.count))) > 1e-12)
      ++path_bad;
  }
  int cut_graphs = 0, cut_bad = 0;
  for (; cut_graphs < 600; ++cut_graphs) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(7)), rng.uniform(0.15, 1.0));
    if (edge_connectivity(g) != oracle::min_cut_exhaustive(g)) ++cut_bad;
  }
  int comm_graphs = 0;
  double comm_err = 0;
  while (comm_graphs < 300) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(19)), rng.uniform(0.1, 1.0));
    if (oracle::enumerate_paths(g).count == 0) continue;
    ++comm_graphs;
    comm_err = std::max(comm_err, std::abs(ln_communicability(g) - std::log(oracle::communicability_expm(g))));
  }
  return {path_bad == 0 && cut_bad == 0 && comm_err < 1e-8,
          "paths " + std::to_string(path_bad) + "/" + std::to_string(path_graphs) + " mismatches (<=7 nodes), cuts " +
              std::to_string(cut_bad) + "/" + std::to_string(cut_graphs) + " (<=8 nodes), ln communicability max err " +
              num(comm_err, 3) + " over " + std::to_string(comm_graphs) + " graphs (<=20 nodes)"};
}

// 3 -----------------------------------------------------------------------

Outcome pruning_invariants() {
  Rng rng(77);
  int bad = 0;
  double worst_logit = 0;
  std::string first_failure;
  const int cases = 1000;
  for (int i = 0; i < cases; ++i) {
    const auto c = props::random_prune_case(rng);
    const auto r = props::check_prune_case(c, rng);
    if (!r.ok()) {
      ++bad;
      if (first_failure.empty()) first_failure = " first: " + r.failure;
    }
    worst_logit = std::max(worst_logit, props::pruned_vs_clamped(c, rng));
  }
  return {bad == 0 && worst_logit < 1e-4, std::to_string(cases - bad) + "/" + std::to_string(cases) +
                                              " cases hold every invariant, max pruned-vs-clamped logit diff " +
                                              num(worst_logit, 3) + first_failure};
}

// 4 -----------------------------------------------------------------------

Outcome closed_forms() {
  const DagSpec g = build_full_dag(60, 3);
  const PathStats p = path_stats(g);
  const double lsp = sparsity_loss(init_edge_params(g));
  const double md = mean_degree(g);
  const int ec = edge_connectivity(g);
  const bool ok = g.edges.size() == 1770 && std::abs(lsp - 885.0) < 1e-9 && p.count == (BigInt(1) << 58) &&
                  std::abs(p.log_paths - 58 * std::numbers::ln2) < 1e-9 && std::abs(p.log_paths - 40.20) < 0.005 &&
                  std::abs(p.mean_path - 30.0) < 1e-9 && p.max_path == 59 && std::abs(md - 59.0) < 1e-9 && ec == 59;
  return {ok, "edges " + std::to_string(g.edges.size()) + ", L_sparsity " + num(lsp, 12) + ", paths " +
                  p.count.str() + " (ln " + num(p.log_paths, 6) + "), mean_path " + num(p.mean_path, 12) +
                  ", max_path " + std::to_string(p.max_path) + ", mean_degree " + num(md, 12) +
                  ", edge_connectivity " + std::to_string(ec)};
}

// 5 -----------------------------------------------------------------------

Outcome elongation() {
  const DagSpec full = build_full_dag(60, 3);
  DagSpec chain = full;
  chain.edges.clear();
  for (int v = 0; v + 1 < 60; ++v) chain.edges.push_back({v, v + 1});
  const double e_full = pca_elongation(kamada_kawai_embed(full, 1).coords).value;
  const double e_chain = pca_elongation(kamada_kawai_embed(chain, 1).coords).value;
  return {std::abs(e_full) <= 0.15 && e_chain >= 0.9,
          "full DAG " + num(e_full, 3) + " (|.| <= 0.15), chain " + num(e_chain, 4) + " (>= 0.9)"};
}

// 6, 7, 8 -------------------------------------------------------------------

struct RunRow {
  bool connected = false;
  double full_accuracy = 0;
  std::map<std::string, double> f;
  int edges = 0, nodes = 0;
};

std::map<std::string, double> feature_row(const std::string& path, bool& connected) {
  const auto rows = read_csv(path);
  if (rows.size() < 2) throw std::runtime_error(path + ": no data row");
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const std::string& v = rows[1][i];
    if (rows[0][i] == "status") connected = v == "ok";
    try {
      out[rows[0][i]] = v == "nan" ? std::nan("") : std::stod(v);
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::string fraction(int k, int n) { return std::to_string(k) + "/" + std::to_string(n); }

struct Desk {
  Campaign campaign;
  std::map<std::string, std::vector<RunRow>> runs;  // per dataset, indexed by seed
  double campaign_seconds = 0;
  int reused_cells = 0;
  int failed_cells = 0;
};

Desk run_desk(const std::string& config, const std::string& out_dir) {
  Desk d;
  ConfigMap m = read_config_file(config);
  m["out_dir"] = out_dir;
  d.campaign = campaign_from_config(m);
  const auto t0 = Clock::now();
  fs::create_directories(out_dir);
  std::ofstream log((fs::path(out_dir) / "acceptance_campaign.log").string(), std::ios::app);
  const CampaignReport r = run_campaign(d.campaign, &log);
  d.campaign_seconds = seconds_since(t0);
  d.reused_cells = r.skipped();
  d.failed_cells = r.failed() + static_cast<int>(r.config_errors.size());
  for (const auto& spec : d.campaign.datasets) {
    const std::string name = dataset_name(spec);
    for (int s = 0; s < d.campaign.seeds; ++s) {
      const fs::path dir = run_dir(d.campaign, name, s);
      RunRow row;
      if (cell_complete(dir.string())) {
        row.f = feature_row((dir / "features.csv").string(), row.connected);
        row.full_accuracy = row.f.at("full_accuracy");
        std::ifstream dot(dir / "pruned.dot");
        const LoadedPruned l = read_pruned_dot(dot);
        row.edges = static_cast<int>(l.pruned.retained_edges.size());
        row.nodes = l.pruned.graph.node_count;
      }
      d.runs[name].push_back(row);
    }
  }
  return d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) s += x, ++n;
  return n ? s / n : std::nan("");
}

Outcome desk_trends(const Desk& d) {
  const auto& names = d.campaign.datasets;
  if (names.size() != 3) return {false, "the desk config must list exactly three difficulty levels"};
  std::vector<std::string> ds;
  for (const auto& spec : names) ds.push_back(dataset_name(spec));
  const int seeds = d.campaign.seeds;

  int edges_mono = 0, nodes_mono = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto& a = d.runs.at(ds[0])[s];
    const auto& b = d.runs.at(ds[1])[s];
    const auto& c = d.runs.at(ds[2])[s];
    edges_mono += a.edges <= b.edges && b.edges <= c.edges;
    nodes_mono += a.nodes <= b.nodes && b.nodes <= c.nodes;
  }
  const int need = (8 * seeds + 9) / 10;
  const bool pass_a = edges_mono >= need && nodes_mono >= need;

  std::vector<double> st[3];
  for (const auto& name : ds)
    for (const auto& r : d.runs.at(name))
      if (r.connected)
        for (int k = 0; k < 3; ++k) st[k].push_back(r.f.at("sparsity_stage" + std::to_string(k)));
  const double s0 = mean_of(st[0]), s1 = mean_of(st[1]), s2 = mean_of(st[2]);
  const bool pass_b = s2 <= s0 && s2 <= s1;

  double pca[3];
  for (int l = 0; l < 3; ++l) {
    std::vector<double> v;
    for (const auto& r : d.runs.at(ds[l]))
      if (r.connected) v.push_back(r.f.at("pca_elongation"));
    pca[l] = mean_of(v);
  }
  const bool pass_c = pca[2] < pca[0];

  FeatureTable t = make_feature_table();
  for (const auto& name : ds)
    for (int s = 0; s < seeds; ++s) {
      const auto& r = d.runs.at(name)[s];
      if (!r.connected) continue;
      FeatureRow fr{name + "/seed" + std::to_string(s), name, static_cast<std::uint64_t>(s), {}};
      for (const auto& fname : t.names) fr.values.push_back(r.f.at(fname));
      t.rows.push_back(std::move(fr));
    }
  BlockMeans bm{std::nan(""), std::nan("")};
  bool pass_d = false;
  try {
    bm = block_means(t, similarity_matrix(t));
    pass_d = bm.within > bm.across;
  } catch (const SimilarityError& e) {
    std::cerr << "similarity: " << e.what() << "\n";
  }
  const bool pass_time = d.campaign_seconds < 7200.0;

  std::ostringstream os;
  os << "(a) monotone edges " << fraction(edges_mono, seeds) << ", nodes " << fraction(nodes_mono, seeds)
     << (pass_a ? " ok" : " FAIL") << "; (b) stage sparsity " << num(s0, 3) << "/" << num(s1, 3) << "/" << num(s2, 3)
     << (pass_b ? " ok" : " FAIL") << "; (c) pca L1..L3 " << num(pca[0], 3) << "/" << num(pca[1], 3) << "/"
     << num(pca[2], 3) << (pass_c ? " ok" : " FAIL") << "; (d) similarity within " << num(bm.within, 3)
     << " across " << num(bm.across, 3) << (pass_d ? " ok" : " FAIL") << "; campaign " << num(d.campaign_seconds, 4)
     << " s" << (pass_time ? "" : " (over 2 h)");
  if (d.reused_cells) os << " (" << d.reused_cells << " cells reused, runtime not representative)";
  if (d.failed_cells) os << "; " << d.failed_cells << " failed cells";
  return {pass_a && pass_b && pass_c && pass_d && pass_time && d.failed_cells == 0, os.str()};
}

NetConfig net_for(const Campaign& c, const Dataset& data) {
  NetConfig net = c.net;
  net.input_resolution = data.resolution;
  net.input_channels = data.channels;
  net.num_classes = data.num_classes;
  return net;
}

Outcome retrain_pruned(const Desk& d, const std::string& out_dir) {
  const std::string name = dataset_name(d.campaign.datasets.at(0));
  const Dataset data = make_dataset(d.campaign, d.campaign.datasets.at(0));
  const NetConfig net = net_for(d.campaign, data);
  const fs::path csv = fs::path(out_dir) / "criterion7.csv";
  std::map<int, std::pair<double, double>> done;
  if (fs::exists(csv)) {
    const auto rows = read_csv(csv.string());
    for (std::size_t i = 1; i < rows.size(); ++i)
      done[std::stoi(rows[i][0])] = {std::stod(rows[i][1]), std::stod(rows[i][2])};
  }
  int close = 0;
  std::ostringstream list;
  for (int s = 0; s < d.campaign.seeds; ++s) {
    if (!done.count(s)) {
      const fs::path dir = run_dir(d.campaign, name, s);
      std::ifstream dot(dir / "pruned.dot");
      const LoadedPruned l = read_pruned_dot(dot);
      double acc = std::nan("");
      if (!l.pruned.disconnected) {
        const auto r = retrain<float>(l.pruned.graph, net, d.campaign.train, data,
                                      derive_seed(cell_seed(d.campaign, name, s), "acceptance-retrain"));
        acc = r.log.epochs.empty() ? 0.0 : r.log.epochs.back().test_accuracy;
      }
      done[s] = {d.runs.at(name)[s].full_accuracy, acc};
      std::string text = "seed,full_accuracy,retrained_accuracy\n";
      for (const auto& [k, v] : done) text += std::to_string(k) + "," + fmt6(v.first) + "," + fmt6(v.second) + "\n";
      write_file_atomic(csv.string(), text);
    }
    const auto [full, re] = done[s];
    const bool ok = std::isfinite(re) && re >= full - 0.02;
    close += ok;
    list << (s ? " " : "") << num(100 * full, 3) << "->" << num(100 * re, 3);
  }
  const int need = (8 * d.campaign.seeds + 9) / 10;
  return {close >= need, fraction(close, d.campaign.seeds) + " seeds within 2 points (full->retrained %: " +
                             list.str() + ")"};
}

Outcome disconnection(const Desk& d) {
  const std::string spec = d.campaign.datasets.at(0);
  const Dataset data = make_dataset(d.campaign, spec);
  const NetConfig net = net_for(d.campaign, data);
  const double chance = 1.0 / data.num_classes;
  double worst = 0;
  int checked = 0;
  for (int s = 0; s < d.campaign.seeds; ++s) {
    const fs::path ckpt = fs::path(run_dir(d.campaign, dataset_name(spec), s)) / "checkpoint.dgsp";
    if (!fs::exists(ckpt)) continue;
    TrainState<float> st = load_checkpoint<float>(ckpt.string());
    const auto pts = sweep(st.graph, to_edge_params(st.edges), st.params, net, data, {1.0});
    if (!pts[0].pruned.disconnected) return {false, "tau = 1 left a connected graph"};
    worst = std::max(worst, std::abs(pts[0].accuracy - chance));
    ++checked;
  }
  return {checked > 0 && worst <= 0.05, "tau = 1 disconnects every run; max |accuracy - 1/" +
                                            std::to_string(data.num_classes) + "| = " + num(100 * worst, 3) +
                                            " points over " + std::to_string(checked) + " runs"};
}

// 9 -----------------------------------------------------------------------

Outcome parameter_count() {
  NetConfig cfg;
  cfg.base_channels = 11;
  cfg.input_resolution = 32;
  cfg.input_channels = 3;
  cfg.num_classes = 10;
  const auto n = param_count(build_full_dag(60, 3), cfg);
  const double rel = (static_cast<double>(n) - 863300.0) / 863300.0;
  return {std::abs(rel) <= 0.10, std::to_string(n) + " parameters, " + num(100 * rel, 3) + "% from 863.3k"};
}

// 10 ----------------------------------------------------------------------

Outcome reproducible(const std::string& work) {
  const char* cfg = R"(
datasets = shapes2
seeds = 1
campaign_seed = 99
nodes = 9
stages = 3
channels = 3
data_train_size = 64
data_test_size = 32
data_resolution = 16
data_classes = 4
epochs = 4
batch_size = 16
lr = 0.05
lr_drops = 3
grad_clip = 2
retrain = both
workers = 1
checkpoint_every = 2
)";
  std::vector<std::string> dirs;
  for (const char* tag : {"a", "b"}) {
    ConfigMap m = parse_config(cfg);
    m["out_dir"] = (fs::path(work) / (std::string("repro_") + tag)).string();
    fs::remove_all(m["out_dir"]);
    const Campaign c = campaign_from_config(m);
    if (run_campaign(c).exit_code() != 0) return {false, "campaign " + std::string(tag) + " failed"};
    dirs.push_back(c.out_dir);
  }
  int files = 0;
  std::vector<std::string> differ;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(entry.path(), dirs[0]);
    ++files;
    const fs::path other = fs::path(dirs[1]) / rel;
    if (!fs::exists(other) || read_file(entry.path().string()) != read_file(other.string()))
      differ.push_back(rel.string());
  }
  std::string detail = std::to_string(files) + " CSV files compared, " + std::to_string(differ.size()) + " differ";
  for (const auto& f : differ) detail += " " + f;
  return {files >= 7 && differ.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work = "acceptance_work", desk_config;
  bool reuse = false;
  std::vector<int> only;
  app.add_option("--work-dir", work, "scratch directory");
  app.add_option("--desk-config", desk_config, "desk-scale campaign config")->required();
  app.add_flag("--reuse", reuse, "keep finished campaign cells from an earlier run");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  std::vector<int> xfail;
  app.add_option("--expect-fail", xfail, "criteria known to fail; reported but not counted")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  expect_fail.insert(xfail.begin(), xfail.end());

  const std::set<int> want(only.begin(), only.end());
  auto on = [&](int id) { return want.empty() || want.count(id) > 0; };
  if (!reuse) fs::remove_all(work);
  fs::create_directories(work);
  const auto t0 = Clock::now();

  auto guarded = [&](int id, const std::string& title, auto&& fn) {
    if (!on(id)) return;
    try {
      report(id, title, fn());
    } catch (const std::exception& e) {
      report(id, title, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "gradient correctness", gradients);
  guarded(2, "graph statistic oracles", graph_oracles);
  guarded(3, "pruning invariants", pruning_invariants);
  guarded(4, "full DAG closed forms", closed_forms);
  guarded(5, "embedding elongation", elongation);
  guarded(9, "parameter count", parameter_count);
  guarded(10, "byte-identical reruns", [&] { return reproducible(work); });

  if (on(6) || on(7) || on(8)) {
    const std::string desk_dir = (fs::path(work) / "desk").string();
    std::optional<Desk> desk;
    try {
      desk = run_desk(desk_config, desk_dir);
    } catch (const std::exception& e) {
      for (int id : {6, 7, 8})
        if (on(id)) report(id, "desk campaign", {false, std::string("exception: ") + e.what()});
    }
    if (desk) {
      guarded(6, "desk-scale trends", [&] { return desk_trends(*desk); });
      guarded(7, "retrained pruned architecture", [&] { return retrain_pruned(*desk, desk_dir); });
      guarded(8, "disconnected graph is at chance", [&] { return disconnection(*desk); });
    }
  }

  if (failures)
    std::cout << "FAILED " << failures << " failing criteria";
  else if (expected_failures)
    std::cout << "PASSED except " << expected_failures << " expected failure(s)";
  else
    std::cout << "ALL PASSED";
  std::cout << ", " << num(seconds_since(t0), 4) << " s total" << std::endl;
  return failures ? 1 : 0;
}
