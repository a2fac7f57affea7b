#include "dagsparse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dagsparse/checkpoint.hpp"
#include "dagsparse/format.hpp"
#include "dagsparse/graph_stats.hpp"
#include "dagsparse/similarity.hpp"
#include "dagsparse/sweep.hpp"

namespace fs = std::filesystem;

namespace dagsparse {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

const char* retrain_name(RetrainMode m) {
  switch (m) {
    case RetrainMode::None: return "none";
    case RetrainMode::Plain: return "plain";
    case RetrainMode::FitC: return "fitc";
    case RetrainMode::Both: return "both";
  }
  return "both";
}

struct KeyDoc {
  const char* key;
  const char* doc;
};

constexpr KeyDoc kKeys[] = {
    {"out_dir", "campaign output directory"},
    {"datasets", "comma list: shapes<1|2|3>[+embed<res>][+tear<patch>] or file:<path>"},
    {"seeds", "random initialisations per dataset"},
    {"campaign_seed", "root seed; every cell seed is derived from it"},
    {"nodes", "nodes of the fully connected DAG"},
    {"stages", "number of resolution stages"},
    {"channels", "base channel count C"},
    {"kernel_size", "node convolution kernel size"},
    {"data_train_size", "generated training images"},
    {"data_test_size", "generated test images"},
    {"data_resolution", "generated image side length"},
    {"data_classes", "generated class count"},
    {"data_seed", "seed of the generated datasets"},
    {"embed_noise", "noise amplitude of the embed transform"},
    {"epochs", "training epochs"},
    {"lr", "initial learning rate"},
    {"momentum", "SGD momentum"},
    {"batch_size", "minibatch size"},
    {"weight_decay", "weight decay on network parameters"},
    {"lr_drops", "comma list of epochs where the learning rate drops"},
    {"lr_drop_factor", "learning rate divisor at each drop"},
    {"lambda", "sparsity loss coefficient"},
    {"decay_edges", "also apply weight decay to edge weights"},
    {"snapshot_interval", "steps between edge magnitude snapshots"},
    {"grad_clip", "max global gradient norm, 0 disables"},
    {"eval_batch", "evaluation chunk size"},
    {"tau", "pruning threshold for the analysed architecture"},
    {"tau_grid", "comma list of thresholds for the sweep"},
    {"retrain", "none, plain, fitc or both"},
    {"workers", "parallel cells, 0 = hardware threads"},
    {"checkpoint_every", "epochs between checkpoints"},
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) { write_file_atomic(path, text); }

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap m;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    m[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return m;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ConfigMap& m, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  m[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

Campaign campaign_from_config(const ConfigMap& m) {
  Campaign c;
  for (const auto& [key, value] : m) {
    const bool known = std::any_of(std::begin(kKeys), std::end(kKeys), [&](const KeyDoc& k) { return key == k.key; });
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
  auto get = [&](const char* key) -> const std::string* {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  };
  auto num_list = [&](const char* key, auto& out, auto parse) {
    if (const auto* v = get(key)) {
      out.clear();
      if (v->empty()) return;
      for (const auto& item : split(*v, ',')) out.push_back(parse(key, item));
    }
  };
  if (const auto* v = get("out_dir")) c.out_dir = *v;
  if (const auto* v = get("datasets")) c.datasets = split(*v, ',');
  if (const auto* v = get("seeds")) c.seeds = parse_number<int>("seeds", *v);
  if (const auto* v = get("campaign_seed")) c.campaign_seed = parse_number<std::uint64_t>("campaign_seed", *v);
  if (const auto* v = get("nodes")) c.nodes = parse_number<int>("nodes", *v);
  if (const auto* v = get("stages")) c.stages = parse_number<int>("stages", *v);
  if (const auto* v = get("channels")) c.net.base_channels = parse_number<int>("channels", *v);
  if (const auto* v = get("kernel_size")) c.net.kernel_size = parse_number<int>("kernel_size", *v);
  if (const auto* v = get("data_train_size")) c.data_train_size = parse_number<int>("data_train_size", *v);
  if (const auto* v = get("data_test_size")) c.data_test_size = parse_number<int>("data_test_size", *v);
  if (const auto* v = get("data_resolution")) c.data_resolution = parse_number<int>("data_resolution", *v);
  if (const auto* v = get("data_classes")) c.data_classes = parse_number<int>("data_classes", *v);
  if (const auto* v = get("data_seed")) c.data_seed = parse_number<std::uint64_t>("data_seed", *v);
  if (const auto* v = get("embed_noise")) c.embed_noise = parse_number<double>("embed_noise", *v);
  TrainConfig& t = c.train;
  if (const auto* v = get("epochs")) t.epochs = parse_number<int>("epochs", *v);
  if (const auto* v = get("lr")) t.lr = parse_number<double>("lr", *v);
  if (const auto* v = get("momentum")) t.momentum = parse_number<double>("momentum", *v);
  if (const auto* v = get("batch_size")) t.batch_size = parse_number<int>("batch_size", *v);
  if (const auto* v = get("weight_decay")) t.weight_decay = parse_number<double>("weight_decay", *v);
  num_list("lr_drops", t.lr_drop_epochs, [](const std::string& k, const std::string& s) { return parse_number<int>(k, s); });
  if (const auto* v = get("lr_drop_factor")) t.lr_drop_factor = parse_number<double>("lr_drop_factor", *v);
  if (const auto* v = get("lambda")) t.lambda_sparsity = parse_number<double>("lambda", *v);
  if (const auto* v = get("decay_edges")) t.decay_edges = parse_bool("decay_edges", *v);
  if (const auto* v = get("snapshot_interval")) t.snapshot_interval = parse_number<int>("snapshot_interval", *v);
  if (const auto* v = get("grad_clip")) t.grad_clip = parse_number<double>("grad_clip", *v);
  if (const auto* v = get("eval_batch")) t.eval_batch = parse_number<int>("eval_batch", *v);
  if (const auto* v = get("tau")) c.tau = parse_number<double>("tau", *v);
  num_list("tau_grid", c.tau_grid, [](const std::string& k, const std::string& s) { return parse_number<double>(k, s); });
  if (const auto* v = get("retrain")) {
    if (*v == "none") c.retrain = RetrainMode::None;
    else if (*v == "plain") c.retrain = RetrainMode::Plain;
    else if (*v == "fitc") c.retrain = RetrainMode::FitC;
    else if (*v == "both") c.retrain = RetrainMode::Both;
    else throw ConfigError("config key 'retrain': expected none, plain, fitc or both");
  }
  if (const auto* v = get("workers")) c.workers = parse_number<int>("workers", *v);
  if (const auto* v = get("checkpoint_every")) c.checkpoint_every = parse_number<int>("checkpoint_every", *v);

  if (c.datasets.empty() || std::any_of(c.datasets.begin(), c.datasets.end(), [](auto& d) { return d.empty(); }))
    throw ConfigError("datasets must list at least one non-empty spec");
  if (c.seeds < 1) throw ConfigError("seeds must be positive");
  if (c.nodes < 2 || c.stages < 1 || c.nodes % c.stages != 0)
    throw ConfigError("nodes must be at least 2 and divisible by stages");
  if (c.workers < 0) throw ConfigError("workers must be non-negative");
  if (c.checkpoint_every < 1) throw ConfigError("checkpoint_every must be positive");
  if (!(c.tau >= 0)) throw ConfigError("tau must be non-negative");
  if (!std::is_sorted(c.tau_grid.begin(), c.tau_grid.end())) throw ConfigError("tau_grid must be ascending");
  if (c.data_train_size < 1 || c.data_test_size < 1) throw ConfigError("dataset sizes must be positive");
  try {
    validate(c.train);
    NetConfig probe = c.net;
    validate(probe);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string config_help() {
  std::string out;
  for (const auto& k : kKeys) {
    std::string key = k.key;
    key.resize(std::max<std::size_t>(key.size(), 18), ' ');
    out += "  " + key + " " + k.doc + "\n";
  }
  return out;
}

std::string to_config_text(const Campaign& c) {
  std::ostringstream os;
  auto list = [](const auto& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, double>)
        out += fmt6(v[i]);
      else if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, std::string>)
        out += v[i];
      else
        out += std::to_string(v[i]);
    }
    return out;
  };
  const TrainConfig& t = c.train;
  os << "out_dir = " << c.out_dir << "\n"
     << "datasets = " << list(c.datasets) << "\n"
     << "seeds = " << c.seeds << "\n"
     << "campaign_seed = " << c.campaign_seed << "\n"
     << "nodes = " << c.nodes << "\n"
     << "stages = " << c.stages << "\n"
     << "channels = " << c.net.base_channels << "\n"
     << "kernel_size = " << c.net.kernel_size << "\n"
     << "data_train_size = " << c.data_train_size << "\n"
     << "data_test_size = " << c.data_test_size << "\n"
     << "data_resolution = " << c.data_resolution << "\n"
     << "data_classes = " << c.data_classes << "\n"
     << "data_seed = " << c.data_seed << "\n"
     << "embed_noise = " << fmt6(c.embed_noise) << "\n"
     << "epochs = " << t.epochs << "\n"
     << "lr = " << fmt6(t.lr) << "\n"
     << "momentum = " << fmt6(t.momentum) << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "weight_decay = " << fmt6(t.weight_decay) << "\n"
     << "lr_drops = " << list(t.lr_drop_epochs) << "\n"
     << "lr_drop_factor = " << fmt6(t.lr_drop_factor) << "\n"
     << "lambda = " << fmt6(t.lambda_sparsity) << "\n"
     << "decay_edges = " << (t.decay_edges ? "true" : "false") << "\n"
     << "snapshot_interval = " << t.snapshot_interval << "\n"
     << "grad_clip = " << fmt6(t.grad_clip) << "\n"
     << "eval_batch = " << t.eval_batch << "\n"
     << "tau = " << fmt6(c.tau) << "\n"
     << "tau_grid = " << list(c.tau_grid) << "\n"
     << "retrain = " << retrain_name(c.retrain) << "\n"
     << "workers = " << c.workers << "\n"
     << "checkpoint_every = " << c.checkpoint_every << "\n";
  return os.str();
}

Dataset make_dataset(const Campaign& c, const std::string& spec) {
  if (spec.rfind("file:", 0) == 0) return load_dataset(spec.substr(5));
  static const std::regex re(R"(shapes([123])((\+(embed\d+|tear\d+))*))");
  std::smatch m;
  if (!std::regex_match(spec, m, re)) throw ConfigError("unrecognised dataset spec '" + spec + "'");
  ShapesOptions opt;
  opt.level = m[1].str()[0] - '0';
  opt.train_size = c.data_train_size;
  opt.test_size = c.data_test_size;
  opt.resolution = c.data_resolution;
  opt.num_classes = c.data_classes;
  opt.seed = derive_seed(c.data_seed, "shapes", static_cast<std::uint64_t>(opt.level));
  Dataset d = gen_shapes(opt);
  const std::string rest = m[2].str();
  for (const std::string& step : split(rest, '+')) {
    if (step.empty()) continue;
    if (step.rfind("embed", 0) == 0) {
      EmbedOptions e;
      e.target_resolution = std::stoi(step.substr(5));
      e.noise_amplitude = c.embed_noise;
      e.seed = derive_seed(c.data_seed, "embed");
      d = embed_colorize(d, e);
    } else {
      d = tear_up(d, std::stoi(step.substr(4)), derive_seed(c.data_seed, "tear"));
    }
  }
  return d;
}

std::string dataset_name(const std::string& spec) {
  if (spec.rfind("file:", 0) == 0) return load_dataset(spec.substr(5)).name;
  static const std::regex re(R"(shapes([123])((\+(embed\d+|tear\d+))*))");
  if (!std::regex_match(spec, re)) throw ConfigError("unrecognised dataset spec '" + spec + "'");
  const auto parts = split(spec, '+');
  std::string name = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i)
    name += parts[i].rfind("embed", 0) == 0 ? "_c" : "_t" + parts[i].substr(4);
  return name;
}

std::uint64_t cell_seed(const Campaign& c, const std::string& dataset, int seed_index) {
  return derive_seed(derive_seed(c.campaign_seed, dataset), "cell", static_cast<std::uint64_t>(seed_index));
}

std::string run_dir(const Campaign& c, const std::string& dataset, int seed_index) {
  return (fs::path(c.out_dir) / "runs" / dataset / ("seed" + std::to_string(seed_index))).string();
}

const std::vector<std::string>& cell_artifacts() {
  static const std::vector<std::string> names{"checkpoint.dgsp", "train_log.csv", "edge_trajectory.json", "sweep.csv",
                                              "pruned.dot",      "features.csv",  "retrain.csv"};
  return names;
}

bool cell_complete(const std::string& dir) {
  return std::all_of(cell_artifacts().begin(), cell_artifacts().end(),
                     [&](const std::string& f) { return fs::exists(fs::path(dir) / f); });
}

namespace {

std::string train_log_csv(const TrainLog& log) {
  std::string out = "epoch,lr,train_loss,sparsity_loss,test_accuracy\n";
  for (const auto& e : log.epochs)
    out += std::to_string(e.epoch) + "," + fmt6(e.lr) + "," + fmt6(e.train_loss) + "," + fmt6(e.sparsity_loss) + "," +
           fmt6(e.test_accuracy) + "\n";
  return out;
}

std::string trajectory_json(const DagSpec& g, const TrainLog& log) {
  nlohmann::ordered_json j;
  j["snapshot_interval"] = log.snapshot_interval;
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges) edges.push_back({e.src, e.dst});
  auto& snaps = j["snapshots"] = nlohmann::json::array();
  for (const auto& s : log.snapshots) {
    nlohmann::ordered_json row;
    row["step"] = s.step;
    row["magnitudes"] = s.magnitudes;
    snaps.push_back(std::move(row));
  }
  return j.dump() + "\n";
}

std::string sweep_csv(const std::vector<SweepPoint>& pts) {
  std::string out = "tau,sparsity,accuracy,retained_edges,retained_nodes,disconnected\n";
  for (const auto& p : pts)
    out += fmt6(p.tau) + "," + fmt6(p.sparsity) + "," + fmt6(p.accuracy) + "," +
           std::to_string(p.pruned.retained_edges.size()) + "," + std::to_string(p.pruned.graph.node_count) + "," +
           (p.pruned.disconnected ? "1" : "0") + "\n";
  return out;
}

std::string features_header() { return "run,dataset,seed_index,seed,status,tau,full_accuracy,pruned_accuracy," + features_csv_header(); }

std::string nan_features_row() {
  const auto n = split(features_csv_header(), ',').size();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? ",nan" : "nan");
  return out;
}

}  // namespace

void run_cell(const Campaign& c, const Dataset& data, int seed_index, std::ostream* log) {
  const std::string dir = run_dir(c, data.name, seed_index);
  fs::create_directories(dir);
  const fs::path p(dir);
  const std::uint64_t seed = cell_seed(c, data.name, seed_index);

  const DagSpec g = build_full_dag(c.nodes, c.stages);
  NetConfig net = c.net;
  net.input_resolution = data.resolution;
  net.input_channels = data.channels;
  net.num_classes = data.num_classes;
  TrainConfig tcfg = c.train;
  tcfg.seed = seed;

  const std::string ckpt = (p / "checkpoint.dgsp").string();
  TrainState<float> s;
  if (fs::exists(ckpt)) {
    s = load_checkpoint<float>(ckpt);
    if (!(s.graph == g) || !(s.net == net) || !(s.config == tcfg))
      throw ConfigError(ckpt + " was written by a different configuration");
  } else {
    s = make_train_state<float>(g, net, tcfg);
  }
  while (s.epochs_done < tcfg.epochs) {
    train_epochs(s, data, std::min(tcfg.epochs, s.epochs_done + c.checkpoint_every));
    save_checkpoint(ckpt, s);
    if (log) *log << "  " << data.name << "/seed" << seed_index << ": epoch " << s.epochs_done << "/" << tcfg.epochs
                  << " acc " << fmt6(s.log.epochs.empty() ? 0.0 : s.log.epochs.back().test_accuracy) << "\n";
  }
  if (tcfg.epochs == 0) save_checkpoint(ckpt, s);

  write_text((p / "train_log.csv").string(), train_log_csv(s.log));
  write_text((p / "edge_trajectory.json").string(), trajectory_json(g, s.log));

  const EdgeParams edges = to_edge_params(s.edges);
  const double full_acc = evaluate_accuracy(g, net, s.params, s.edges, data, data.test, tcfg.eval_batch);
  write_text((p / "sweep.csv").string(), sweep_csv(sweep(g, edges, s.params, net, data, c.tau_grid)));

  const PrunedGraph pg = prune(g, edges, c.tau);
  double pruned_acc = 0;
  {
    auto [sub_params, sub_edges] = restrict_to(pg, g, s.params, edges, net);
    pruned_acc = evaluate_accuracy(pg.graph, net, sub_params, sub_edges, data, data.test, tcfg.eval_batch);
  }
  const std::int64_t pruned_params = param_count(pg.graph, net);
  write_text((p / "pruned.dot").string(),
             pruned_dot_text(pg, edges, c.nodes, c.stages, pruned_params,
                             {{"dataset", data.name}, {"seed_index", std::to_string(seed_index)}}));

  const std::string run_id = data.name + "_s" + std::to_string(seed_index);
  std::string row = run_id + "," + data.name + "," + std::to_string(seed_index) + "," + std::to_string(seed) + ",";
  if (pg.disconnected) {
    row += "disconnected," + fmt6(c.tau) + "," + fmt6(full_acc) + "," + fmt6(pruned_acc) + "," + nan_features_row();
  } else {
    const GraphFeatures f = compute_features(pg, g, pruned_params, derive_seed(seed, "layout"));
    row += "ok," + fmt6(c.tau) + "," + fmt6(full_acc) + "," + fmt6(pruned_acc) + "," + features_csv_row(f);
  }
  write_text((p / "features.csv").string(), features_header() + "\n" + row + "\n");

  std::string retrain_csv = "variant,status,channels,parameters,test_accuracy\n";
  const std::int64_t full_params = param_count(g, net);
  auto do_retrain = [&](const char* variant, bool fit) {
    if (pg.disconnected) {
      retrain_csv += std::string(variant) + ",disconnected,0,0,nan\n";
      return;
    }
    RetrainOptions opt;
    opt.fit_channels = fit;
    opt.target_params = full_params;
    TrainConfig rcfg = c.train;
    const auto r = retrain<float>(pg.graph, net, rcfg, data, derive_seed(seed, "retrain"), opt);
    NetConfig rnet = net;
    rnet.base_channels = r.channels;
    auto params = r.params;
    const double acc =
        evaluate_accuracy(pg.graph, rnet, params, edge_matrix<float>(r.edges), data, data.test, tcfg.eval_batch);
    retrain_csv += std::string(variant) + ",ok," + std::to_string(r.channels) + "," +
                   std::to_string(param_count(pg.graph, rnet)) + "," + fmt6(acc) + "\n";
  };
  if (c.retrain == RetrainMode::Plain || c.retrain == RetrainMode::Both) do_retrain("plain", false);
  if (c.retrain == RetrainMode::FitC || c.retrain == RetrainMode::Both) do_retrain("fitc", true);
  if (c.retrain == RetrainMode::None) retrain_csv += "none,skipped,0,0,nan\n";
  write_text((p / "retrain.csv").string(), retrain_csv);
}

std::string pruned_dot_text(const PrunedGraph& pg, const EdgeParams& full_edges, int nodes, int stages,
                            std::int64_t parameters, std::map<std::string, std::string> attrs) {
  std::string node_map;
  for (std::size_t i = 0; i < pg.node_map.size(); ++i) node_map += (i ? " " : "") + std::to_string(pg.node_map[i]);
  attrs["tau"] = fmt6(pg.tau);
  attrs["original_nodes"] = std::to_string(nodes);
  attrs["original_stages"] = std::to_string(stages);
  attrs["node_map"] = node_map;
  attrs["parameters"] = std::to_string(parameters);
  attrs["disconnected"] = pg.disconnected ? "1" : "0";
  std::ostringstream dot;
  const EdgeParams kept = retained_weights(pg, full_edges);
  write_dot(dot, pg.graph, &kept, attrs);
  return dot.str();
}

LoadedPruned read_pruned_dot(std::istream& is) {
  const DotGraph dot = read_dot(is);
  auto attr = [&](const std::string& key) -> const std::string& {
    auto it = dot.graph_attrs.find(key);
    if (it == dot.graph_attrs.end()) throw FormatError("pruned DOT lacks the '" + key + "' attribute");
    return it->second;
  };
  LoadedPruned out;
  out.original = build_full_dag(std::stoi(attr("original_nodes")), std::stoi(attr("original_stages")));
  out.parameters = std::stoll(attr("parameters"));
  PrunedGraph& pg = out.pruned;
  pg.graph = dot.graph;
  pg.tau = std::stod(attr("tau"));
  pg.disconnected = attr("disconnected") == "1";
  std::istringstream nm(attr("node_map"));
  for (int v; nm >> v;) pg.node_map.push_back(v);
  if (static_cast<int>(pg.node_map.size()) != pg.graph.node_count) throw FormatError("node_map does not match the graph");
  for (const Edge& e : pg.graph.edges) {
    const auto id = out.original.find_edge(pg.node_map.at(e.src), pg.node_map.at(e.dst));
    if (!id) throw FormatError("pruned edge is not an edge of the original DAG");
    pg.retained_edges.push_back(*id);
  }
  return out;
}

int CampaignReport::failed() const {
  return static_cast<int>(
      std::count_if(cells.begin(), cells.end(), [](auto& c) { return c.status == CellOutcome::Status::Failed; }));
}

int CampaignReport::skipped() const {
  return static_cast<int>(
      std::count_if(cells.begin(), cells.end(), [](auto& c) { return c.status == CellOutcome::Status::Skipped; }));
}

int CampaignReport::exit_code() const {
  if (!config_errors.empty()) return 2;
  return failed() > 0 ? 1 : 0;
}

CampaignReport run_campaign(const Campaign& c, std::ostream* log) {
  CampaignReport report;
  std::vector<Dataset> data;
  try {
    for (const auto& spec : c.datasets) data.push_back(make_dataset(c, spec));
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (data[i].name == data[j].name) throw ConfigError("dataset '" + data[i].name + "' is listed twice");
    for (const auto& d : data) check_resolution(build_full_dag(c.nodes, c.stages), [&] {
        NetConfig n = c.net;
        n.input_resolution = d.resolution;
        return n;
      }());
  } catch (const std::exception& e) {
    report.config_errors.push_back(e.what());
    if (log) *log << "config error: " << e.what() << "\n";
    return report;
  }
  fs::create_directories(c.out_dir);
  write_text((fs::path(c.out_dir) / "campaign.cfg").string(), to_config_text(c));

  struct Job {
    std::size_t dataset;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (int s = 0; s < c.seeds; ++s) jobs.push_back({d, s});
  report.cells.resize(jobs.size());

  std::mutex log_mutex;
  std::ostringstream null_sink;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      CellOutcome& out = report.cells[i];
      out.dataset = data[job.dataset].name;
      out.seed_index = job.seed_index;
      const std::string dir = run_dir(c, out.dataset, job.seed_index);
      if (cell_complete(dir)) {
        out.status = CellOutcome::Status::Skipped;
        continue;
      }
      std::ostringstream cell_log;
      try {
        run_cell(c, data[job.dataset], job.seed_index, log ? &cell_log : nullptr);
        out.status = CellOutcome::Status::Done;
      } catch (const std::exception& e) {
        out.status = CellOutcome::Status::Failed;
        out.error = e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << cell_log.str() << out.dataset << "/seed" << job.seed_index << ": "
             << (out.status == CellOutcome::Status::Done ? "done" : "FAILED: " + out.error) << "\n";
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(jobs.size(), c.workers > 0 ? c.workers : hw);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  for (const auto& cell : report.cells)
    if (cell.status == CellOutcome::Status::Failed)
      write_text((fs::path(run_dir(c, cell.dataset, cell.seed_index)) / "error.txt").string(), cell.error + "\n");
  write_report(c, log);
  return report;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : split(read_text(path), '\n'))
    if (!line.empty()) rows.push_back(split(line, ','));
  return rows;
}

std::string mean_pm_std(const std::vector<double>& values) {
  if (values.empty()) return "nan";
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  return fmt6(mean) + " ± " + fmt6(sample_std(values));
}

namespace {

double to_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  return std::stod(s);
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

void write_report(const Campaign& c, std::ostream* log) {
  std::vector<std::string> names;
  for (const auto& spec : c.datasets) names.push_back(dataset_name(spec));

  const std::vector<std::string> t1_cols{"full_accuracy",   "pruned_accuracy", "sparsity_all",  "sparsity_stage0",
                                         "sparsity_stage1", "sparsity_stage2", "nodes_all",     "nodes_stage0",
                                         "nodes_stage1",    "nodes_stage2",    "parameters"};
  const std::vector<std::string> t2_cols{"log_paths_ln", "mean_path_edges", "max_path_edges", "ln_communicability",
                                         "edge_connectivity", "mean_degree", "pca_elongation"};
  std::string table1 = "dataset,runs,connected";
  for (const auto& col : t1_cols) table1 += "," + col;
  table1 += ",retrain_plain_accuracy,retrain_fitc_accuracy\n";
  std::string table2 = "dataset,runs,connected";
  for (const auto& col : t2_cols) table2 += "," + col;
  table2 += ",q1d_fraction\n";

  std::string features_all;
  FeatureTable ft = make_feature_table();
  for (const std::string& name : names) {
    std::map<std::string, std::vector<double>> values;
    int runs = 0, connected = 0;
    std::vector<double> plain, fitc, q1d;
    for (int s = 0; s < c.seeds; ++s) {
      const fs::path dir = run_dir(c, name, s);
      if (!cell_complete(dir.string())) continue;
      ++runs;
      const auto rows = read_csv((dir / "features.csv").string());
      if (rows.size() < 2) continue;
      if (features_all.empty()) {
        for (std::size_t i = 0; i < rows[0].size(); ++i) features_all += (i ? "," : "") + rows[0][i];
        features_all += "\n";
      }
      for (std::size_t i = 0; i < rows[1].size(); ++i) features_all += (i ? "," : "") + rows[1][i];
      features_all += "\n";
      const auto& h = rows[0];
      const auto& r = rows[1];
      values["full_accuracy"].push_back(to_double(r[column(h, "full_accuracy")]));
      values["pruned_accuracy"].push_back(to_double(r[column(h, "pruned_accuracy")]));
      if (r[column(h, "status")] == "ok") {
        ++connected;
        for (const auto& col : t1_cols)
          if (col != "full_accuracy" && col != "pruned_accuracy") values[col].push_back(to_double(r[column(h, col)]));
        for (const auto& col : t2_cols) values[col].push_back(to_double(r[column(h, col)]));
        q1d.push_back(to_double(r[column(h, "q1d")]));
        FeatureRow fr;
        fr.run_id = r[column(h, "run")];
        fr.dataset = name;
        fr.seed = static_cast<std::uint64_t>(s);
        for (const auto& fname : ft.names) fr.values.push_back(to_double(r[column(h, fname)]));
        ft.rows.push_back(std::move(fr));
      }
      const auto rt = read_csv((dir / "retrain.csv").string());
      for (std::size_t i = 1; i < rt.size(); ++i) {
        if (rt[i].size() < 5 || rt[i][1] != "ok") continue;
        (rt[i][0] == "plain" ? plain : fitc).push_back(to_double(rt[i][4]));
      }
    }
    table1 += name + "," + std::to_string(runs) + "," + std::to_string(connected);
    for (const auto& col : t1_cols) table1 += "," + mean_pm_std(values[col]);
    table1 += "," + mean_pm_std(plain) + "," + mean_pm_std(fitc) + "\n";
    table2 += name + "," + std::to_string(runs) + "," + std::to_string(connected);
    for (const auto& col : t2_cols) table2 += "," + mean_pm_std(values[col]);
    double qf = 0;
    for (double q : q1d) qf += q;
    table2 += "," + (q1d.empty() ? std::string("nan") : fmt6(qf / static_cast<double>(q1d.size()))) + "\n";
  }
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  write_text((out / "table1.csv").string(), table1);
  write_text((out / "table2.csv").string(), table2);
  write_text((out / "features_all.csv").string(), features_all);
  if (ft.rows.size() >= 2) {
    try {
      const Eigen::MatrixXd k = similarity_matrix(ft);
      write_text((out / "similarity.csv").string(), similarity_csv(ft, k));
      write_text((out / "similarity.pgm").string(), similarity_pgm(k));
    } catch (const SimilarityError& e) {
      if (log) *log << "similarity skipped: " << e.what() << "\n";
    }
  } else if (log) {
    *log << "similarity skipped: fewer than two connected runs\n";
  }
}

}  // namespace dagsparse
