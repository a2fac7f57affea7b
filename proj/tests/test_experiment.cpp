#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/checkpoint.hpp"
#include "dagsparse/experiment.hpp"

using namespace dagsparse;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dagsparse_test_" + name);
  fs::remove_all(p);
  return p.string();
}

const char* kTinyCampaign = R"(
# smallest campaign that exercises every stage
datasets = shapes1
seeds = 1
campaign_seed = 3
nodes = 6
stages = 3
channels = 2
data_train_size = 24
data_test_size = 12
data_resolution = 8
data_classes = 3
epochs = 3
batch_size = 8
lr = 0.05
lr_drops = 2
grad_clip = 5
tau_grid = 0.001,0.006,0.999
retrain = both
workers = 1
checkpoint_every = 1
)";

Campaign tiny_campaign(const std::string& out) {
  ConfigMap m = parse_config(kTinyCampaign);
  m["out_dir"] = out;
  return campaign_from_config(m);
}

}  // namespace

TEST_CASE("config text parses with comments and overrides") {
  ConfigMap m = parse_config("# c\n\nseeds = 4\n  lr=0.2  # trailing\n");
  CHECK(m.at("seeds") == "4");
  CHECK(m.at("lr") == "0.2");
  apply_override(m, "seeds=7");
  CHECK(m.at("seeds") == "7");
  const Campaign c = campaign_from_config(m);
  CHECK(c.seeds == 7);
  CHECK(c.train.lr == 0.2);
  CHECK_THROWS_AS(apply_override(m, "novalue"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK_THROWS_AS(campaign_from_config({{"seedz", "3"}}), ConfigError);
  CHECK_THROWS_AS(campaign_from_config({{"seeds", "three"}}), ConfigError);
  CHECK_THROWS_AS(campaign_from_config({{"lr", "-1"}}), ConfigError);
  CHECK_THROWS_AS(campaign_from_config({{"retrain", "sometimes"}}), ConfigError);
  CHECK_THROWS_AS(campaign_from_config({{"tau_grid", "0.1,0.05"}}), ConfigError);
  CHECK_THROWS_AS(campaign_from_config({{"nodes", "10"}, {"stages", "3"}}), ConfigError);
}

TEST_CASE("canonical config text round trips") {
  Campaign c = tiny_campaign("x");
  const std::string text = to_config_text(c);
  CHECK(to_config_text(campaign_from_config(parse_config(text))) == text);
  for (const std::string key : {"grad_clip", "tau_grid", "lambda", "datasets"})
    CHECK(config_help().find(key) != std::string::npos);
}

TEST_CASE("dataset specs name their transforms") {
  CHECK(dataset_name("shapes2") == "shapes2");
  CHECK(dataset_name("shapes1+embed32") == "shapes1_c");
  CHECK(dataset_name("shapes3+tear4") == "shapes3_t4");
  CHECK_THROWS_AS(dataset_name("shapes9"), ConfigError);
  CHECK_THROWS_AS(dataset_name("cifar"), ConfigError);
}

TEST_CASE("cell seeds differ across datasets and seed indices") {
  const Campaign c = tiny_campaign("x");
  CHECK(cell_seed(c, "shapes1", 0) != cell_seed(c, "shapes1", 1));
  CHECK(cell_seed(c, "shapes1", 0) != cell_seed(c, "shapes2", 0));
  CHECK(cell_seed(c, "shapes1", 0) == cell_seed(c, "shapes1", 0));
}

TEST_CASE("checkpoint corruption is detected") {
  ShapesOptions o;
  o.train_size = 8;
  o.test_size = 4;
  o.resolution = 8;
  o.num_classes = 2;
  const Dataset d = gen_shapes(o);
  NetConfig net;
  net.base_channels = 2;
  net.input_resolution = 8;
  net.input_channels = 1;
  net.num_classes = 2;
  TrainConfig t;
  t.epochs = 1;
  t.batch_size = 4;
  auto s = make_train_state<float>(build_full_dag(6, 3), net, t);
  train_epochs(s, d, 1);
  const std::string bytes = serialize_checkpoint(s);
  CHECK(serialize_checkpoint(deserialize_checkpoint<float>(bytes)) == bytes);

  auto message = [](const std::string& b) {
    try {
      deserialize_checkpoint<float>(b);
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message(bytes.substr(0, bytes.size() - 7)).find("truncated") != std::string::npos);
  std::string flipped = bytes;
  flipped[bytes.size() - 20] ^= 0x01;
  CHECK(message(flipped).find("corrupted") != std::string::npos);
  std::string version = bytes;
  version[4] = 9;
  CHECK(message(version).find("version") != std::string::npos);
  CHECK(message("PNG garbage that is long enough") == "not a checkpoint file");
  CHECK_THROWS_AS(deserialize_checkpoint<double>(bytes), FormatError);
}

TEST_CASE("pruned DOT files rebuild the pruned graph") {
  const DagSpec g = build_full_dag(9, 3);
  EdgeParams w = init_edge_params(g);
  Rng rng(2);
  for (double& x : w.raw) x = rng.uniform() < 0.4 ? 0.0 : rng.uniform(-1, 1);
  const PrunedGraph pg = prune(g, w, 0.006);
  std::istringstream is(pruned_dot_text(pg, w, 9, 3, 4321, {{"dataset", "shapes1"}}));
  const LoadedPruned l = read_pruned_dot(is);
  CHECK(l.pruned == pg);
  CHECK(l.original == g);
  CHECK(l.parameters == 4321);
}

TEST_CASE("sample standard deviation in summaries") {
  CHECK(mean_pm_std({1.0, 2.0, 3.0}) == "2 ± 1");
  CHECK(mean_pm_std({0.5}) == "0.5 ± 0");
  CHECK(mean_pm_std({}) == "nan");
}

TEST_CASE("campaign report exit codes") {
  CampaignReport r;
  CHECK(r.exit_code() == 0);
  r.cells.push_back({"a", 0, CellOutcome::Status::Failed, "boom"});
  CHECK(r.exit_code() == 1);
  r.config_errors.push_back("bad");
  CHECK(r.exit_code() == 2);
}

TEST_CASE("one-cell campaign writes every artifact, resumes, and is reproducible") {
  const std::string a = scratch("campaign_a"), b = scratch("campaign_b");
  const Campaign ca = tiny_campaign(a);
  const CampaignReport first = run_campaign(ca);
  CHECK(first.exit_code() == 0);
  REQUIRE(first.cells.size() == 1);
  CHECK(first.cells[0].status == CellOutcome::Status::Done);
  const std::string dir = run_dir(ca, "shapes1", 0);
  for (const auto& f : cell_artifacts()) CHECK(fs::exists(fs::path(dir) / f));
  for (const std::string f : {"table1.csv", "table2.csv", "features_all.csv", "campaign.cfg"})
    CHECK(fs::exists(fs::path(a) / f));

  const auto sweep = read_csv((fs::path(dir) / "sweep.csv").string());
  REQUIRE(sweep.size() == 4);
  CHECK(sweep[3][5] == "1");  // tau 0.999 disconnects everything
  const auto table1 = read_csv((fs::path(a) / "table1.csv").string());
  CHECK(table1[1][0] == "shapes1");
  CHECK(table1[1][3].find(" ± 0") != std::string::npos);

  const CampaignReport again = run_campaign(ca);
  CHECK(again.skipped() == 1);

  run_campaign(tiny_campaign(b));
  for (const std::string f : {"train_log.csv", "sweep.csv", "features.csv", "retrain.csv", "edge_trajectory.json"})
    CHECK(read_file((fs::path(dir) / f).string()) == read_file((fs::path(run_dir(tiny_campaign(b), "shapes1", 0)) / f).string()));
  for (const std::string f : {"table1.csv", "table2.csv", "features_all.csv"})
    CHECK(read_file((fs::path(a) / f).string()) == read_file((fs::path(b) / f).string()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("an unusable dataset list is a config error") {
  Campaign c = tiny_campaign(scratch("campaign_bad"));
  c.datasets = {"shapes1", "shapes1"};
  CHECK(run_campaign(c).exit_code() == 2);
  fs::remove_all(c.out_dir);
}
