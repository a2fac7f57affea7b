#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dagsparse/datasets.hpp"
#include "dagsparse/network.hpp"
#include "dagsparse/pruner.hpp"
#include "dagsparse/trainer.hpp"

namespace dagsparse {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);
ConfigMap read_config_file(const std::string& path);

/// Applies one "key=value" override.
void apply_override(ConfigMap& m, std::string_view assignment);

enum class RetrainMode { None, Plain, FitC, Both };

struct Campaign {
  std::string out_dir = "campaign";
  // Dataset specs: "shapes<level>" with optional "+embed<res>" and
  // "+tear<patch>" suffixes, or "file:<path>" for a saved dataset.
  std::vector<std::string> datasets{"shapes1", "shapes2", "shapes3"};
  int seeds = 10;
  std::uint64_t campaign_seed = 0;

  int nodes = 60;
  int stages = 3;
  NetConfig net;  // input shape and class count come from each dataset
  TrainConfig train;

  int data_train_size = 4000;
  int data_test_size = 1000;
  int data_resolution = 16;
  int data_classes = 10;
  std::uint64_t data_seed = 0;
  double embed_noise = 0.1;

  double tau = kDefaultTau;
  std::vector<double> tau_grid = default_tau_grid();
  RetrainMode retrain = RetrainMode::Both;
  int workers = 0;  // 0 = one per hardware thread
  int checkpoint_every = 10;
};

/// Unknown keys and malformed values raise ConfigError.
Campaign campaign_from_config(const ConfigMap& m);

/// The documented keys with a one-line description each.
std::string config_help();

/// Canonical config text; campaign_from_config(parse_config(x)) reproduces it.
std::string to_config_text(const Campaign& c);

Dataset make_dataset(const Campaign& c, const std::string& spec);

/// Name make_dataset gives the dataset, without generating it.
std::string dataset_name(const std::string& spec);

/// Per-cell seed expanded from the campaign seed.
std::uint64_t cell_seed(const Campaign& c, const std::string& dataset, int seed_index);

std::string run_dir(const Campaign& c, const std::string& dataset, int seed_index);

/// File names every finished run directory contains.
const std::vector<std::string>& cell_artifacts();

bool cell_complete(const std::string& dir);

/// Train (resuming from the cell checkpoint if present), sweep, prune at the
/// default threshold, compute graph characteristics and retrain; writes
/// every artifact into the run directory.
void run_cell(const Campaign& c, const Dataset& data, int seed_index, std::ostream* log = nullptr);

struct CellOutcome {
  enum class Status { Done, Skipped, Failed };
  std::string dataset;
  int seed_index = 0;
  Status status = Status::Done;
  std::string error;
};

struct CampaignReport {
  std::vector<CellOutcome> cells;
  std::vector<std::string> config_errors;

  int failed() const;
  int skipped() const;
  /// 0 success, 1 cell failures, 2 config errors.
  int exit_code() const;
};

/// Runs every (dataset, seed) cell on a bounded worker pool, skipping
/// finished cells, then writes the aggregate report.
CampaignReport run_campaign(const Campaign& c, std::ostream* log = nullptr);

/// Aggregates finished run directories into table1.csv, table2.csv,
/// features_all.csv, similarity.csv and similarity.pgm. Only reads run data.
void write_report(const Campaign& c, std::ostream* log = nullptr);

/// DOT of a pruned graph carrying what read_pruned_dot needs to rebuild it
/// against the original fully connected DAG.
std::string pruned_dot_text(const PrunedGraph& pg, const EdgeParams& full_edges, int nodes, int stages,
                            std::int64_t parameters, std::map<std::string, std::string> attrs = {});

struct LoadedPruned {
  PrunedGraph pruned;
  DagSpec original;
  std::int64_t parameters = 0;
};
LoadedPruned read_pruned_dot(std::istream& is);

// Small CSV helpers shared with the CLI.
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::string mean_pm_std(const std::vector<double>& values);

}  // namespace dagsparse
