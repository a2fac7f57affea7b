#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagsparse/graph_stats.hpp"

namespace dagsparse {

class SimilarityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureRow {
  std::string run_id;
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

/// Runs x features. After standardize(), `z` holds the kept columns with zero
/// mean and unit (population) standard deviation.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;

  std::vector<std::string> kept;     // columns surviving standardization
  std::vector<std::string> dropped;  // zero-variance columns
  Eigen::VectorXd mean, stddev;
  Eigen::MatrixXd z;

  void add(std::string run_id, std::string dataset, std::uint64_t seed, const GraphFeatures& f);
  Eigen::MatrixXd raw() const;
};

FeatureTable make_feature_table();

/// Fills mean/stddev/z; columns with zero variance are dropped and listed in
/// `dropped`.
void standardize(FeatureTable& t, double zero_variance_tol = 1e-12);

/// K_ij = exp(-gamma |z_i - z_j|^2); gamma defaults to one over the number of
/// kept features. Standardizes the table if that has not happened yet.
Eigen::MatrixXd similarity_matrix(FeatureTable& t, std::optional<double> gamma = std::nullopt);

/// Mean similarity over pairs i != j with equal (within) or different
/// (across) dataset names.
struct BlockMeans {
  double within = 0;
  double across = 0;
};
BlockMeans block_means(const FeatureTable& t, const Eigen::MatrixXd& k);

std::string similarity_csv(const FeatureTable& t, const Eigen::MatrixXd& k);

/// Binary 8-bit PGM, white = 1, with each entry drawn as a cell x cell block.
std::string similarity_pgm(const Eigen::MatrixXd& k, int cell = 8);

}  // namespace dagsparse
