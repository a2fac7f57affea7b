#include "dagsparse/trainer.hpp"

namespace dagsparse {

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw TrainingError("invalid train config: " + what); };
  if (c.epochs < 0) fail("epochs must be non-negative");
  if (!(c.lr > 0) || !std::isfinite(c.lr)) fail("lr must be positive");
  if (c.momentum < 0 || c.momentum >= 1) fail("momentum must lie in [0, 1)");
  if (c.batch_size < 2) fail("batch_size must be at least 2");
  if (c.weight_decay < 0) fail("weight_decay must be non-negative");
  if (!(c.lr_drop_factor > 0)) fail("lr_drop_factor must be positive");
  if (c.lambda_sparsity < 0 || !std::isfinite(c.lambda_sparsity)) fail("lambda_sparsity must be non-negative");
  if (c.snapshot_interval < 0) fail("snapshot_interval must be non-negative");
  if (c.eval_batch < 1) fail("eval_batch must be positive");
  if (c.grad_clip < 0) fail("grad_clip must be non-negative");
}

}  // namespace dagsparse
