#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camta/model.hpp"

namespace camta {

struct TrainConfig {
  double learning_rate = 0.001;
  Index batch_size = 256;
  Index epochs = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // global gradient norm
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  double train_l_c = 0.0, train_l_z = 0.0, train_l_y = 0.0, train_total = 0.0;
  double val_l_c = 0.0, val_l_z = 0.0, val_l_y = 0.0;
  double val_total = 0.0;  // the overall objective: L_z - lambda*L_c + beta*L_y
  double val_auc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0-based index into `epochs`
};

struct TrainResult {
  CamtaParams params;        // from the epoch with the lowest validation objective
  CamtaParams final_params;  // state after the last epoch
  TrainHistory history;
};

// Adam with bias-corrected moments and optional global-norm gradient
// clipping; moment buffers are shaped on first step.
class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}
  void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads);
  std::int64_t steps() const { return step_; }

 private:
  TrainConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t step_ = 0;
};

TrainResult train(const std::vector<Journey>& train_set,
                  const std::vector<Journey>& validation_set,
                  const Hyperparams& hp, const TrainConfig& cfg);

// Validation-set losses and AUC of a parameter snapshot (eval mode).
EpochRecord validate(const CamtaParams& params, const Hyperparams& hp,
                     const std::vector<Journey>& validation_set,
                     Index batch_size);

// One grid axis may be empty, meaning "keep the base value".
struct Grid {
  std::vector<double> learning_rate;
  std::vector<Index> batch_size;
  std::vector<Index> hidden_size;
  std::vector<Index> repr_size;
  std::vector<Index> mlp_embed_size;  // head hidden and embedding, tied
  std::vector<double> dropout;
  std::vector<std::pair<double, double>> lambda_beta;
};

struct GridEntry {
  Hyperparams hp;
  TrainConfig cfg;
  double val_total = 0.0;
  double val_auc = 0.0;
  bool failed = false;
  std::string error;
};

struct GridResult {
  std::size_t best = 0;
  std::vector<GridEntry> leaderboard;  // enumeration order
};

// Exhaustive product of the grid axes; selection by minimum validation
// objective, ties by higher validation AUC, then first listed. A failed
// point is recorded, not fatal.
GridResult grid_search(const std::vector<Journey>& train_set,
                       const std::vector<Journey>& validation_set,
                       const Hyperparams& base_hp, const TrainConfig& base_cfg,
                       const Grid& grid,
                       std::vector<TrainResult>* results = nullptr);

void save_history(const std::string& path, const TrainHistory& history,
                  const Hyperparams& hp, const TrainConfig& cfg);

}  // namespace camta
