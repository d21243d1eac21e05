#include "camta/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "camta/eval.hpp"
#include "camta/rng.hpp"

namespace camta {

using nlohmann::json;

void TrainConfig::validate() const {
  if (learning_rate <= 0)
    throw std::invalid_argument("train: learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch size < 1");
  if (epochs < 1) throw std::invalid_argument("train: epochs < 1");
}

void Adam::step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& g : grads) {
      Tensor zero = g;
      zero.data.setZero();
      m_.push_back(zero);
      v_.push_back(std::move(zero));
    }
  }

  // global-norm clipping before the moment update
  double sq = 0.0;
  for (const auto& g : grads) sq += g.data.squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale =
      (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, step_);
  const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, step_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::VectorXd g = grads[i].data * scale;
    m_[i].data = cfg_.adam_beta1 * m_[i].data + (1.0 - cfg_.adam_beta1) * g;
    v_[i].data = cfg_.adam_beta2 * v_[i].data +
                 (1.0 - cfg_.adam_beta2) * g.array().square().matrix();
    const Eigen::ArrayXd m_hat = m_[i].data.array() / bc1;
    const Eigen::ArrayXd v_hat = v_[i].data.array() / bc2;
    params[i]->data.array() -=
        cfg_.learning_rate * m_hat / (v_hat.sqrt() + cfg_.adam_eps);
  }
}

EpochRecord validate(const CamtaParams& params, const Hyperparams& hp,
                     const std::vector<Journey>& validation_set,
                     Index batch_size) {
  EpochRecord rec;
  if (validation_set.empty()) return rec;
  double sum_lc = 0, sum_lz = 0, sum_ly = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t start = 0; start < validation_set.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(validation_set.size(),
                                     start + static_cast<std::size_t>(batch_size));
    const std::vector<Journey> batch(validation_set.begin() + start,
                                     validation_set.begin() + end);
    Graph g;
    ForwardNodes fwd = forward(g, params, hp, batch, Mode::kEval, 0);
    LossNodes ln = loss(g, fwd, batch, hp);
    const double w = static_cast<double>(batch.size());
    sum_lc += ln.l_c * w;
    sum_lz += ln.l_z * w;
    sum_ly += ln.l_y * w;
    const Tensor& yhat = g.value(fwd.yhat);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      scores.push_back(yhat.at(static_cast<Index>(b), 0));
      labels.push_back(batch[b].conversion);
    }
  }
  const double n = static_cast<double>(validation_set.size());
  rec.val_l_c = sum_lc / n;
  rec.val_l_z = sum_lz / n;
  rec.val_l_y = sum_ly / n;
  rec.val_total = rec.val_l_z - hp.lambda * rec.val_l_c + hp.beta * rec.val_l_y;
  bool both_classes = false;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) both_classes = true;
  rec.val_auc = both_classes ? auc(scores, labels) : 0.5;
  return rec;
}

TrainResult train(const std::vector<Journey>& train_set,
                  const std::vector<Journey>& validation_set,
                  const Hyperparams& hp, const TrainConfig& cfg) {
  cfg.validate();
  hp.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");

  CamtaParams params = init_params(hp, cfg.seed);
  Adam adam(cfg);
  TrainResult result;
  result.params = params;
  double best_val = HUGE_VAL;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, /*stream=*/41, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

    // drop-last batching; if the set is smaller than one batch, take it whole
    std::size_t num_batches = order.size() / bs;
    std::size_t eff_bs = bs;
    if (num_batches == 0) {
      num_batches = 1;
      eff_bs = order.size();
    }

    EpochRecord rec;
    for (std::size_t batch_idx = 0; batch_idx < num_batches; ++batch_idx) {
      std::vector<Journey> batch;
      batch.reserve(eff_bs);
      for (std::size_t i = 0; i < eff_bs; ++i)
        batch.push_back(train_set[order[batch_idx * eff_bs + i]]);

      Graph g;
      const std::uint64_t drop_seed =
          derive_seed(cfg.seed, /*stream=*/43,
                      static_cast<std::uint64_t>(epoch) * 1000003ULL + batch_idx);
      ForwardNodes fwd = forward(g, params, hp, batch, Mode::kTrain, drop_seed);
      LossNodes ln = loss(g, fwd, batch, hp);
      const double total = g.value(ln.total).data[0];
      if (!std::isfinite(total))
        throw std::runtime_error("train: loss diverged at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_idx));
      g.backward(ln.total);
      std::vector<Tensor> grads;
      grads.reserve(fwd.param_ids.size());
      for (NodeId id : fwd.param_ids) grads.push_back(g.grad(id));
      std::vector<Tensor*> targets;
      for (auto& [name, t] : params.named()) targets.push_back(t);
      adam.step(targets, grads);

      rec.train_l_c += ln.l_c;
      rec.train_l_z += ln.l_z;
      rec.train_l_y += ln.l_y;
      rec.train_total += total;
    }
    const double nb = static_cast<double>(num_batches);
    rec.train_l_c /= nb;
    rec.train_l_z /= nb;
    rec.train_l_y /= nb;
    rec.train_total /= nb;

    const EpochRecord val =
        validate(params, hp, validation_set, cfg.batch_size);
    rec.val_l_c = val.val_l_c;
    rec.val_l_z = val.val_l_z;
    rec.val_l_y = val.val_l_y;
    rec.val_total = val.val_total;
    rec.val_auc = val.val_auc;
    result.history.epochs.push_back(rec);

    const double selection_key =
        validation_set.empty() ? rec.train_total : rec.val_total;
    if (selection_key < best_val) {
      best_val = selection_key;
      result.params = params;
      result.history.best_epoch = result.history.epochs.size() - 1;
    }
  }
  result.final_params = params;
  return result;
}

GridResult grid_search(const std::vector<Journey>& train_set,
                       const std::vector<Journey>& validation_set,
                       const Hyperparams& base_hp, const TrainConfig& base_cfg,
                       const Grid& grid, std::vector<TrainResult>* results) {
  auto lr_axis = grid.learning_rate.empty()
                     ? std::vector<double>{base_cfg.learning_rate}
                     : grid.learning_rate;
  auto bs_axis = grid.batch_size.empty() ? std::vector<Index>{base_cfg.batch_size}
                                         : grid.batch_size;
  auto hid_axis = grid.hidden_size.empty()
                      ? std::vector<Index>{base_hp.hidden_size}
                      : grid.hidden_size;
  auto repr_axis = grid.repr_size.empty() ? std::vector<Index>{base_hp.repr_size}
                                          : grid.repr_size;
  auto mlp_axis = grid.mlp_embed_size.empty()
                      ? std::vector<Index>{base_hp.head_hidden}
                      : grid.mlp_embed_size;
  auto drop_axis = grid.dropout.empty() ? std::vector<double>{base_hp.dropout}
                                        : grid.dropout;
  auto lb_axis = grid.lambda_beta.empty()
                     ? std::vector<std::pair<double, double>>{
                           {base_hp.lambda, base_hp.beta}}
                     : grid.lambda_beta;

  GridResult out;
  double best_total = HUGE_VAL;
  double best_auc = -1.0;
  for (double lr : lr_axis)
    for (Index bs : bs_axis)
      for (Index hid : hid_axis)
        for (Index repr : repr_axis)
          for (Index mlp : mlp_axis)
            for (double drop : drop_axis)
              for (auto [lambda, beta] : lb_axis) {
                GridEntry entry;
                entry.hp = base_hp;
                entry.hp.hidden_size = hid;
                entry.hp.repr_size = repr;
                entry.hp.head_hidden = mlp;
                entry.hp.embedding_size = mlp;
                entry.hp.dropout = drop;
                entry.hp.lambda = lambda;
                entry.hp.beta = beta;
                entry.cfg = base_cfg;
                entry.cfg.learning_rate = lr;
                entry.cfg.batch_size = bs;
                try {
                  TrainResult r =
                      train(train_set, validation_set, entry.hp, entry.cfg);
                  const EpochRecord& best =
                      r.history.epochs[r.history.best_epoch];
                  entry.val_total = best.val_total;
                  entry.val_auc = best.val_auc;
                  if (results) results->push_back(std::move(r));
                } catch (const std::exception& e) {
                  entry.failed = true;
                  entry.error = e.what();
                  if (results) results->push_back({});
                }
                if (!entry.failed &&
                    (entry.val_total < best_total ||
                     (entry.val_total == best_total && entry.val_auc > best_auc))) {
                  best_total = entry.val_total;
                  best_auc = entry.val_auc;
                  out.best = out.leaderboard.size();
                }
                out.leaderboard.push_back(std::move(entry));
              }
  if (out.leaderboard.empty())
    throw std::invalid_argument("grid_search: empty grid");
  return out;
}

void save_history(const std::string& path, const TrainHistory& history,
                  const Hyperparams& hp, const TrainConfig& cfg) {
  json epochs = json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"train_l_c", e.train_l_c},
                      {"train_l_z", e.train_l_z},
                      {"train_l_y", e.train_l_y},
                      {"train_total", e.train_total},
                      {"val_l_c", e.val_l_c},
                      {"val_l_z", e.val_l_z},
                      {"val_l_y", e.val_l_y},
                      {"val_total", e.val_total},
                      {"val_auc", e.val_auc}});
  }
  json doc{{"format_version", 1},
           {"best_epoch", history.best_epoch},
           {"epochs", std::move(epochs)},
           {"hyperparams",
            {{"embedding_size", hp.embedding_size},
             {"hidden_size", hp.hidden_size},
             {"repr_size", hp.repr_size},
             {"head_hidden", hp.head_hidden},
             {"dropout", hp.dropout},
             {"lambda", hp.lambda},
             {"beta", hp.beta}}},
           {"config",
            {{"learning_rate", cfg.learning_rate},
             {"batch_size", cfg.batch_size},
             {"epochs", cfg.epochs},
             {"seed", cfg.seed}}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_history: cannot open " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace camta
