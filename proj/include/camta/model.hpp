#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camta/data.hpp"
#include "camta/graph.hpp"
#include "camta/tensor.hpp"

namespace camta {

struct Hyperparams {
  Index embedding_size = 32;
  Index hidden_size = 64;   // recurrent cell units
  Index repr_size = 32;     // L, balanced representation and attention width
  Index head_hidden = 64;   // classifier-head hidden units
  double dropout = 0.1;     // applied to recurrent outputs, train mode only
  double lambda = 5.0;      // adversarial strength
  double beta = 5.0;        // conversion-loss weight
  Index num_channels = 0;   // K
  Index max_len = 20;
  std::vector<Index> cardinalities;  // per covariate field, OOV slot included
  bool linear_phi = false;           // skip the tanh on r_t
  bool attention_click_only = false; // v_t from the click probability alone

  Index recurrent_input_size() const {
    return static_cast<Index>(cardinalities.size()) * embedding_size +
           num_channels + 1;
  }
  void validate() const;
};

// All trainable arrays, iterated in a fixed order for optimizer state and
// checkpoints. Weights are shared across timesteps.
struct CamtaParams {
  std::vector<Tensor> embeddings;  // one table per covariate field
  // gated recurrent cell (LSTM): input, forget, output, candidate
  Tensor w_in_i, w_in_f, w_in_o, w_in_g;    // [input, hidden]
  Tensor w_rec_i, w_rec_f, w_rec_o, w_rec_g;  // [hidden, hidden]
  Tensor b_i, b_f, b_o, b_g;                  // [hidden]
  Tensor phi_w, phi_b;                        // s_t -> r_t
  Tensor chan_w1, chan_b1, chan_w2, chan_b2;  // adversarial channel head
  Tensor click_w1, click_b1, click_w2, click_b2;
  Tensor attn_w, attn_b, attn_u;              // W_v, b_v, context vector u
  Tensor conv_w, conv_b;                      // W_y, b_y

  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
};

CamtaParams init_params(const Hyperparams& hp, std::uint64_t seed);

struct AttributionResult {
  std::vector<double> attention;                   // a_t, sums to 1
  std::vector<double> click_prob;                  // zhat_{t+1}
  std::vector<std::vector<double>> channel_propensity;  // K per step
  double conversion_prob = 0.0;                    // yhat
};

enum class Mode { kTrain, kEval };

// Node handles produced by a batched forward pass, consumed by loss() and by
// the result extractors below.
struct ForwardNodes {
  NodeId yhat = -1;                     // [B,1]
  std::vector<NodeId> zhat;             // per step, [B,1]
  std::vector<NodeId> propensity;       // per step, [B,K]
  NodeId attention = -1;                // [B,T], masked rows sum to 1
  NodeId phi_out = -1;                  // r_t of the first step (diagnostics)
  Tensor step_mask;                     // [B,T], 1 on valid steps
  std::vector<NodeId> param_ids;        // aligned with CamtaParams::named()
  Index batch = 0;
  Index steps = 0;
};

ForwardNodes forward(Graph& g, const CamtaParams& params, const Hyperparams& hp,
                     const std::vector<Journey>& batch, Mode mode,
                     std::uint64_t dropout_seed);

struct LossNodes {
  NodeId total = -1;  // training scalar: mean_n [ sum_t(L_tz + L_tc) + beta L_y ]
  NodeId channel_sum = -1;  // per-journey sum_t L_tc, [B,1]
  NodeId click_sum = -1;    // per-journey sum_t L_tz, [B,1]
  NodeId conv = -1;         // per-journey L_y, [B,1]
  double l_c = 0.0;   // mean channel cross-entropy term
  double l_z = 0.0;   // mean click loss term
  double l_y = 0.0;   // mean conversion loss
  double l_r = 0.0;   // reported MinMax value: L_z - lambda * L_c
};

LossNodes loss(Graph& g, const ForwardNodes& fwd,
               const std::vector<Journey>& batch, const Hyperparams& hp);

std::vector<AttributionResult> extract_results(const Graph& g,
                                               const ForwardNodes& fwd,
                                               const std::vector<Journey>& batch);

// Deterministic eval-mode forward of a single journey.
AttributionResult attribute(const CamtaParams& params, const Hyperparams& hp,
                            const Journey& journey);

// Eval-mode forward over a whole set, batched for throughput.
std::vector<AttributionResult> predict(const CamtaParams& params,
                                       const Hyperparams& hp,
                                       const std::vector<Journey>& journeys,
                                       Index batch_size = 256);

// Attribution file: one JSON record per journey (weights, click probabilities,
// conversion probability), consumed by the budget and segment stages. The
// baseline methods emit the same format.
void save_attributions(const std::string& path,
                       const std::vector<AttributionResult>& results);
std::vector<AttributionResult> load_attributions(const std::string& path);

// Checkpoint container: text header (format version, hyperparameters,
// vocabulary hash, parameter names/shapes) followed by little-endian doubles
// in header order. Round-trips bit-exact.
void save_checkpoint(const std::string& path, const CamtaParams& params,
                     const Hyperparams& hp, std::uint64_t vocab_hash);

struct Checkpoint {
  CamtaParams params;
  Hyperparams hp;
  std::uint64_t vocab_hash = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace camta
