#include "camta/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "camta/rng.hpp"

namespace camta {

using nlohmann::json;

void Hyperparams::validate() const {
  if (embedding_size < 1 || hidden_size < 1 || repr_size < 1 || head_hidden < 1)
    throw std::invalid_argument("hyperparams: sizes must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("hyperparams: dropout outside [0,1)");
  if (lambda < 0.0 || beta < 0.0)
    throw std::invalid_argument("hyperparams: lambda and beta must be >= 0");
  if (num_channels < 1) throw std::invalid_argument("hyperparams: K < 1");
  if (max_len < 1) throw std::invalid_argument("hyperparams: max_len < 1");
  if (cardinalities.empty())
    throw std::invalid_argument("hyperparams: no covariate fields");
  for (Index c : cardinalities)
    if (c < 1) throw std::invalid_argument("hyperparams: cardinality < 1");
}

std::vector<std::pair<std::string, Tensor*>> CamtaParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t f = 0; f < embeddings.size(); ++f)
    out.emplace_back("embedding." + std::to_string(f), &embeddings[f]);
  out.emplace_back("rnn.w_in_i", &w_in_i);
  out.emplace_back("rnn.w_in_f", &w_in_f);
  out.emplace_back("rnn.w_in_o", &w_in_o);
  out.emplace_back("rnn.w_in_g", &w_in_g);
  out.emplace_back("rnn.w_rec_i", &w_rec_i);
  out.emplace_back("rnn.w_rec_f", &w_rec_f);
  out.emplace_back("rnn.w_rec_o", &w_rec_o);
  out.emplace_back("rnn.w_rec_g", &w_rec_g);
  out.emplace_back("rnn.b_i", &b_i);
  out.emplace_back("rnn.b_f", &b_f);
  out.emplace_back("rnn.b_o", &b_o);
  out.emplace_back("rnn.b_g", &b_g);
  out.emplace_back("phi.w", &phi_w);
  out.emplace_back("phi.b", &phi_b);
  out.emplace_back("chan.w1", &chan_w1);
  out.emplace_back("chan.b1", &chan_b1);
  out.emplace_back("chan.w2", &chan_w2);
  out.emplace_back("chan.b2", &chan_b2);
  out.emplace_back("click.w1", &click_w1);
  out.emplace_back("click.b1", &click_b1);
  out.emplace_back("click.w2", &click_w2);
  out.emplace_back("click.b2", &click_b2);
  out.emplace_back("attn.w", &attn_w);
  out.emplace_back("attn.b", &attn_b);
  out.emplace_back("attn.u", &attn_u);
  out.emplace_back("conv.w", &conv_w);
  out.emplace_back("conv.b", &conv_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> CamtaParams::named() const {
  auto mut = const_cast<CamtaParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, ptr] : mut) out.emplace_back(name, ptr);
  return out;
}

namespace {

Tensor glorot(Index rows, Index cols, Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (Index i = 0; i < t.numel(); ++i) t.data[i] = rng.uniform(-a, a);
  return t;
}

}  // namespace

CamtaParams init_params(const Hyperparams& hp, std::uint64_t seed) {
  hp.validate();
  Rng rng(derive_seed(seed, /*stream=*/21));
  CamtaParams p;
  for (Index card : hp.cardinalities)
    p.embeddings.push_back(glorot(card, hp.embedding_size, rng));
  const Index in = hp.recurrent_input_size();
  const Index h = hp.hidden_size;
  p.w_in_i = glorot(in, h, rng);
  p.w_in_f = glorot(in, h, rng);
  p.w_in_o = glorot(in, h, rng);
  p.w_in_g = glorot(in, h, rng);
  p.w_rec_i = glorot(h, h, rng);
  p.w_rec_f = glorot(h, h, rng);
  p.w_rec_o = glorot(h, h, rng);
  p.w_rec_g = glorot(h, h, rng);
  p.b_i = Tensor::zeros(h);
  p.b_f = Tensor::zeros(h);
  p.b_o = Tensor::zeros(h);
  p.b_g = Tensor::zeros(h);
  const Index L = hp.repr_size;
  p.phi_w = glorot(h, L, rng);
  p.phi_b = Tensor::zeros(L);
  p.chan_w1 = glorot(L, hp.head_hidden, rng);
  p.chan_b1 = Tensor::zeros(hp.head_hidden);
  p.chan_w2 = glorot(hp.head_hidden, hp.num_channels, rng);
  p.chan_b2 = Tensor::zeros(hp.num_channels);
  p.click_w1 = glorot(L + hp.num_channels, hp.head_hidden, rng);
  p.click_b1 = Tensor::zeros(hp.head_hidden);
  p.click_w2 = glorot(hp.head_hidden, 1, rng);
  p.click_b2 = Tensor::zeros(1);
  const Index attn_in = hp.attention_click_only ? 1 : L + hp.num_channels + 1;
  p.attn_w = glorot(attn_in, L, rng);
  p.attn_b = Tensor::zeros(L);
  p.attn_u = glorot(L, 1, rng);  // context vector, kept as a column
  p.conv_w = glorot(L, 1, rng);
  p.conv_b = Tensor::zeros(1);
  return p;
}

ForwardNodes forward(Graph& g, const CamtaParams& params, const Hyperparams& hp,
                     const std::vector<Journey>& batch, Mode mode,
                     std::uint64_t dropout_seed) {
  hp.validate();
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  const Index B = static_cast<Index>(batch.size());
  Index T = 0;
  for (const auto& j : batch) {
    const Index len = static_cast<Index>(j.touchpoints.size());
    if (len == 0) throw std::invalid_argument("forward: journey of length 0");
    if (len > hp.max_len)
      throw std::invalid_argument("forward: journey longer than max_len");
    for (const auto& tp : j.touchpoints) {
      if (tp.channel < 0 || tp.channel >= hp.num_channels)
        throw std::invalid_argument("forward: channel index >= K");
      if (tp.covariates.size() != hp.cardinalities.size())
        throw std::invalid_argument("forward: covariate field count mismatch");
    }
    T = std::max(T, len);
  }

  ForwardNodes fwd;
  fwd.batch = B;
  fwd.steps = T;
  fwd.step_mask = Tensor::zeros(B, T);
  for (Index b = 0; b < B; ++b)
    for (Index t = 0; t < static_cast<Index>(batch[b].touchpoints.size()); ++t)
      fwd.step_mask.at(b, t) = 1.0;

  auto named = params.named();
  std::vector<NodeId> pid(named.size());
  for (std::size_t i = 0; i < named.size(); ++i)
    pid[i] = g.param(*named[i].second);
  fwd.param_ids = pid;
  auto id_of = [&](const char* name) -> NodeId {
    for (std::size_t i = 0; i < named.size(); ++i)
      if (named[i].first == name) return pid[i];
    throw std::logic_error(std::string("forward: no parameter ") + name);
  };
  const std::size_t num_fields = params.embeddings.size();
  const NodeId n_wi = id_of("rnn.w_in_i"), n_wf = id_of("rnn.w_in_f"),
               n_wo = id_of("rnn.w_in_o"), n_wg = id_of("rnn.w_in_g");
  const NodeId n_ui = id_of("rnn.w_rec_i"), n_uf = id_of("rnn.w_rec_f"),
               n_uo = id_of("rnn.w_rec_o"), n_ug = id_of("rnn.w_rec_g");
  const NodeId n_bi = id_of("rnn.b_i"), n_bf = id_of("rnn.b_f"),
               n_bo = id_of("rnn.b_o"), n_bg = id_of("rnn.b_g");

  Rng drop_rng(derive_seed(dropout_seed, /*stream=*/31));

  NodeId h_prev = g.input(Tensor::zeros(B, hp.hidden_size));
  NodeId c_prev = g.input(Tensor::zeros(B, hp.hidden_size));
  const Tensor ones_mask_k = [&] {
    Tensor m = Tensor::zeros(B, hp.num_channels);
    m.data.setOnes();
    return m;
  }();

  std::vector<NodeId> v_nodes, score_nodes;
  for (Index t = 0; t < T; ++t) {
    // recurrent input: embedded covariates, previous channel one-hot
    // (zeros at t=0), previous click (0 at t=0)
    std::vector<NodeId> parts;
    for (std::size_t f = 0; f < num_fields; ++f) {
      std::vector<Index> idx(B, 0);
      for (Index b = 0; b < B; ++b)
        if (t < static_cast<Index>(batch[b].touchpoints.size()))
          idx[b] = batch[b].touchpoints[t].covariates[f];
      parts.push_back(
          g.embedding_lookup(id_of(("embedding." + std::to_string(f)).c_str()), idx));
    }
    Tensor prev_onehot = Tensor::zeros(B, hp.num_channels);
    Tensor prev_click = Tensor::zeros(B, 1);
    if (t > 0) {
      for (Index b = 0; b < B; ++b) {
        if (t - 1 < static_cast<Index>(batch[b].touchpoints.size())) {
          prev_onehot.at(b, batch[b].touchpoints[t - 1].channel) = 1.0;
          prev_click.at(b, 0) = batch[b].touchpoints[t - 1].click;
        }
      }
    }
    parts.push_back(g.input(std::move(prev_onehot)));
    parts.push_back(g.input(std::move(prev_click)));
    const NodeId x = g.concat(parts);

    auto gate = [&](NodeId w_in, NodeId w_rec, NodeId bias) {
      return g.add(g.add(g.matmul(x, w_in), g.matmul(h_prev, w_rec)), bias);
    };
    const NodeId gi = g.sigmoid(gate(n_wi, n_ui, n_bi));
    const NodeId gf = g.sigmoid(gate(n_wf, n_uf, n_bf));
    const NodeId go = g.sigmoid(gate(n_wo, n_uo, n_bo));
    const NodeId gg = g.tanh(gate(n_wg, n_ug, n_bg));
    const NodeId cell = g.add(g.mul(gf, c_prev), g.mul(gi, gg));
    NodeId state = g.mul(go, g.tanh(cell));
    h_prev = state;
    c_prev = cell;

    if (mode == Mode::kTrain && hp.dropout > 0.0)
      state = g.dropout(state, hp.dropout, drop_rng);

    NodeId r = g.add(g.matmul(state, id_of("phi.w")), id_of("phi.b"));
    if (!hp.linear_phi) r = g.tanh(r);
    if (t == 0) fwd.phi_out = r;

    // adversarial channel head: descend on its own loss, reversed upstream
    const NodeId rev = g.grad_reverse(r, hp.lambda);
    const NodeId ch_hidden =
        g.tanh(g.add(g.matmul(rev, id_of("chan.w1")), id_of("chan.b1")));
    const NodeId ch_logits =
        g.add(g.matmul(ch_hidden, id_of("chan.w2")), id_of("chan.b2"));
    fwd.propensity.push_back(g.masked_softmax(ch_logits, ones_mask_k));

    Tensor cur_onehot = Tensor::zeros(B, hp.num_channels);
    for (Index b = 0; b < B; ++b)
      if (t < static_cast<Index>(batch[b].touchpoints.size()))
        cur_onehot.at(b, batch[b].touchpoints[t].channel) = 1.0;
    const NodeId c_t = g.input(std::move(cur_onehot));

    const NodeId click_in = g.concat({r, c_t});
    const NodeId click_hidden =
        g.tanh(g.add(g.matmul(click_in, id_of("click.w1")), id_of("click.b1")));
    const NodeId zhat = g.sigmoid(
        g.add(g.matmul(click_hidden, id_of("click.w2")), id_of("click.b2")));
    fwd.zhat.push_back(zhat);

    const NodeId attn_in =
        hp.attention_click_only ? zhat : g.concat({r, c_t, zhat});
    const NodeId v =
        g.tanh(g.add(g.matmul(attn_in, id_of("attn.w")), id_of("attn.b")));
    v_nodes.push_back(v);

    // score_t = v_t . u
    score_nodes.push_back(g.matmul(v, id_of("attn.u")));
  }

  const NodeId scores = g.concat(score_nodes);
  fwd.attention = g.masked_softmax(scores, fwd.step_mask);

  NodeId h_seq = -1;
  for (Index t = 0; t < T; ++t) {
    const NodeId weighted = g.mul(v_nodes[t], g.slice_cols(fwd.attention, t, 1));
    h_seq = (t == 0) ? weighted : g.add(h_seq, weighted);
  }
  fwd.yhat =
      g.sigmoid(g.add(g.matmul(h_seq, id_of("conv.w")), id_of("conv.b")));
  return fwd;
}

LossNodes loss(Graph& g, const ForwardNodes& fwd,
               const std::vector<Journey>& batch, const Hyperparams& hp) {
  const Index B = fwd.batch;
  const Index T = fwd.steps;
  if (static_cast<Index>(batch.size()) != B)
    throw std::invalid_argument("loss: batch size mismatch");

  NodeId step_acc = -1;   // sum_t (L_tz + L_tc), [B,1]
  NodeId click_acc = -1;  // for reporting
  NodeId chan_acc = -1;
  for (Index t = 0; t < T; ++t) {
    Tensor onehot = Tensor::zeros(B, hp.num_channels);
    Tensor z_label = Tensor::zeros(B, 1);
    Tensor mask_col = Tensor::zeros(B, 1);
    for (Index b = 0; b < B; ++b) {
      if (t < static_cast<Index>(batch[b].touchpoints.size())) {
        onehot.at(b, batch[b].touchpoints[t].channel) = 1.0;
        z_label.at(b, 0) = batch[b].touchpoints[t].click;
        mask_col.at(b, 0) = 1.0;
      }
    }
    // padded rows have an all-zero one-hot, so their channel loss is 0
    const NodeId l_c = g.categorical_cross_entropy(fwd.propensity[t], onehot);
    const NodeId l_z =
        g.mul(g.binary_cross_entropy(fwd.zhat[t], z_label), g.input(mask_col));
    const NodeId both = g.add(l_z, l_c);
    step_acc = (t == 0) ? both : g.add(step_acc, both);
    click_acc = (t == 0) ? l_z : g.add(click_acc, l_z);
    chan_acc = (t == 0) ? l_c : g.add(chan_acc, l_c);
  }

  Tensor y_label = Tensor::zeros(B, 1);
  for (Index b = 0; b < B; ++b) y_label.at(b, 0) = batch[b].conversion;
  const NodeId l_y = g.binary_cross_entropy(fwd.yhat, y_label);

  const double inv_b = 1.0 / static_cast<double>(B);
  const NodeId mean_steps = g.scalar_mul(g.sum(step_acc), inv_b);
  const NodeId mean_y = g.scalar_mul(g.sum(l_y), inv_b * hp.beta);
  LossNodes out;
  out.total = g.add(mean_steps, mean_y);
  out.channel_sum = chan_acc;
  out.click_sum = click_acc;
  out.conv = l_y;

  out.l_c = g.value(g.sum(chan_acc)).data[0] * inv_b;
  out.l_z = g.value(g.sum(click_acc)).data[0] * inv_b;
  out.l_y = g.value(g.sum(l_y)).data[0] * inv_b;
  out.l_r = out.l_z - hp.lambda * out.l_c;
  if (!std::isfinite(out.l_c)) throw std::runtime_error("loss: L_c not finite");
  if (!std::isfinite(out.l_z)) throw std::runtime_error("loss: L_z not finite");
  if (!std::isfinite(out.l_y)) throw std::runtime_error("loss: L_y not finite");
  return out;
}

std::vector<AttributionResult> extract_results(
    const Graph& g, const ForwardNodes& fwd, const std::vector<Journey>& batch) {
  std::vector<AttributionResult> out(batch.size());
  const Tensor& attn = g.value(fwd.attention);
  const Tensor& yhat = g.value(fwd.yhat);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Index len = static_cast<Index>(batch[b].touchpoints.size());
    AttributionResult& r = out[b];
    r.conversion_prob = yhat.at(static_cast<Index>(b), 0);
    for (Index t = 0; t < len; ++t) {
      r.attention.push_back(attn.at(static_cast<Index>(b), t));
      r.click_prob.push_back(g.value(fwd.zhat[t]).at(static_cast<Index>(b), 0));
      const Tensor& prop = g.value(fwd.propensity[t]);
      std::vector<double> row;
      for (Index k = 0; k < prop.cols(); ++k)
        row.push_back(prop.at(static_cast<Index>(b), k));
      r.channel_propensity.push_back(std::move(row));
    }
  }
  return out;
}

AttributionResult attribute(const CamtaParams& params, const Hyperparams& hp,
                            const Journey& journey) {
  Graph g;
  const std::vector<Journey> batch{journey};
  ForwardNodes fwd = forward(g, params, hp, batch, Mode::kEval, 0);
  return extract_results(g, fwd, batch)[0];
}

std::vector<AttributionResult> predict(const CamtaParams& params,
                                       const Hyperparams& hp,
                                       const std::vector<Journey>& journeys,
                                       Index batch_size) {
  std::vector<AttributionResult> out;
  out.reserve(journeys.size());
  for (std::size_t start = 0; start < journeys.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(journeys.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<Journey> batch(journeys.begin() + start,
                                     journeys.begin() + end);
    Graph g;
    ForwardNodes fwd = forward(g, params, hp, batch, Mode::kEval, 0);
    auto results = extract_results(g, fwd, batch);
    for (auto& r : results) out.push_back(std::move(r));
  }
  return out;
}

void save_attributions(const std::string& path,
                       const std::vector<AttributionResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_attributions: cannot open " + path);
  for (const auto& r : results) {
    json rec{{"format_version", 1},
             {"attention", r.attention},
             {"click_prob", r.click_prob},
             {"channel_propensity", r.channel_propensity},
             {"conversion_prob", r.conversion_prob}};
    out << rec.dump() << "\n";
  }
}

std::vector<AttributionResult> load_attributions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_attributions: cannot open " + path);
  std::vector<AttributionResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    if (rec.at("format_version").get<int>() != 1)
      throw std::runtime_error("attribution file: unsupported format_version");
    AttributionResult r;
    r.attention = rec.at("attention").get<std::vector<double>>();
    r.click_prob = rec.at("click_prob").get<std::vector<double>>();
    r.channel_propensity =
        rec.at("channel_propensity").get<std::vector<std::vector<double>>>();
    r.conversion_prob = rec.at("conversion_prob").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

// --- checkpoint -------------------------------------------------------------

void save_checkpoint(const std::string& path, const CamtaParams& params,
                     const Hyperparams& hp, std::uint64_t vocab_hash) {
  json header{{"format_version", 1},
              {"vocab_hash", vocab_hash},
              {"hyperparams",
               {{"embedding_size", hp.embedding_size},
                {"hidden_size", hp.hidden_size},
                {"repr_size", hp.repr_size},
                {"head_hidden", hp.head_hidden},
                {"dropout", hp.dropout},
                {"lambda", hp.lambda},
                {"beta", hp.beta},
                {"num_channels", hp.num_channels},
                {"max_len", hp.max_len},
                {"cardinalities", hp.cardinalities},
                {"linear_phi", hp.linear_phi},
                {"attention_click_only", hp.attention_click_only}}}};
  json shapes = json::array();
  for (const auto& [name, tensor] : params.named())
    shapes.push_back({{"name", name}, {"shape", tensor->shape}});
  header["params"] = std::move(shapes);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "CAMTA-CKPT\n" << header.dump() << "\n";
  for (const auto& [name, tensor] : params.named()) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(tensor->data.data()),
              tensor->numel() * 8);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != "CAMTA-CKPT")
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::getline(in, header_line);
  const json header = json::parse(header_line);
  if (header.at("format_version").get<int>() != 1)
    throw std::runtime_error("load_checkpoint: unsupported format_version");

  Checkpoint ckpt;
  const json& h = header.at("hyperparams");
  Hyperparams& hp = ckpt.hp;
  hp.embedding_size = h.at("embedding_size").get<Index>();
  hp.hidden_size = h.at("hidden_size").get<Index>();
  hp.repr_size = h.at("repr_size").get<Index>();
  hp.head_hidden = h.at("head_hidden").get<Index>();
  hp.dropout = h.at("dropout").get<double>();
  hp.lambda = h.at("lambda").get<double>();
  hp.beta = h.at("beta").get<double>();
  hp.num_channels = h.at("num_channels").get<Index>();
  hp.max_len = h.at("max_len").get<Index>();
  hp.cardinalities = h.at("cardinalities").get<std::vector<Index>>();
  hp.linear_phi = h.at("linear_phi").get<bool>();
  hp.attention_click_only = h.at("attention_click_only").get<bool>();
  ckpt.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();

  ckpt.params = init_params(hp, 0);  // allocate the right shapes
  auto named = ckpt.params.named();
  const json& shapes = header.at("params");
  if (shapes.size() != named.size())
    throw std::runtime_error("load_checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& entry = shapes[i];
    if (entry.at("name").get<std::string>() != named[i].first)
      throw std::runtime_error("load_checkpoint: parameter order mismatch at " +
                               named[i].first);
    const auto shape = entry.at("shape").get<std::vector<Index>>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()), t.numel() * 8);
    if (!in)
      throw std::runtime_error("load_checkpoint: truncated data for " +
                               named[i].first);
    *named[i].second = std::move(t);
  }
  return ckpt;
}

}  // namespace camta
