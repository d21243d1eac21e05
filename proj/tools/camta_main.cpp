#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camta/baselines.hpp"
#include "camta/budget.hpp"
#include "camta/data.hpp"
#include "camta/eval.hpp"
#include "camta/gradcheck.hpp"
#include "camta/model.hpp"
#include "camta/segment.hpp"
#include "camta/synthetic.hpp"
#include "camta/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace camta;

namespace {

// Removes everything registered with add() unless release() is called, so a
// failed subcommand leaves no partial outputs behind.
class OutputGuard {
 public:
  void add(const std::string& path) { paths_.push_back(path); }
  void release() { paths_.clear(); }
  ~OutputGuard() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
};

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " +
                                  context);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/true);
  if (!doc.is_object()) throw std::invalid_argument("config: not a JSON object");
  check_keys(doc,
             {"seed", "synthetic", "columns", "channels", "num_random_channels",
              "vocab_size", "max_len", "split", "hyperparams", "train", "grid",
              "budget_value"},
             "top level");
  return doc;
}

std::uint64_t config_seed(const json& cfg) {
  return cfg.value("seed", std::uint64_t{1});
}

SyntheticConfig parse_synthetic(const json& cfg) {
  SyntheticConfig out;
  out.seed = config_seed(cfg);
  if (!cfg.contains("synthetic")) return out;
  const json& s = cfg.at("synthetic");
  check_keys(s,
             {"num_users", "num_channels", "covariate_cardinalities", "gamma",
              "channel_weights", "base_click_rate", "base_conversion_rate",
              "min_len", "max_len", "cost_scale", "seed"},
             "synthetic");
  out.num_users = s.value("num_users", out.num_users);
  out.num_channels = s.value("num_channels", out.num_channels);
  if (s.contains("covariate_cardinalities"))
    out.covariate_cardinalities =
        s.at("covariate_cardinalities").get<std::vector<Index>>();
  out.gamma = s.value("gamma", out.gamma);
  if (s.contains("channel_weights"))
    out.channel_weights = s.at("channel_weights").get<std::vector<double>>();
  out.base_click_rate = s.value("base_click_rate", out.base_click_rate);
  out.base_conversion_rate =
      s.value("base_conversion_rate", out.base_conversion_rate);
  out.min_len = s.value("min_len", out.min_len);
  out.max_len = s.value("max_len", out.max_len);
  out.cost_scale = s.value("cost_scale", out.cost_scale);
  out.seed = s.value("seed", out.seed);
  return out;
}

ColumnMap parse_columns(const json& cfg) {
  ColumnMap cm;
  cm.timestamp = "timestamp";
  cm.user_id = "user_id";
  cm.channel_id = "channel";
  cm.click = "click";
  cm.cost = "cost";
  cm.conversion_id = "conversion_id";
  if (!cfg.contains("columns")) return cm;
  const json& c = cfg.at("columns");
  check_keys(c,
             {"timestamp", "user_id", "channel_id", "click", "cost",
              "conversion_id", "covariates"},
             "columns");
  cm.timestamp = c.value("timestamp", cm.timestamp);
  cm.user_id = c.value("user_id", cm.user_id);
  cm.channel_id = c.value("channel_id", cm.channel_id);
  cm.click = c.value("click", cm.click);
  cm.cost = c.value("cost", cm.cost);
  cm.conversion_id = c.value("conversion_id", cm.conversion_id);
  if (c.contains("covariates"))
    cm.covariates = c.at("covariates").get<std::vector<std::string>>();
  return cm;
}

struct SplitFractions {
  double train = 0.6, validation = 0.2, test = 0.2;
};

SplitFractions parse_split(const json& cfg) {
  SplitFractions out;
  if (!cfg.contains("split")) return out;
  const json& s = cfg.at("split");
  check_keys(s, {"train", "validation", "test"}, "split");
  out.train = s.value("train", out.train);
  out.validation = s.value("validation", out.validation);
  out.test = s.value("test", out.test);
  return out;
}

Hyperparams parse_hyperparams(const json& cfg) {
  Hyperparams hp;
  hp.max_len = cfg.value("max_len", hp.max_len);
  if (!cfg.contains("hyperparams")) return hp;
  const json& h = cfg.at("hyperparams");
  check_keys(h,
             {"embedding_size", "hidden_size", "repr_size", "head_hidden",
              "dropout", "lambda", "beta"},
             "hyperparams");
  hp.embedding_size = h.value("embedding_size", hp.embedding_size);
  hp.hidden_size = h.value("hidden_size", hp.hidden_size);
  hp.repr_size = h.value("repr_size", hp.repr_size);
  hp.head_hidden = h.value("head_hidden", hp.head_hidden);
  hp.dropout = h.value("dropout", hp.dropout);
  hp.lambda = h.value("lambda", hp.lambda);
  hp.beta = h.value("beta", hp.beta);
  return hp;
}

TrainConfig parse_train(const json& cfg) {
  TrainConfig tc;
  tc.seed = config_seed(cfg);
  if (!cfg.contains("train")) return tc;
  const json& t = cfg.at("train");
  check_keys(t,
             {"learning_rate", "batch_size", "epochs", "adam_beta1",
              "adam_beta2", "adam_eps", "clip_norm", "seed"},
             "train");
  tc.learning_rate = t.value("learning_rate", tc.learning_rate);
  tc.batch_size = t.value("batch_size", tc.batch_size);
  tc.epochs = t.value("epochs", tc.epochs);
  tc.adam_beta1 = t.value("adam_beta1", tc.adam_beta1);
  tc.adam_beta2 = t.value("adam_beta2", tc.adam_beta2);
  tc.adam_eps = t.value("adam_eps", tc.adam_eps);
  tc.clip_norm = t.value("clip_norm", tc.clip_norm);
  tc.seed = t.value("seed", tc.seed);
  return tc;
}

Grid parse_grid(const json& cfg) {
  Grid grid;
  if (!cfg.contains("grid")) return grid;
  const json& g = cfg.at("grid");
  check_keys(g,
             {"learning_rate", "batch_size", "hidden_size", "repr_size",
              "mlp_embed_size", "dropout", "lambda_beta"},
             "grid");
  if (g.contains("learning_rate"))
    grid.learning_rate = g.at("learning_rate").get<std::vector<double>>();
  if (g.contains("batch_size"))
    grid.batch_size = g.at("batch_size").get<std::vector<Index>>();
  if (g.contains("hidden_size"))
    grid.hidden_size = g.at("hidden_size").get<std::vector<Index>>();
  if (g.contains("repr_size"))
    grid.repr_size = g.at("repr_size").get<std::vector<Index>>();
  if (g.contains("mlp_embed_size"))
    grid.mlp_embed_size = g.at("mlp_embed_size").get<std::vector<Index>>();
  if (g.contains("dropout"))
    grid.dropout = g.at("dropout").get<std::vector<double>>();
  if (g.contains("lambda_beta"))
    for (const auto& pair : g.at("lambda_beta"))
      grid.lambda_beta.emplace_back(pair.at(0).get<double>(),
                                    pair.at(1).get<double>());
  return grid;
}

// Derive K and per-field cardinalities from the journeys themselves when no
// vocabulary file is around (synthetic data).
void infer_dimensions(const std::vector<Journey>& journeys, Hyperparams& hp) {
  Index k = 0;
  std::vector<Index> card;
  for (const Journey& j : journeys)
    for (const Touchpoint& tp : j.touchpoints) {
      k = std::max(k, tp.channel + 1);
      if (card.size() < tp.covariates.size()) card.resize(tp.covariates.size(), 1);
      for (std::size_t f = 0; f < tp.covariates.size(); ++f)
        card[f] = std::max(card[f], tp.covariates[f] + 1);
    }
  hp.num_channels = k;
  hp.cardinalities = card;
}

// A --data argument is either a journey file or a directory holding one of
// the named files (first match wins).
std::string resolve_data(const std::string& path,
                         const std::vector<std::string>& names) {
  if (!fs::is_directory(path)) return path;
  for (const auto& n : names) {
    const fs::path candidate = fs::path(path) / n;
    if (fs::exists(candidate)) return candidate.string();
  }
  throw std::runtime_error("data: no journey file found under " + path);
}

void write_split(const std::string& dir, const Split& split, OutputGuard& guard) {
  const std::string train_p = (fs::path(dir) / "train.jsonl").string();
  const std::string val_p = (fs::path(dir) / "validation.jsonl").string();
  const std::string test_p = (fs::path(dir) / "test.jsonl").string();
  guard.add(train_p);
  guard.add(val_p);
  guard.add(test_p);
  save_journeys(train_p, split.train);
  save_journeys(val_p, split.validation);
  save_journeys(test_p, split.test);
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const json cfg = load_config(config_path);
  const SyntheticConfig scfg = parse_synthetic(cfg);
  const SplitFractions frac = parse_split(cfg);
  const SyntheticDataset ds = generate_synthetic(scfg);

  fs::create_directories(out_dir);
  OutputGuard guard;
  const std::string journeys_p = (fs::path(out_dir) / "journeys.jsonl").string();
  const std::string truth_p = (fs::path(out_dir) / "ground_truth.json").string();
  guard.add(journeys_p);
  guard.add(truth_p);
  save_journeys(journeys_p, ds.journeys);
  save_ground_truth(truth_p, ds.truth);
  const Split split = split_journeys(ds.journeys, frac.train, frac.validation,
                                     frac.test, config_seed(cfg));
  write_split(out_dir, split, guard);
  guard.release();
  std::cout << "synth: " << ds.journeys.size() << " journeys ("
            << split.train.size() << "/" << split.validation.size() << "/"
            << split.test.size() << " split) -> " << out_dir << "\n";
  return 0;
}

int cmd_ingest(const std::string& log_path, const std::string& config_path,
               const std::string& out_dir) {
  const json cfg = load_config(config_path);
  const ColumnMap columns = parse_columns(cfg);
  const SplitFractions frac = parse_split(cfg);
  const std::uint64_t seed = config_seed(cfg);

  const IngestResult ingested = ingest_log(log_path, columns);
  std::vector<std::string> channels;
  if (cfg.contains("channels")) {
    channels = cfg.at("channels").get<std::vector<std::string>>();
  } else {
    const std::size_t want = cfg.value("num_random_channels", std::size_t{10});
    channels = select_random_channels(ingested.impressions, want, seed);
  }
  const std::size_t max_len = cfg.value("max_len", std::size_t{20});
  const auto raw = build_journeys(ingested.impressions, channels, max_len);
  const VocabMap vocab =
      build_vocab(raw, channels, cfg.value("vocab_size", std::size_t{100}));
  const auto journeys = encode(raw, vocab);
  if (journeys.empty()) throw std::runtime_error("ingest: no journeys survived");

  fs::create_directories(out_dir);
  OutputGuard guard;
  const std::string journeys_p = (fs::path(out_dir) / "journeys.jsonl").string();
  const std::string vocab_p = (fs::path(out_dir) / "vocab.json").string();
  guard.add(journeys_p);
  guard.add(vocab_p);
  save_journeys(journeys_p, journeys);
  save_vocab(vocab_p, vocab);
  const Split split =
      split_journeys(journeys, frac.train, frac.validation, frac.test, seed);
  write_split(out_dir, split, guard);
  guard.release();
  std::cout << "ingest: " << journeys.size() << " journeys, "
            << ingested.malformed_rows << " malformed rows skipped -> "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir) {
  const json cfg = load_config(config_path);
  Hyperparams hp = parse_hyperparams(cfg);
  const TrainConfig tc = parse_train(cfg);
  const SplitFractions frac = parse_split(cfg);

  std::vector<Journey> train_set, val_set;
  const fs::path train_file = fs::path(data_dir) / "train.jsonl";
  if (fs::is_directory(data_dir) && fs::exists(train_file)) {
    train_set = load_journeys(train_file.string());
    val_set = load_journeys((fs::path(data_dir) / "validation.jsonl").string());
  } else {
    const auto all = load_journeys(resolve_data(data_dir, {"journeys.jsonl"}));
    const Split split = split_journeys(all, frac.train, frac.validation,
                                       frac.test, config_seed(cfg));
    train_set = split.train;
    val_set = split.validation;
  }

  std::uint64_t vocab_hash = 0;
  const fs::path vocab_file = fs::path(data_dir) / "vocab.json";
  if (fs::is_directory(data_dir) && fs::exists(vocab_file)) {
    const VocabMap vocab = load_vocab(vocab_file.string());
    hp.num_channels = vocab.num_channels();
    hp.cardinalities = vocab.cardinalities();
    vocab_hash = vocab.hash();
  } else {
    std::vector<Journey> all = train_set;
    all.insert(all.end(), val_set.begin(), val_set.end());
    infer_dimensions(all, hp);
  }

  fs::create_directories(out_dir);
  OutputGuard guard;
  const std::string ckpt_p = (fs::path(out_dir) / "checkpoint.ckpt").string();
  const std::string hist_p = (fs::path(out_dir) / "history.json").string();
  guard.add(ckpt_p);
  guard.add(hist_p);

  const Grid grid = parse_grid(cfg);
  const bool has_grid = cfg.contains("grid");
  if (has_grid) {
    std::vector<TrainResult> results;
    const GridResult gr =
        grid_search(train_set, val_set, hp, tc, grid, &results);
    const GridEntry& best = gr.leaderboard[gr.best];
    save_checkpoint(ckpt_p, results[gr.best].params, best.hp, vocab_hash);
    save_history(hist_p, results[gr.best].history, best.hp, best.cfg);
    json board = json::array();
    for (const auto& e : gr.leaderboard)
      board.push_back({{"learning_rate", e.cfg.learning_rate},
                       {"batch_size", e.cfg.batch_size},
                       {"hidden_size", e.hp.hidden_size},
                       {"repr_size", e.hp.repr_size},
                       {"mlp_embed_size", e.hp.head_hidden},
                       {"dropout", e.hp.dropout},
                       {"lambda", e.hp.lambda},
                       {"beta", e.hp.beta},
                       {"val_total", e.val_total},
                       {"val_auc", e.val_auc},
                       {"failed", e.failed},
                       {"error", e.error}});
    const std::string grid_p = (fs::path(out_dir) / "grid.json").string();
    guard.add(grid_p);
    std::ofstream out(grid_p);
    out << json{{"format_version", 1},
                {"best", gr.best},
                {"leaderboard", std::move(board)}}
               .dump(2)
        << "\n";
    guard.release();
    std::cout << "train: grid of " << gr.leaderboard.size()
              << " points, best val objective " << best.val_total << " -> "
              << out_dir << "\n";
    return 0;
  }

  const TrainResult r = train(train_set, val_set, hp, tc);
  save_checkpoint(ckpt_p, r.params, hp, vocab_hash);
  save_history(hist_p, r.history, hp, tc);
  guard.release();
  const EpochRecord& best = r.history.epochs[r.history.best_epoch];
  std::cout << "train: " << r.history.epochs.size() << " epochs, best epoch "
            << r.history.best_epoch << " (val objective " << best.val_total
            << ", val AUC " << best.val_auc << ") -> " << out_dir << "\n";
  return 0;
}

std::string resolve_model(const std::string& path) {
  if (fs::is_directory(path))
    return (fs::path(path) / "checkpoint.ckpt").string();
  return path;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
  const Checkpoint ck = load_checkpoint(resolve_model(model_path));
  const auto journeys =
      load_journeys(resolve_data(data_path, {"test.jsonl", "journeys.jsonl"}));
  if (journeys.empty()) throw std::runtime_error("eval: empty journey set");
  const auto results = predict(ck.params, ck.hp, journeys);

  MetricReport rep;
  std::vector<double> conv_pred, click_pred;
  std::vector<int> conv_label, click_label, click_mask;
  for (std::size_t i = 0; i < journeys.size(); ++i) {
    conv_pred.push_back(results[i].conversion_prob);
    conv_label.push_back(journeys[i].conversion);
    for (std::size_t t = 0; t < journeys[i].touchpoints.size(); ++t) {
      click_pred.push_back(results[i].click_prob[t]);
      click_label.push_back(journeys[i].touchpoints[t].click);
      click_mask.push_back(1);
      ++rep.touchpoints;
      rep.clicks += journeys[i].touchpoints[t].click;
    }
    ++rep.journeys;
    rep.conversions += journeys[i].conversion;
  }
  rep.ll_conv = log_loss_conv(conv_pred, conv_label);
  rep.ll_click = log_loss_click(click_pred, click_label, click_mask);
  rep.auc = (rep.conversions == 0 || rep.conversions == rep.journeys)
                ? 0.5
                : auc(conv_pred, conv_label);

  OutputGuard guard;
  guard.add(out_path);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("eval: cannot open " + out_path);
  out << json{{"format_version", 1},
              {"ll_conv", rep.ll_conv},
              {"ll_click", rep.ll_click},
              {"auc", rep.auc},
              {"journeys", rep.journeys},
              {"touchpoints", rep.touchpoints},
              {"conversions", rep.conversions},
              {"clicks", rep.clicks}}
             .dump(2)
      << "\n";
  guard.release();
  std::cout << "eval: " << rep.journeys << " journeys, AUC " << rep.auc
            << ", LL_conv " << rep.ll_conv << ", LL_click " << rep.ll_click
            << " -> " << out_path << "\n";
  return 0;
}

int cmd_attribute(const std::string& model_path, const std::string& data_path,
                  const std::string& baseline, const std::string& out_path) {
  const auto journeys =
      load_journeys(resolve_data(data_path, {"test.jsonl", "journeys.jsonl"}));
  if (journeys.empty()) throw std::runtime_error("attribute: empty journey set");

  std::vector<AttributionResult> results;
  if (!baseline.empty()) {
    Index k = 0;
    for (const Journey& j : journeys)
      for (const Touchpoint& tp : j.touchpoints) k = std::max(k, tp.channel + 1);
    results = baseline_attributions(journeys, baseline, k);
  } else {
    if (model_path.empty())
      throw std::invalid_argument("attribute: need --model or --baseline");
    const Checkpoint ck = load_checkpoint(resolve_model(model_path));
    results = predict(ck.params, ck.hp, journeys);
  }

  OutputGuard guard;
  guard.add(out_path);
  save_attributions(out_path, results);
  guard.release();
  std::cout << "attribute: " << results.size() << " journeys ("
            << (baseline.empty() ? "model" : baseline) << ") -> " << out_path
            << "\n";
  return 0;
}

int cmd_budget(const std::string& attrib_path, const std::string& data_path,
               const std::string& fractions_arg, double cost_scale,
               double value, const std::string& out_path) {
  const auto journeys =
      load_journeys(resolve_data(data_path, {"test.jsonl", "journeys.jsonl"}));
  const auto attributions = load_attributions(attrib_path);
  if (attributions.size() != journeys.size())
    throw std::invalid_argument("budget: attribution/journey count mismatch");

  std::vector<double> fractions;
  std::stringstream ss(fractions_arg);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) fractions.push_back(std::stod(tok));
  if (fractions.empty())
    throw std::invalid_argument("budget: no fractions given");

  Index k = 0;
  for (const Journey& j : journeys)
    for (const Touchpoint& tp : j.touchpoints) k = std::max(k, tp.channel + 1);

  const auto reports =
      budget_sweep(journeys, attributions, k, fractions, cost_scale, value);
  OutputGuard guard;
  guard.add(out_path);
  save_budget_reports(out_path, reports);
  guard.release();
  std::cout << "budget: fraction  CPA        CVR        conversions\n";
  for (const auto& r : reports) {
    std::printf("budget: %-8.2f  %-9.4f  %-9.4f  %zu\n", r.budget_fraction,
                r.cpa_defined ? r.cpa : 0.0, r.cvr, r.true_conversions);
  }
  std::cout << "budget: report -> " << out_path << "\n";
  return 0;
}

int cmd_segment(const std::string& attrib_path, const std::string& data_path,
                std::uint64_t seed, const std::string& out_path) {
  const auto journeys =
      load_journeys(resolve_data(data_path, {"test.jsonl", "journeys.jsonl"}));
  const auto attributions = load_attributions(attrib_path);
  if (attributions.size() != journeys.size())
    throw std::invalid_argument("segment: attribution/journey count mismatch");

  UserReturns returns = user_returns(journeys, attributions);
  std::vector<double> values;
  for (const auto& u : returns.users) values.push_back(u.mean_return);
  const Clustering clustering = cluster_values(values, 3, seed);
  for (std::size_t i = 0; i < returns.users.size(); ++i)
    returns.users[i].group = clustering.labels[i];

  Index k = 0;
  for (const Journey& j : journeys)
    for (const Touchpoint& tp : j.touchpoints) k = std::max(k, tp.channel + 1);
  const auto affinity = channel_affinity_stats(returns, journeys, attributions, k);
  OutputGuard guard;
  guard.add(out_path);
  save_segment_report(out_path, returns, clustering.centroids, affinity);
  guard.release();
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& u : returns.users) ++counts[u.group];
  std::cout << "segment: " << returns.users.size() << " users (low " << counts[0]
            << ", medium " << counts[1] << ", high " << counts[2] << ", excluded "
            << returns.excluded.size() << ") -> " << out_path << "\n";
  return 0;
}

// Full-model finite-difference check. The adversarial reversal makes the
// reported gradient the gradient of a *shifted* objective: channel-head
// parameters see +dL_c while everything upstream of the reversal sees
// -lambda*dL_c. The scalar checked here is exactly that objective,
//   F = L_z + beta*L_y + L_c  -  (1+lambda)*L_c(channel head pinned),
// whose true derivative matches the backward pass for every parameter.
double full_model_gradcheck(double lambda, double beta, std::uint64_t seed) {
  Hyperparams hp;
  hp.embedding_size = 3;
  hp.hidden_size = 4;
  hp.repr_size = 3;
  hp.head_hidden = 4;
  hp.dropout = 0.0;
  hp.lambda = lambda;
  hp.beta = beta;
  hp.num_channels = 3;
  hp.max_len = 5;
  hp.cardinalities = {4, 3};

  SyntheticConfig scfg;
  scfg.num_users = 2;
  scfg.num_channels = 3;
  scfg.channel_weights = {2.0, 1.0, 1.0};
  scfg.covariate_cardinalities = {3, 2};
  scfg.min_len = 2;
  scfg.max_len = 4;
  scfg.seed = seed;
  const SyntheticDataset ds = generate_synthetic(scfg);

  CamtaParams base = init_params(hp, seed);
  std::vector<Tensor> flat;
  for (auto& [name, t] : base.named()) flat.push_back(*t);
  const CamtaParams pinned = base;  // channel head frozen at the base point

  const auto rebuild = [&](const std::vector<Tensor>& vec) {
    CamtaParams p = base;
    std::size_t i = 0;
    for (auto& [name, t] : p.named()) *t = vec[i++];
    return p;
  };

  const ScalarFn f = [&](const std::vector<Tensor>& vec,
                         std::vector<Tensor>* grads) {
    const CamtaParams p = rebuild(vec);
    Graph g;
    ForwardNodes fwd = forward(g, p, hp, ds.journeys, Mode::kEval, 0);
    LossNodes ln = loss(g, fwd, ds.journeys, hp);
    if (grads) {
      g.backward(ln.total);
      grads->clear();
      for (NodeId id : fwd.param_ids) grads->push_back(g.grad(id));
    }
    double value = ln.l_z + hp.beta * ln.l_y + ln.l_c;

    CamtaParams q = p;
    q.chan_w1 = pinned.chan_w1;
    q.chan_b1 = pinned.chan_b1;
    q.chan_w2 = pinned.chan_w2;
    q.chan_b2 = pinned.chan_b2;
    Graph g2;
    ForwardNodes fwd2 = forward(g2, q, hp, ds.journeys, Mode::kEval, 0);
    LossNodes ln2 = loss(g2, fwd2, ds.journeys, hp);
    value -= (1.0 + hp.lambda) * ln2.l_c;
    return value;
  };

  return grad_check(f, flat, 1e-5);
}

int cmd_gradcheck() {
  double worst = 0.0;
  for (double lambda : {1.0, 5.0}) {
    const double err = full_model_gradcheck(lambda, 5.0, 3);
    std::cout << "gradcheck: lambda=" << lambda << " max relative error " << err
              << "\n";
    worst = std::max(worst, err);
  }
  if (worst >= 1e-4) {
    std::cerr << "gradcheck: FAILED, max relative error " << worst << "\n";
    return 1;
  }
  std::cout << "gradcheck: OK, max relative error " << worst << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camta: causal attention multi-touch attribution pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_path, log_path, data_path, model_path;
  std::string baseline, fractions = "0.2,0.4,0.6,0.8,1.0";
  double cost_scale = 1000.0, value = 1.0;
  std::uint64_t segment_seed = 1;

  auto* synth = app.add_subcommand(
      "synth", "Generate the seeded confounded synthetic dataset");
  synth->add_option("--config", config_path,
                    "JSON run config (defaults apply when omitted)");
  synth
      ->add_option("--out", out_path,
                   "Output directory for journeys.jsonl, ground_truth.json and "
                   "the train/validation/test split")
      ->required();

  auto* ingest =
      app.add_subcommand("ingest", "Build journeys from an impression log");
  ingest->add_option("--log", log_path, "Delimited impression log (csv/tsv)")
      ->required();
  ingest->add_option("--config", config_path,
                     "JSON run config: column map, channel selection, vocab "
                     "size, split fractions, seed");
  ingest
      ->add_option("--out", out_path,
                   "Output directory for journeys.jsonl, vocab.json and the "
                   "train/validation/test split")
      ->required();

  auto* train_cmd = app.add_subcommand("train", "Train the attribution model");
  train_cmd
      ->add_option("--data", data_path,
                   "Data directory (train/validation split) or journey file")
      ->required();
  train_cmd->add_option(
      "--config", config_path,
      "JSON run config: hyperparameters, training config, optional grid");
  train_cmd
      ->add_option("--out", out_path,
                   "Output directory for checkpoint.ckpt, history.json and "
                   "(with a grid) grid.json")
      ->required();

  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on a journey set");
  eval_cmd->add_option("--model", model_path, "Checkpoint file or directory")
      ->required();
  eval_cmd
      ->add_option("--data", data_path,
                   "Journey file or data directory (test split preferred)")
      ->required();
  eval_cmd->add_option("--out", out_path, "Metric report (JSON)")->required();

  auto* attr_cmd = app.add_subcommand(
      "attribute", "Write per-journey attributions for a journey set");
  attr_cmd->add_option("--model", model_path, "Checkpoint file or directory");
  attr_cmd
      ->add_option("--data", data_path,
                   "Journey file or data directory (test split preferred)")
      ->required();
  attr_cmd->add_option("--baseline", baseline,
                       "Baseline method instead of the model: first, last, "
                       "linear or lr");
  attr_cmd->add_option("--out", out_path, "Attribution file (JSONL)")
      ->required();

  auto* budget_cmd = app.add_subcommand(
      "budget", "Replay a budget sweep against attributions");
  budget_cmd->add_option("--attrib", log_path, "Attribution file")->required();
  budget_cmd
      ->add_option("--data", data_path,
                   "Journey file or data directory (test split preferred)")
      ->required();
  budget_cmd->add_option("--fractions", fractions,
                         "Comma-separated budget fractions of the total scaled "
                         "cost (default 0.2,0.4,0.6,0.8,1.0)");
  budget_cmd->add_option("--cost-scale", cost_scale,
                         "Multiplier applied to every cost (default 1000)");
  budget_cmd->add_option("--value", value,
                         "Conversion value V in the ROI numerator (default 1)");
  budget_cmd->add_option("--out", out_path, "Budget report (JSON)")->required();

  auto* segment_cmd = app.add_subcommand(
      "segment", "Segment users into low/medium/high return groups");
  segment_cmd->add_option("--attrib", log_path, "Attribution file")->required();
  segment_cmd
      ->add_option("--data", data_path,
                   "Journey file or data directory (test split preferred)")
      ->required();
  segment_cmd->add_option("--seed", segment_seed,
                          "Clustering seed (default 1)");
  segment_cmd->add_option("--out", out_path, "Segment report (JSON)")
      ->required();

  app.add_subcommand("gradcheck",
                     "Finite-difference check of the full model gradient");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_path);
    if (ingest->parsed()) return cmd_ingest(log_path, config_path, out_path);
    if (train_cmd->parsed())
      return cmd_train(data_path, config_path, out_path);
    if (eval_cmd->parsed()) return cmd_eval(model_path, data_path, out_path);
    if (attr_cmd->parsed())
      return cmd_attribute(model_path, data_path, baseline, out_path);
    if (budget_cmd->parsed())
      return cmd_budget(log_path, data_path, fractions, cost_scale, value,
                        out_path);
    if (segment_cmd->parsed())
      return cmd_segment(log_path, data_path, segment_seed, out_path);
    return cmd_gradcheck();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
