// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
// process exits nonzero if any criterion fails. argv[1] is the path to the
// command-line binary (used by the pipeline reproducibility criterion).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "camta/baselines.hpp"
#include "camta/budget.hpp"
#include "camta/data.hpp"
#include "camta/eval.hpp"
#include "camta/gradcheck.hpp"
#include "camta/graph.hpp"
#include "camta/model.hpp"
#include "camta/rng.hpp"
#include "camta/synthetic.hpp"
#include "camta/train.hpp"

namespace fs = std::filesystem;
using namespace camta;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": "
            << name << " (" << detail << ")" << std::endl;
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

Hyperparams tiny_hp(double lambda) {
  Hyperparams hp;
  hp.embedding_size = 3;
  hp.hidden_size = 4;
  hp.repr_size = 3;
  hp.head_hidden = 4;
  hp.dropout = 0.0;
  hp.lambda = lambda;
  hp.beta = 5.0;
  hp.num_channels = 3;
  hp.max_len = 5;
  hp.cardinalities = {4, 3};
  return hp;
}

std::vector<Journey> tiny_batch(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.num_users = 2;
  cfg.num_channels = 3;
  cfg.channel_weights = {2.0, 1.0, 1.0};
  cfg.covariate_cardinalities = {3, 2};
  cfg.min_len = 2;
  cfg.max_len = 4;
  cfg.seed = seed;
  return generate_synthetic(cfg).journeys;
}

// 1. Full-model gradient against central finite differences. The adversarial
// reversal reports the gradient of a shifted objective (channel head +dL_c,
// shared trunk -lambda*dL_c); the checked scalar is exactly that objective,
// with the channel head pinned in the subtracted term.
void criterion_gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  const Hyperparams hp = tiny_hp(5.0);
  const std::vector<Journey> batch = tiny_batch(3);

  CamtaParams base = init_params(hp, 3);
  std::vector<Tensor> flat;
  for (auto& [name, t] : base.named()) flat.push_back(*t);
  const CamtaParams pinned = base;

  const ScalarFn f = [&](const std::vector<Tensor>& vec,
                         std::vector<Tensor>* grads) {
    CamtaParams p = base;
    std::size_t i = 0;
    for (auto& [name, t] : p.named()) *t = vec[i++];
    Graph g;
    ForwardNodes fwd = forward(g, p, hp, batch, Mode::kEval, 0);
    LossNodes ln = loss(g, fwd, batch, hp);
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
    ForwardNodes fwd2 = forward(g2, q, hp, batch, Mode::kEval, 0);
    LossNodes ln2 = loss(g2, fwd2, batch, hp);
    return value - (1.0 + hp.lambda) * ln2.l_c;
  };

  const double err = grad_check(f, flat, 1e-5);
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << "max relative error " << err << ", " << secs << " s";
  report(1, "gradient fidelity", err < 1e-4 && secs < 30.0, detail.str());
}

// 2. Adversarial routing, exact: on a hand-built two-layer network the
// reversal leaves the head gradient untouched and multiplies the trunk
// gradient by -lambda, bit-for-bit against a reversal-free twin graph; on the
// full model the trunk gradient of the channel loss is linear in lambda.
void criterion_adversarial_routing() {
  double worst = 0.0;

  for (double lambda : {1.0, 5.0}) {
    Rng rng(11);
    Tensor x = Tensor::zeros(4, 3);
    Tensor w1 = Tensor::zeros(3, 5);
    Tensor w2 = Tensor::zeros(5, 3);
    Tensor onehot = Tensor::zeros(4, 3);
    for (Index i = 0; i < x.numel(); ++i) x.data[i] = rng.normal();
    for (Index i = 0; i < w1.numel(); ++i) w1.data[i] = 0.3 * rng.normal();
    for (Index i = 0; i < w2.numel(); ++i) w2.data[i] = 0.3 * rng.normal();
    for (Index r = 0; r < 4; ++r)
      onehot.at(r, static_cast<Index>(rng.uniform_int(3))) = 1.0;
    Tensor ones = Tensor::zeros(4, 3);
    ones.data.setOnes();

    const auto run = [&](bool reversed, Tensor* gw1, Tensor* gw2) {
      Graph g;
      const NodeId xi = g.input(x);
      const NodeId p1 = g.param(w1);
      const NodeId p2 = g.param(w2);
      NodeId r = g.tanh(g.matmul(xi, p1));
      if (reversed) r = g.grad_reverse(r, lambda);
      const NodeId probs = g.masked_softmax(g.matmul(r, p2), ones);
      const NodeId lc = g.sum(g.categorical_cross_entropy(probs, onehot));
      g.backward(lc);
      *gw1 = g.grad(p1);
      *gw2 = g.grad(p2);
    };
    Tensor rev_w1, rev_w2, ref_w1, ref_w2;
    run(true, &rev_w1, &rev_w2);
    run(false, &ref_w1, &ref_w2);
    for (Index i = 0; i < rev_w2.numel(); ++i)
      worst = std::max(worst, std::abs(rev_w2.data[i] - ref_w2.data[i]));
    for (Index i = 0; i < rev_w1.numel(); ++i)
      worst = std::max(worst,
                       std::abs(rev_w1.data[i] + lambda * ref_w1.data[i]));
  }

  // full model: d(mean L_c)/d phi_w scales linearly in lambda, head grad not
  const std::vector<Journey> batch = tiny_batch(5);
  const auto channel_grads = [&](double lambda, Tensor* phi_g, Tensor* head_g) {
    const Hyperparams hp = tiny_hp(lambda);
    const CamtaParams params = init_params(hp, 7);  // same values, any lambda
    Graph g;
    ForwardNodes fwd = forward(g, params, hp, batch, Mode::kEval, 0);
    LossNodes ln = loss(g, fwd, batch, hp);
    const NodeId scalar = g.scalar_mul(g.sum(ln.channel_sum),
                                       1.0 / static_cast<double>(batch.size()));
    g.backward(scalar);
    auto named = params.named();
    for (std::size_t i = 0; i < named.size(); ++i) {
      if (named[i].first == "phi.w") *phi_g = g.grad(fwd.param_ids[i]);
      if (named[i].first == "chan.w1") *head_g = g.grad(fwd.param_ids[i]);
    }
  };
  Tensor phi1, head1, phi5, head5;
  channel_grads(1.0, &phi1, &head1);
  channel_grads(5.0, &phi5, &head5);
  for (Index i = 0; i < phi1.numel(); ++i)
    worst = std::max(worst, std::abs(phi5.data[i] - 5.0 * phi1.data[i]));
  for (Index i = 0; i < head1.numel(); ++i)
    worst = std::max(worst, std::abs(head5.data[i] - head1.data[i]));

  std::ostringstream detail;
  detail << "max deviation " << worst;
  report(2, "adversarial routing", worst < 1e-10, detail.str());
}

// 3. Attention vectors: nonnegative, unit sum, zero on padding over 1,000
// random journeys of lengths 1-20.
void criterion_attention_normalization() {
  Hyperparams hp = tiny_hp(5.0);
  hp.max_len = 20;
  const CamtaParams params = init_params(hp, 13);
  Rng rng(17);

  double worst_sum = 0.0, worst_pad = 0.0;
  bool nonneg = true;
  std::size_t done = 0;
  while (done < 1000) {
    std::vector<Journey> batch;
    for (int b = 0; b < 50 && done + batch.size() < 1000; ++b) {
      Journey j;
      j.user_id = "u";
      const std::size_t len = 1 + rng.uniform_int(20);
      for (std::size_t t = 0; t < len; ++t) {
        Touchpoint tp;
        tp.covariates = {static_cast<Index>(rng.uniform_int(4)),
                         static_cast<Index>(rng.uniform_int(3))};
        tp.channel = static_cast<Index>(rng.uniform_int(3));
        tp.click = rng.bernoulli(0.3) ? 1 : 0;
        tp.cost = 1.0;
        tp.timestamp = static_cast<std::int64_t>(t);
        j.touchpoints.push_back(tp);
      }
      j.conversion = rng.bernoulli(0.3) ? 1 : 0;
      batch.push_back(std::move(j));
    }
    Graph g;
    ForwardNodes fwd = forward(g, params, hp, batch, Mode::kEval, 0);
    const Tensor& attn = g.value(fwd.attention);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Index len = static_cast<Index>(batch[b].touchpoints.size());
      double sum = 0.0;
      for (Index t = 0; t < attn.cols(); ++t) {
        const double a = attn.at(static_cast<Index>(b), t);
        if (t < len) {
          if (a < 0.0) nonneg = false;
          sum += a;
        } else {
          worst_pad = std::max(worst_pad, std::abs(a));
        }
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    done += batch.size();
  }
  std::ostringstream detail;
  detail << done << " journeys, worst |sum-1| " << worst_sum
         << ", worst padding weight " << worst_pad;
  report(3, "attention normalization",
         nonneg && worst_sum < 1e-8 && worst_pad == 0.0, detail.str());
}

struct TrainedModel {
  CamtaParams params;        // best-validation snapshot
  CamtaParams final_params;  // state after the last epoch
  Hyperparams hp;
  double final_val_auc = 0.0;
};

TrainedModel train_synthetic(const SyntheticDataset& ds, const Hyperparams& hp0,
                             const TrainConfig& cfg0, double lambda,
                             std::uint64_t seed) {
  Hyperparams hp = hp0;
  hp.lambda = lambda;
  hp.num_channels = 4;
  hp.max_len = 8;
  hp.cardinalities = {9, 9};
  TrainConfig cfg = cfg0;
  cfg.seed = seed;

  const Split split = split_journeys(ds.journeys, 0.6, 0.2, 0.2, seed);
  const TrainResult r = train(split.train, split.validation, hp, cfg);
  return {r.params, r.final_params, hp, r.history.epochs.back().val_auc};
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.embedding_size = 8;
  hp.hidden_size = 16;
  hp.repr_size = 8;
  hp.head_hidden = 16;
  return hp;
}

// 4. Recovery on the seeded confounded dataset at the default configuration:
// after the full training run, validation AUC > 0.8 and the heaviest mean
// attention lands on the genuinely strongest channel. Evaluated on the
// end-of-training state: the adversary-aware selection objective favors
// epochs where channel information is scrubbed from the representation, so
// the snapshot it picks has deliberately flattened attention.
void criterion_synthetic_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticDataset ds = generate_synthetic(SyntheticConfig{});
  const TrainedModel m =
      train_synthetic(ds, Hyperparams{}, TrainConfig{}, 5.0, 1);
  const double val_auc = m.final_val_auc;

  const Split split = split_journeys(ds.journeys, 0.6, 0.2, 0.2, 1);
  const auto results = predict(m.final_params, m.hp, split.validation);
  std::vector<double> mass(4, 0.0), count(4, 0.0);
  for (std::size_t i = 0; i < split.validation.size(); ++i) {
    if (!split.validation[i].conversion) continue;
    for (std::size_t t = 0; t < split.validation[i].touchpoints.size(); ++t) {
      const auto c =
          static_cast<std::size_t>(split.validation[i].touchpoints[t].channel);
      mass[c] += results[i].attention[t];
      count[c] += 1.0;
    }
  }
  std::vector<double> mean(4, 0.0);
  for (int k = 0; k < 4; ++k) mean[k] = count[k] > 0 ? mass[k] / count[k] : 0.0;
  const bool channel0_top =
      mean[0] > mean[1] && mean[0] > mean[2] && mean[0] > mean[3];
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << "val AUC " << val_auc << ", mean attention (" << mean[0] << ", "
         << mean[1] << ", " << mean[2] << ", " << mean[3] << "), " << secs
         << " s";
  report(4, "synthetic attribution recovery",
         val_auc > 0.8 && channel0_top && secs < 600.0, detail.str());
}

double share_mae(const SyntheticDataset& ds, const TrainedModel& m) {
  const auto results = predict(m.params, m.hp, ds.journeys);
  double err = 0.0, n = 0.0;
  for (std::size_t i = 0; i < ds.journeys.size(); ++i) {
    const auto truth = ground_truth_attribution(ds.truth, i);
    for (std::size_t t = 0; t < truth.size(); ++t) {
      err += std::abs(results[i].attention[t] - truth[t]);
      n += 1.0;
    }
  }
  return err / n;
}

// 5. Confounding ablation: attribution error against ground truth is lower
// with the adversarial term on (lambda=5) than off (lambda=0), mean over 3
// seeds.
void criterion_confounding_ablation() {
  double mae_on = 0.0, mae_off = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    SyntheticConfig cfg;
    cfg.num_users = 2000;
    cfg.seed = seed;
    const SyntheticDataset ds = generate_synthetic(cfg);
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.epochs = 20;
    const TrainedModel on = train_synthetic(ds, small_hp(), tc, 5.0, seed);
    const TrainedModel off = train_synthetic(ds, small_hp(), tc, 0.0, seed);
    const double e_on = share_mae(ds, on);
    const double e_off = share_mae(ds, off);
    per_seed << " seed" << seed << " " << e_on << "/" << e_off;
    mae_on += e_on / 3.0;
    mae_off += e_off / 3.0;
  }
  std::ostringstream detail;
  detail << "MAE lambda=5 " << mae_on << " vs lambda=0 " << mae_off << ","
         << per_seed.str();
  report(5, "confounding ablation", mae_on < mae_off, detail.str());
}

// 6. Rank-based AUC equals brute-force pairwise counting exactly.
void criterion_auc_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(23);
  bool all_equal = true;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + rng.uniform_int(49);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back(std::floor(rng.uniform() * 6.0) / 6.0);  // heavy ties
      labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    labels[0] = 1;
    labels[1] = 0;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[i] != 1 || labels[j] != 0) continue;
        pairs += 1.0;
        if (scores[i] > scores[j]) wins += 1.0;
        if (scores[i] == scores[j]) wins += 0.5;
      }
    if (std::abs(auc(scores, labels) - wins / pairs) > 1e-12) all_equal = false;
  }
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << "200 instances, " << secs << " s";
  report(6, "rank AUC oracle", all_equal && secs < 5.0, detail.str());
}

// 7. Budget replay: handcrafted three-journey oracle plus exact cost-scale
// invariance.
void criterion_budget_oracle() {
  const auto journey = [](std::vector<std::pair<Index, double>> steps, int conv,
                          std::vector<std::int64_t> times) {
    Journey j;
    j.user_id = "u";
    for (std::size_t t = 0; t < steps.size(); ++t) {
      Touchpoint tp;
      tp.covariates = {1};
      tp.channel = steps[t].first;
      tp.cost = steps[t].second;
      tp.timestamp = times[t];
      j.touchpoints.push_back(tp);
    }
    j.conversion = conv;
    return j;
  };
  const Journey j1 = journey({{0, 1.0}, {0, 1.0}}, 1, {0, 2});
  const Journey j2 = journey({{0, 1.0}}, 1, {1});
  const Journey j3 = journey({{1, 1.0}}, 0, {3});
  const BudgetReport rep = replay({j1, j2, j3}, {2.5, 0.0}, 1.0);
  const bool oracle_ok = rep.true_conversions == 1 &&
                         rep.total_expenditure == 2.0 &&
                         rep.cvr == 1.0 / 3.0 && rep.cpa_defined &&
                         rep.cpa == 2.0 && rep.blacklisted == 2;

  SyntheticConfig cfg;
  cfg.num_users = 500;
  cfg.seed = 29;
  const SyntheticDataset ds = generate_synthetic(cfg);
  const std::vector<double> budgets{60.0, 30.0, 20.0, 10.0};
  const BudgetReport base = replay(ds.journeys, budgets, 1.0);
  std::vector<double> big;
  for (double b : budgets) big.push_back(1000.0 * b);
  const BudgetReport scaled = replay(ds.journeys, big, 1000.0);
  const bool scale_ok =
      scaled.blacklisted == base.blacklisted &&
      scaled.true_conversions == base.true_conversions &&
      scaled.cvr == base.cvr &&
      std::abs(scaled.total_expenditure - 1000.0 * base.total_expenditure) <
          1e-6 &&
      (!base.cpa_defined ||
       std::abs(scaled.cpa - 1000.0 * base.cpa) < 1e-6);

  std::ostringstream detail;
  detail << "oracle CPA " << rep.cpa << " CVR " << rep.cvr << " blacklist "
         << rep.blacklisted << "; scale invariance "
         << (scale_ok ? "holds" : "violated");
  report(7, "budget replay oracle", oracle_ok && scale_ok, detail.str());
}

// 8. True conversions and expenditure are nondecreasing across budget
// fractions 0.2 -> 1.0.
void criterion_budget_monotonicity() {
  SyntheticConfig cfg;
  cfg.num_users = 800;
  cfg.seed = 31;
  const SyntheticDataset ds = generate_synthetic(cfg);
  const auto attributions =
      baseline_attributions(ds.journeys, "linear", cfg.num_channels);
  const auto reports =
      budget_sweep(ds.journeys, attributions, cfg.num_channels,
                   {0.2, 0.4, 0.6, 0.8, 1.0}, 1.0);
  bool monotone = true;
  std::ostringstream conv;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    conv << (i ? ", " : "") << reports[i].true_conversions;
    if (i == 0) continue;
    if (reports[i].true_conversions < reports[i - 1].true_conversions)
      monotone = false;
    if (reports[i].total_expenditure <
        reports[i - 1].total_expenditure - 1e-9)
      monotone = false;
  }
  report(8, "budget monotonicity", monotone,
         "true conversions " + conv.str());
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

// 9. The whole command-line pipeline reruns byte-identically.
void criterion_pipeline_reproducibility(const std::string& cli) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path root = fs::temp_directory_path() / "camta_accept";
  fs::remove_all(root);
  fs::create_directories(root);

  const fs::path config = root / "config.json";
  {
    std::ofstream out(config);
    out << R"({
  "seed": 1,
  "synthetic": {"num_users": 800, "max_len": 6},
  "hyperparams": {"embedding_size": 8, "hidden_size": 16, "repr_size": 8,
                   "head_hidden": 16},
  "train": {"learning_rate": 0.01, "batch_size": 128, "epochs": 5}
})";
  }

  bool ran_ok = true;
  for (int run = 1; run <= 2 && ran_ok; ++run) {
    const fs::path d = root / ("run" + std::to_string(run));
    fs::create_directories(d);
    const std::string q = "\"" + cli + "\"";
    const std::string data = (d / "data").string();
    const std::string model = (d / "model").string();
    const std::vector<std::string> commands{
        q + " synth --config " + config.string() + " --out " + data,
        q + " train --data " + data + " --config " + config.string() +
            " --out " + model,
        q + " eval --model " + model + " --data " + data + " --out " +
            (d / "metrics.json").string(),
        q + " attribute --model " + model + " --data " + data + " --out " +
            (d / "attributions.jsonl").string(),
        q + " budget --attrib " + (d / "attributions.jsonl").string() +
            " --data " + data + " --cost-scale 1000 --out " +
            (d / "budget.json").string(),
        q + " segment --attrib " + (d / "attributions.jsonl").string() +
            " --data " + data + " --out " + (d / "segment.json").string()};
    for (const auto& cmd : commands) {
      if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) {
        ran_ok = false;
        std::cout << "  pipeline step failed: " << cmd << std::endl;
        break;
      }
    }
  }

  bool identical = ran_ok;
  std::vector<std::string> artifacts{
      "data/journeys.jsonl", "data/ground_truth.json", "data/train.jsonl",
      "data/validation.jsonl", "data/test.jsonl", "model/checkpoint.ckpt",
      "model/history.json", "metrics.json", "attributions.jsonl",
      "budget.json", "segment.json"};
  std::string first_diff;
  if (ran_ok)
    for (const auto& rel : artifacts)
      if (!same_bytes(root / "run1" / rel, root / "run2" / rel)) {
        identical = false;
        if (first_diff.empty()) first_diff = rel;
      }
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << artifacts.size() << " artifacts compared, " << secs << " s";
  if (!first_diff.empty()) detail << ", first difference " << first_diff;
  report(9, "pipeline reproducibility", identical && secs < 900.0,
         detail.str());
  fs::remove_all(root);
}

// 10. Journey construction rules on fixtures covering every branch:
// cut-inclusive at conversion, drop whole journeys longer than the limit,
// drop whole journeys touching unselected channels.
void criterion_data_conformance() {
  const auto imp = [](const std::string& user, std::int64_t ts,
                      const std::string& channel, bool convert) {
    Impression i;
    i.user_id = user;
    i.timestamp = ts;
    i.channel_id = channel;
    i.cost = 1.0;
    i.covariates = {"x"};
    if (convert) i.conversion_id = "c" + std::to_string(ts);
    return i;
  };

  bool ok = true;
  const auto expect = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      std::cout << "  data conformance: " << what << std::endl;
    }
  };

  // split at conversion, conversion-bearing impression included; trailing
  // remainder becomes a non-converting journey
  {
    const std::vector<Impression> imps{imp("u", 1, "A", false),
                                       imp("u", 2, "A", true),
                                       imp("u", 3, "A", false)};
    const auto js = build_journeys(imps, {"A"});
    expect(js.size() == 2, "conversion cut count");
    expect(js[0].touchpoints.size() == 2 && js[0].conversion == 1,
           "inclusive cut");
    expect(js[1].touchpoints.size() == 1 && js[1].conversion == 0,
           "trailing remainder");
  }
  // consecutive conversions: at most one conversion per journey
  {
    const std::vector<Impression> imps{imp("u", 1, "A", true),
                                       imp("u", 2, "A", true)};
    const auto js = build_journeys(imps, {"A"});
    expect(js.size() == 2, "consecutive conversions split");
    expect(js[0].conversion == 1 && js[1].conversion == 1,
           "one conversion each");
    expect(js[0].touchpoints.size() == 1 && js[1].touchpoints.size() == 1,
           "single-impression journeys");
  }
  // length cap: 21 dropped whole, 20 kept
  {
    std::vector<Impression> imps;
    for (int t = 0; t < 21; ++t) imps.push_back(imp("u", t, "A", false));
    expect(build_journeys(imps, {"A"}).empty(), "over-length dropped");
    imps.pop_back();
    const auto js = build_journeys(imps, {"A"});
    expect(js.size() == 1 && js[0].touchpoints.size() == 20,
           "limit-length kept");
  }
  // off-channel contact anywhere drops the whole journey, not the touchpoint
  {
    const std::vector<Impression> imps{
        imp("u1", 1, "A", false), imp("u1", 2, "Z", false),
        imp("u1", 3, "A", true), imp("u2", 1, "A", true)};
    const auto js = build_journeys(imps, {"A", "B"});
    expect(js.size() == 1 && js[0].user_id == "u2", "off-channel dropped whole");
  }
  // per-user independence: one user's drop does not affect another's journeys
  {
    std::vector<Impression> imps;
    for (int t = 0; t < 25; ++t) imps.push_back(imp("long", t, "A", false));
    imps.push_back(imp("short", 1, "A", true));
    const auto js = build_journeys(imps, {"A"});
    expect(js.size() == 1 && js[0].user_id == "short", "per-user independence");
  }
  report(10, "data processing conformance", ok, "all branch fixtures");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-cli-binary>" << std::endl;
    return 2;
  }
  criterion_gradient_fidelity();
  criterion_adversarial_routing();
  criterion_attention_normalization();
  criterion_auc_oracle();
  criterion_budget_oracle();
  criterion_budget_monotonicity();
  criterion_data_conformance();
  criterion_synthetic_recovery();
  criterion_confounding_ablation();
  criterion_pipeline_reproducibility(argv[1]);
  if (g_failures == 0) {
    std::cout << "acceptance: all criteria passed" << std::endl;
    return 0;
  }
  std::cout << "acceptance: " << g_failures << " criteria FAILED" << std::endl;
  return 1;
}
