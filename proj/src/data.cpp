#include "camta/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "camta/rng.hpp"

namespace camta {

using nlohmann::json;

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

bool parse_i64(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    *out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

std::vector<Index> VocabMap::cardinalities() const {
  std::vector<Index> out;
  for (std::size_t f = 0; f < fields.size(); ++f)
    out.push_back(field_cardinality(f));
  return out;
}

std::uint64_t VocabMap::hash() const {
  // FNV-1a over a canonical serialization
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& field : fields) {
    mix("#field");
    for (const auto& [k, v] : field) {
      mix(k);
      mix(std::to_string(v));
    }
  }
  mix("#channels");
  for (const auto& [k, v] : channels) {
    mix(k);
    mix(std::to_string(v));
  }
  return h;
}

IngestResult ingest_log(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_log: cannot open " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("ingest_log: empty file " + path);
  const char delim =
      header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> names = split_line(header, delim);
  auto col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw std::runtime_error("ingest_log: missing column '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  };

  const std::size_t c_ts = col(columns.timestamp);
  const std::size_t c_user = col(columns.user_id);
  const std::size_t c_chan = col(columns.channel_id);
  const std::size_t c_click = col(columns.click);
  const std::size_t c_cost = col(columns.cost);
  const std::size_t c_conv = col(columns.conversion_id);
  std::vector<std::size_t> c_cov;
  for (const auto& name : columns.covariates) c_cov.push_back(col(name));

  IngestResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line, delim);
    Impression imp;
    bool ok = true;
    auto cell = [&](std::size_t i) -> const std::string& {
      static const std::string empty;
      return i < cells.size() ? cells[i] : empty;
    };
    ok = ok && parse_i64(cell(c_ts), &imp.timestamp);
    imp.user_id = cell(c_user);
    imp.channel_id = cell(c_chan);
    ok = ok && !imp.user_id.empty() && !imp.channel_id.empty();
    std::int64_t click = 0;
    ok = ok && parse_i64(cell(c_click), &click) && (click == 0 || click == 1);
    imp.click = static_cast<int>(click);
    ok = ok && parse_double(cell(c_cost), &imp.cost) && imp.cost >= 0.0;
    if (!cell(c_conv).empty()) imp.conversion_id = cell(c_conv);
    for (std::size_t i : c_cov) imp.covariates.push_back(cell(i));
    if (ok) {
      result.impressions.push_back(std::move(imp));
    } else {
      ++result.malformed_rows;
    }
  }
  std::stable_sort(result.impressions.begin(), result.impressions.end(),
                   [](const Impression& a, const Impression& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.timestamp < b.timestamp;
                   });
  return result;
}

std::vector<RawJourney> build_journeys(
    const std::vector<Impression>& impressions,
    const std::vector<std::string>& selected_channels, std::size_t max_len) {
  if (selected_channels.empty())
    throw std::invalid_argument("build_journeys: empty channel selection");
  const std::set<std::string> selected(selected_channels.begin(),
                                       selected_channels.end());
  std::vector<RawJourney> out;
  RawJourney current;
  bool off_channel = false;

  auto flush = [&](int conversion) {
    if (!current.touchpoints.empty()) {
      current.conversion = conversion;
      if (!off_channel && current.touchpoints.size() <= max_len)
        out.push_back(current);
    }
    current.touchpoints.clear();
    off_channel = false;
  };

  for (std::size_t i = 0; i < impressions.size(); ++i) {
    const Impression& imp = impressions[i];
    if (current.user_id != imp.user_id) {
      flush(0);
      current.user_id = imp.user_id;
    }
    RawTouchpoint tp;
    tp.covariates = imp.covariates;
    tp.channel = imp.channel_id;
    tp.click = imp.click;
    tp.cost = imp.cost;
    tp.timestamp = imp.timestamp;
    if (!selected.count(imp.channel_id)) off_channel = true;
    current.touchpoints.push_back(std::move(tp));
    // inclusive cut: a conversion-bearing impression ends its journey
    if (imp.conversion_id.has_value()) flush(1);
  }
  flush(0);
  return out;
}

VocabMap build_vocab(const std::vector<RawJourney>& journeys,
                     const std::vector<std::string>& selected_channels,
                     std::size_t top_v) {
  if (top_v < 1) throw std::invalid_argument("build_vocab: top_v must be >= 1");
  std::size_t num_fields = 0;
  for (const auto& j : journeys)
    for (const auto& tp : j.touchpoints)
      num_fields = std::max(num_fields, tp.covariates.size());

  VocabMap vocab;
  vocab.fields.resize(num_fields);
  for (std::size_t f = 0; f < num_fields; ++f) {
    std::map<std::string, std::size_t> counts;
    for (const auto& j : journeys)
      for (const auto& tp : j.touchpoints)
        if (f < tp.covariates.size()) ++counts[tp.covariates[f]];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                            counts.end());
    // frequency descending, then lexicographic for determinism
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Index next = 1;
    for (const auto& [value, count] : ranked) {
      if (static_cast<std::size_t>(next) > top_v) break;
      vocab.fields[f][value] = next++;
    }
  }
  Index k = 0;
  for (const auto& name : selected_channels) {
    if (!vocab.channels.count(name)) vocab.channels[name] = k++;
  }
  return vocab;
}

std::vector<Journey> encode(const std::vector<RawJourney>& journeys,
                            const VocabMap& vocab) {
  std::vector<Journey> out;
  out.reserve(journeys.size());
  for (const auto& raw : journeys) {
    Journey j;
    j.user_id = raw.user_id;
    j.conversion = raw.conversion;
    for (const auto& rtp : raw.touchpoints) {
      Touchpoint tp;
      for (std::size_t f = 0; f < vocab.fields.size(); ++f) {
        Index code = 0;
        if (f < rtp.covariates.size()) {
          auto it = vocab.fields[f].find(rtp.covariates[f]);
          if (it != vocab.fields[f].end()) code = it->second;
        }
        tp.covariates.push_back(code);
      }
      auto ch = vocab.channels.find(rtp.channel);
      if (ch == vocab.channels.end())
        throw std::invalid_argument("encode: unknown channel '" + rtp.channel +
                                    "'");
      tp.channel = ch->second;
      tp.click = rtp.click;
      tp.cost = rtp.cost;
      tp.timestamp = rtp.timestamp;
      j.touchpoints.push_back(std::move(tp));
    }
    out.push_back(std::move(j));
  }
  return out;
}

Split split_journeys(const std::vector<Journey>& journeys, double train_frac,
                     double val_frac, double test_frac, std::uint64_t seed) {
  const double total = train_frac + val_frac + test_frac;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split_journeys: fractions must sum to 1");
  std::vector<std::size_t> order(journeys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, /*stream=*/11));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(i)]);

  const std::size_t n = journeys.size();
  const auto n_train = static_cast<std::size_t>(train_frac * n + 0.5);
  const auto n_val = static_cast<std::size_t>(val_frac * n + 0.5);
  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    const Journey& j = journeys[order[i]];
    if (i < n_train)
      s.train.push_back(j);
    else if (i < n_train + n_val)
      s.validation.push_back(j);
    else
      s.test.push_back(j);
  }
  return s;
}

std::vector<std::string> select_random_channels(
    const std::vector<Impression>& impressions, std::size_t count,
    std::uint64_t seed) {
  std::set<std::string> distinct;
  for (const auto& imp : impressions) distinct.insert(imp.channel_id);
  std::vector<std::string> pool(distinct.begin(), distinct.end());
  if (pool.size() <= count) return pool;
  Rng rng(derive_seed(seed, /*stream=*/13));
  for (std::size_t i = pool.size(); i > 1; --i)
    std::swap(pool[i - 1], pool[rng.uniform_int(i)]);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void validate_journey(const Journey& j, Index num_channels,
                      std::size_t max_len) {
  if (j.touchpoints.empty())
    throw std::invalid_argument("journey: empty touchpoint list");
  if (j.touchpoints.size() > max_len)
    throw std::invalid_argument("journey: length " +
                                std::to_string(j.touchpoints.size()) +
                                " exceeds max " + std::to_string(max_len));
  std::int64_t prev_ts = j.touchpoints.front().timestamp;
  for (const auto& tp : j.touchpoints) {
    if (tp.channel < 0 || tp.channel >= num_channels)
      throw std::invalid_argument("journey: channel index out of range");
    if (tp.click != 0 && tp.click != 1)
      throw std::invalid_argument("journey: click label not in {0,1}");
    if (tp.cost < 0) throw std::invalid_argument("journey: negative cost");
    if (tp.timestamp < prev_ts)
      throw std::invalid_argument("journey: timestamps not nondecreasing");
    prev_ts = tp.timestamp;
  }
  if (j.conversion != 0 && j.conversion != 1)
    throw std::invalid_argument("journey: conversion label not in {0,1}");
}

namespace {

json journey_to_json(const Journey& j) {
  json tps = json::array();
  for (const auto& tp : j.touchpoints) {
    tps.push_back({{"covariates", tp.covariates},
                   {"channel", tp.channel},
                   {"click", tp.click},
                   {"cost", tp.cost},
                   {"timestamp", tp.timestamp}});
  }
  return json{{"format_version", 1},
              {"user_id", j.user_id},
              {"conversion", j.conversion},
              {"touchpoints", std::move(tps)}};
}

Journey journey_from_json(const json& rec) {
  if (rec.at("format_version").get<int>() != 1)
    throw std::runtime_error("journey file: unsupported format_version");
  Journey j;
  j.user_id = rec.at("user_id").get<std::string>();
  j.conversion = rec.at("conversion").get<int>();
  for (const auto& t : rec.at("touchpoints")) {
    Touchpoint tp;
    tp.covariates = t.at("covariates").get<std::vector<Index>>();
    tp.channel = t.at("channel").get<Index>();
    tp.click = t.at("click").get<int>();
    tp.cost = t.at("cost").get<double>();
    tp.timestamp = t.at("timestamp").get<std::int64_t>();
    j.touchpoints.push_back(std::move(tp));
  }
  return j;
}

}  // namespace

void save_journeys(const std::string& path,
                   const std::vector<Journey>& journeys) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_journeys: cannot open " + path);
  for (const auto& j : journeys) out << journey_to_json(j).dump() << "\n";
}

std::vector<Journey> load_journeys(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_journeys: cannot open " + path);
  std::vector<Journey> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(journey_from_json(json::parse(line)));
  }
  return out;
}

void save_vocab(const std::string& path, const VocabMap& vocab) {
  json fields = json::array();
  for (const auto& f : vocab.fields) fields.push_back(f);
  json doc{{"format_version", 1},
           {"fields", std::move(fields)},
           {"channels", vocab.channels}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_vocab: cannot open " + path);
  out << doc.dump(2) << "\n";
}

VocabMap load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vocab: cannot open " + path);
  json doc = json::parse(in);
  VocabMap vocab;
  for (const auto& f : doc.at("fields"))
    vocab.fields.push_back(f.get<std::map<std::string, Index>>());
  vocab.channels = doc.at("channels").get<std::map<std::string, Index>>();
  return vocab;
}

}  // namespace camta
