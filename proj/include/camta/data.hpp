#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "camta/tensor.hpp"

namespace camta {

// One raw impression-log row.
struct Impression {
  std::int64_t timestamp = 0;
  std::string user_id;
  std::string channel_id;
  int click = 0;
  double cost = 0.0;
  std::optional<std::string> conversion_id;
  std::vector<std::string> covariates;
};

// Journey before vocabulary encoding: covariates and channels as strings.
struct RawTouchpoint {
  std::vector<std::string> covariates;
  std::string channel;
  int click = 0;
  double cost = 0.0;
  std::int64_t timestamp = 0;
};

struct RawJourney {
  std::string user_id;
  std::vector<RawTouchpoint> touchpoints;
  int conversion = 0;
};

// Encoded journey: the unit of training.
struct Touchpoint {
  std::vector<Index> covariates;  // per-field codes, 0 is the OOV index
  Index channel = 0;              // in [0, K)
  int click = 0;                  // z_{t+1}
  double cost = 0.0;
  std::int64_t timestamp = 0;
};

struct Journey {
  std::string user_id;
  std::vector<Touchpoint> touchpoints;
  int conversion = 0;  // y
};

struct VocabMap {
  // per covariate field: value -> index in [1, top_v]; anything else -> 0
  std::vector<std::map<std::string, Index>> fields;
  std::map<std::string, Index> channels;

  Index num_channels() const { return static_cast<Index>(channels.size()); }
  // encoded cardinality of field f, including the OOV slot
  Index field_cardinality(std::size_t f) const {
    return static_cast<Index>(fields[f].size()) + 1;
  }
  std::vector<Index> cardinalities() const;
  // stable content hash, stored in checkpoints to detect vocab mismatches
  std::uint64_t hash() const;
};

struct ColumnMap {
  std::string timestamp;
  std::string user_id;
  std::string channel_id;
  std::string click;
  std::string cost;
  std::string conversion_id;  // empty cell = no conversion
  std::vector<std::string> covariates;
};

struct IngestResult {
  std::vector<Impression> impressions;
  std::size_t malformed_rows = 0;
};

// Parse a delimited log (tab or comma, sniffed from the header), sorted by
// (user_id, timestamp) on output. Malformed rows are skipped and counted.
IngestResult ingest_log(const std::string& path, const ColumnMap& columns);

// Cut each user's stream right after every conversion-bearing impression;
// the remainder (if any) becomes a non-converting journey. Journeys touching
// a channel outside `selected_channels` or longer than `max_len` are dropped
// whole.
std::vector<RawJourney> build_journeys(
    const std::vector<Impression>& impressions,
    const std::vector<std::string>& selected_channels, std::size_t max_len = 20);

// Per field, the top_v most frequent values (ties lexicographic) get indices
// 1..top_v. Channel indices follow the order of `selected_channels`.
VocabMap build_vocab(const std::vector<RawJourney>& journeys,
                     const std::vector<std::string>& selected_channels,
                     std::size_t top_v);

std::vector<Journey> encode(const std::vector<RawJourney>& journeys,
                            const VocabMap& vocab);

struct Split {
  std::vector<Journey> train, validation, test;
};

// Seeded shuffle then contiguous slicing; fractions must sum to 1.
Split split_journeys(const std::vector<Journey>& journeys, double train_frac,
                     double val_frac, double test_frac, std::uint64_t seed);

// Pick `count` distinct channel ids uniformly at random (seeded), mirroring a
// random channel-subset selection on a large log.
std::vector<std::string> select_random_channels(
    const std::vector<Impression>& impressions, std::size_t count,
    std::uint64_t seed);

// Throws std::invalid_argument if the journey violates its type invariants.
void validate_journey(const Journey& j, Index num_channels, std::size_t max_len);

// Canonical journey file: one JSON record per line, format_version 1.
void save_journeys(const std::string& path, const std::vector<Journey>& journeys);
std::vector<Journey> load_journeys(const std::string& path);

void save_vocab(const std::string& path, const VocabMap& vocab);
VocabMap load_vocab(const std::string& path);

}  // namespace camta
