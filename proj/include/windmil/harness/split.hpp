#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "windmil/harness/dataset.hpp"

namespace windmil::harness {

enum class SplitKind { kInterpolation, kExtrapolation };

std::string to_string(SplitKind k);
SplitKind parse_split_kind(const std::string& s);

struct SplitSpec {
  SplitKind kind = SplitKind::kInterpolation;
  std::uint64_t seed = 0;
  std::vector<double> fractions;  // (train, dev, test) or (train, dev) of the interior pool
  std::vector<std::string> train, dev, test;

  bool operator==(const SplitSpec&) const = default;
};

/// Sorts the ids, shuffles them with `seed`, then cuts contiguous blocks of
/// floor(f_train n) and floor(f_dev n); test takes the remainder.
SplitSpec split_interpolation(std::vector<std::string> case_ids, const std::array<double, 3>& fractions,
                              std::uint64_t seed);

/// Boundary-lattice cases form the test set; the interior pool is shuffled
/// and cut floor(train_fraction n) / remainder into train / dev.
SplitSpec split_extrapolation(const std::vector<CaseMeta>& cases, std::uint64_t seed,
                              double train_fraction = 0.8);

/// Disjointness and, when `all_ids` is non-empty, exact coverage.
void validate(const SplitSpec& s, const std::vector<std::string>& all_ids = {});

nlohmann::json to_json(const SplitSpec& s);
SplitSpec split_from_json(const nlohmann::json& j);
void write_split(const SplitSpec& s, const std::filesystem::path& path);
SplitSpec read_split(const std::filesystem::path& path);

/// Order-sensitive FNV-1a hash of a list of ids.
std::uint64_t hash_ids(const std::vector<std::string>& ids);

}  // namespace windmil::harness
