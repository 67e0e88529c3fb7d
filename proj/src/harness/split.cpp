#include "windmil/harness/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "windmil/error.hpp"

namespace windmil::harness {

namespace {

// floor() with a guard so products like 0.29 * 100 = 28.999999999999996 land on 29.
std::size_t floor_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

void shuffle_sorted(std::vector<std::string>& ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
}

}  // namespace

std::string to_string(SplitKind k) { return k == SplitKind::kInterpolation ? "interpolation" : "extrapolation"; }

SplitKind parse_split_kind(const std::string& s) {
  if (s == "interpolation") return SplitKind::kInterpolation;
  if (s == "extrapolation") return SplitKind::kExtrapolation;
  throw ConfigError("unknown split kind '" + s + "' (interpolation|extrapolation)");
}

SplitSpec split_interpolation(std::vector<std::string> case_ids, const std::array<double, 3>& fractions,
                              std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = case_ids.size();
  const std::size_t n_train = floor_count(fractions[0], n);
  const std::size_t n_dev = floor_count(fractions[1], n);
  if (n_train == 0 || n_dev == 0 || n_train + n_dev >= n) {
    throw ConfigError("split would leave train, dev or test empty (" + std::to_string(n) + " cases)");
  }
  shuffle_sorted(case_ids, seed);
  SplitSpec s;
  s.kind = SplitKind::kInterpolation;
  s.seed = seed;
  s.fractions = {fractions.begin(), fractions.end()};
  s.train.assign(case_ids.begin(), case_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.dev.assign(case_ids.begin() + static_cast<std::ptrdiff_t>(n_train),
               case_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  s.test.assign(case_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), case_ids.end());
  return s;
}

SplitSpec split_extrapolation(const std::vector<CaseMeta>& cases, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  SplitSpec s;
  s.kind = SplitKind::kExtrapolation;
  s.seed = seed;
  s.fractions = {train_fraction, 1.0 - train_fraction};
  std::vector<std::string> pool;
  for (const auto& c : cases) (c.is_boundary ? s.test : pool).push_back(c.case_id);
  if (s.test.empty()) throw ConfigError("extrapolation split: no boundary cases");
  const std::size_t n_train = floor_count(train_fraction, pool.size());
  if (n_train == 0 || n_train >= pool.size()) {
    throw ConfigError("extrapolation split: interior pool of " + std::to_string(pool.size()) +
                      " cases leaves train or dev empty");
  }
  std::sort(s.test.begin(), s.test.end());
  shuffle_sorted(pool, seed);
  s.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.dev.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
  return s;
}

void validate(const SplitSpec& s, const std::vector<std::string>& all_ids) {
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.dev, &s.test}) {
    if (part->empty()) throw ConfigError("split has an empty partition");
    for (const auto& id : *part) {
      if (!seen.insert(id).second) throw ConfigError("case " + id + " appears twice in the split");
    }
  }
  if (!all_ids.empty()) {
    const std::set<std::string> all(all_ids.begin(), all_ids.end());
    if (all != seen) throw ConfigError("split does not cover the dataset's cases exactly");
  }
}

nlohmann::json to_json(const SplitSpec& s) {
  return {{"kind", to_string(s.kind)}, {"seed", s.seed}, {"fractions", s.fractions},
          {"train", s.train},          {"dev", s.dev},   {"test", s.test}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
  SplitSpec s;
  try {
    s.kind = parse_split_kind(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.fractions = j.at("fractions").get<std::vector<double>>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.dev = j.at("dev").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split.json: ") + e.what());
  }
  validate(s);
  return s;
}

void write_split(const SplitSpec& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(s).dump(2) << '\n';
}

SplitSpec read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return split_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::uint64_t hash_ids(const std::vector<std::string>& ids) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& id : ids) {
    for (unsigned char c : id) mix(c);
    mix(0);
  }
  return h;
}

}  // namespace windmil::harness
