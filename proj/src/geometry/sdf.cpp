#include <cmath>
#include <limits>
#include <string>

#include "windmil/error.hpp"
#include "windmil/geometry/sdf.hpp"

namespace windmil::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher). `f` holds
// squared distances along one line; infinite entries contribute no parabola.
void envelope_1d(std::vector<double>& f, std::vector<int>& v, std::vector<double>& z,
                 std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
             (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    // z[0] is -inf, so k never drops below zero.
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const GridSpec& spec,
                                               std::span<const std::uint8_t> seed) {
  if (seed.size() != spec.size()) throw ShapeError("seed mask does not match grid");
  std::vector<double> dist(spec.size());
  for (std::size_t i = 0; i < seed.size(); ++i) dist[i] = seed[i] ? 0.0 : kInf;

  const int maxn = std::max({spec.dims[0], spec.dims[1], spec.dims[2]});
  std::vector<double> line(maxn), out(maxn), z(maxn + 1);
  std::vector<int> v(maxn);
  for (int axis = 0; axis < 3; ++axis) {
    const int n = spec.dims[axis];
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    line.resize(n);
    out.resize(n);
    for (int u = 0; u < spec.dims[a1]; ++u) {
      for (int w = 0; w < spec.dims[a2]; ++w) {
        std::array<int, 3> idx{};
        idx[a1] = u;
        idx[a2] = w;
        for (int t = 0; t < n; ++t) {
          idx[axis] = t;
          line[t] = dist[spec.index(idx[0], idx[1], idx[2])];
        }
        envelope_1d(line, v, z, out);
        for (int t = 0; t < n; ++t) {
          idx[axis] = t;
          dist[spec.index(idx[0], idx[1], idx[2])] = out[t];
        }
      }
    }
  }
  return dist;
}

SDFField occupancy_to_sdf(const OccupancyGrid& occ) {
  const GridSpec& spec = occ.spec;
  validate(spec);
  if (occ.values.size() != spec.size()) throw ShapeError("occupancy size does not match grid");
  std::size_t inside = 0;
  for (std::uint8_t b : occ.values) inside += b ? 1 : 0;
  if (inside == 0 || inside == occ.values.size()) {
    throw DegenerateFieldError(inside == 0 ? "no inside cells" : "no outside cells");
  }
  std::vector<std::uint8_t> outside_mask(occ.values.size());
  for (std::size_t i = 0; i < occ.values.size(); ++i) outside_mask[i] = occ.values[i] ? 0 : 1;

  const std::vector<double> to_inside = squared_distance_transform(spec, occ.values);
  const std::vector<double> to_outside = squared_distance_transform(spec, outside_mask);

  SDFField sdf(spec);
  const double half = 0.5 * spec.spacing;
  for (std::size_t i = 0; i < sdf.values.size(); ++i) {
    if (occ.values[i]) {
      sdf.values[i] = -(std::sqrt(to_outside[i]) * spec.spacing - half);
    } else {
      sdf.values[i] = std::sqrt(to_inside[i]) * spec.spacing - half;
    }
  }
  return sdf;
}

void validate_weights(std::span<const double> weights) {
  if (weights.empty()) throw DomainError("no interpolation weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw DomainError("weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

SDFField interpolate_sdf(std::span<const SDFField> fields, std::span<const double> weights) {
  if (fields.empty()) throw ShapeError("no fields to interpolate");
  if (fields.size() != weights.size()) throw ShapeError("field count != weight count");
  validate_weights(weights);
  const GridSpec& spec = fields.front().spec;
  for (const SDFField& f : fields) {
    if (!(f.spec == spec) || f.values.size() != spec.size()) {
      throw ShapeError("fields do not share one grid");
    }
  }
  SDFField out(spec);
  for (std::size_t c = 0; c < out.values.size(); ++c) {
    double acc = weights[0] * fields[0].values[c];
    for (std::size_t i = 1; i < fields.size(); ++i) acc += weights[i] * fields[i].values[c];
    out.values[c] = acc;
  }
  return out;
}

SDFField interpolate_sdf(std::span<const SDFField> fields, const BarycentricWeights& weights) {
  return interpolate_sdf(fields, std::span<const double>(weights.w));
}

}  // namespace windmil::geometry
