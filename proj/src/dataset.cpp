#include "vardro/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : u) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

double feature_scale(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0) return 1.0;
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    total += var / static_cast<double>(x.rows);
  }
  const double rms = std::sqrt(total / static_cast<double>(x.cols));
  return rms > 0.0 ? rms : 1.0;
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (features.rows != n || ids.size() != n) {
    throw DimensionError("features, labels, and ids differ in length");
  }
  if (!groups.empty() && groups.size() != n) {
    throw DimensionError("group tags differ in length from labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidArgumentError("label out of range");
    }
  }
  for (int g : groups) {
    if (g < 0 || static_cast<std::size_t>(g) >= group_names.size()) {
      throw InvalidArgumentError("group tag out of range");
    }
  }
}

int Dataset::group_index(const std::string& name) const {
  const auto it = std::find(group_names.begin(), group_names.end(), name);
  return it == group_names.end() ? kNoGroup : static_cast<int>(it - group_names.begin());
}

Dataset Dataset::subset_of_group(int group) const {
  Dataset out;
  out.classes = classes;
  out.group_names = group_names;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] == group) rows.push_back(i);
  }
  out.features = Matrix(rows.size(), features.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[rows[r]]);
    out.ids.push_back(ids[rows[r]]);
    out.groups.push_back(group);
  }
  return out;
}

Matrix blob_means(const BlobSpec& spec) {
  Matrix means(spec.classes, spec.dim);
  if (spec.classes <= spec.dim) {
    // Scaled axis vectors: pairwise distance is exactly `separation`.
    const double r = spec.separation / std::sqrt(2.0);
    for (std::size_t k = 0; k < spec.classes; ++k) means(k, k) = r;
  } else {
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t k = 0; k < spec.classes; ++k) {
      const auto u = random_unit(spec.dim, rng);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        means(k, j) = u[j] * spec.separation / std::sqrt(2.0);
      }
    }
  }
  return means;
}

Dataset gen_blobs(const BlobSpec& spec) {
  if (spec.classes < 2) throw InvalidArgumentError("blobs need at least two classes");
  if (spec.per_class == 0) throw InvalidArgumentError("per_class must be positive");
  if (spec.dim == 0) throw InvalidArgumentError("dim must be positive");
  if (!(spec.spread >= 0.0) || !(spec.separation >= 0.0)) {
    throw InvalidArgumentError("spread and separation must be nonnegative");
  }
  const Matrix means = blob_means(spec);
  Dataset d;
  d.classes = spec.classes;
  const std::size_t n = spec.classes * spec.per_class;
  d.features = Matrix(n, spec.dim);
  d.labels.resize(n);
  d.ids.resize(n);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t c = 0; c < spec.per_class; ++c, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        d.features(row, j) = means(k, j) + spec.spread * normal(rng);
      }
      d.labels[row] = static_cast<int>(k);
      d.ids[row] = row;
    }
  }
  return d;
}

Dataset gen_spurious(const SpuriousSpec& spec) {
  if (!(spec.correlation >= 0.5 && spec.correlation <= 1.0)) {
    throw InvalidArgumentError("spurious correlation must lie in [0.5, 1]");
  }
  if (spec.per_class == 0) throw InvalidArgumentError("per_class must be positive");
  if (!(spec.noise >= 0.0)) throw InvalidArgumentError("noise must be nonnegative");
  Dataset d;
  d.classes = 2;
  d.group_names = {"y0_s0", "y0_s1", "y1_s0", "y1_s1"};
  const std::size_t n = 2 * spec.per_class;
  const std::size_t dim = 2 + spec.noise_dims;
  d.features = Matrix(n, dim);
  d.labels.resize(n);
  d.ids.resize(n);
  d.groups.resize(n);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution agree(spec.correlation);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < spec.per_class ? 0 : 1;
    const double sign = y == 1 ? 1.0 : -1.0;
    const bool same = agree(rng);
    const double spurious_sign = same ? sign : -sign;
    d.features(i, 0) = spec.core_strength * sign + spec.noise * normal(rng);
    d.features(i, 1) = spec.spurious_strength * spurious_sign + spec.noise * normal(rng);
    for (std::size_t j = 2; j < dim; ++j) d.features(i, j) = spec.noise * normal(rng);
    d.labels[i] = y;
    d.ids[i] = i;
    d.groups[i] = 2 * y + (spurious_sign > 0.0 ? 1 : 0);
  }
  return d;
}

std::string to_string(Corruption kind) {
  switch (kind) {
    case Corruption::kGaussianNoise:
      return "gaussian_noise";
    case Corruption::kFeatureDropout:
      return "feature_dropout";
    case Corruption::kAffineShift:
      return "affine_shift";
  }
  return "unknown";
}

Corruption corruption_from_string(const std::string& name) {
  for (Corruption c : all_corruptions()) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgumentError("unknown corruption kind '" + name + "'");
}

const std::vector<Corruption>& all_corruptions() {
  static const std::vector<Corruption> kinds = {
      Corruption::kGaussianNoise, Corruption::kFeatureDropout, Corruption::kAffineShift};
  return kinds;
}

Dataset corrupt(const Dataset& data, Corruption kind, int severity, std::uint64_t seed) {
  if (severity < 1 || severity > kMaxSeverity) {
    throw InvalidArgumentError("severity must lie in [1, 5]");
  }
  Dataset out = data;
  Matrix& x = out.features;
  const double scale = feature_scale(data.features);
  const double s = static_cast<double>(severity);
  // Draws depend only on the seed, so severities share the same
  // perturbation pattern scaled up.
  std::mt19937_64 rng(seed);
  switch (kind) {
    case Corruption::kGaussianNoise: {
      std::normal_distribution<double> normal(0.0, 1.0);
      const double sd = 0.2 * s * scale;
      for (double& v : x.data) v += sd * normal(rng);
      break;
    }
    case Corruption::kFeatureDropout: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double rate = 0.1 * s;
      for (double& v : x.data) {
        if (unit(rng) < rate) v = 0.0;
      }
      break;
    }
    case Corruption::kAffineShift: {
      const auto u = random_unit(x.cols, rng);
      const double gain = 1.0 + 0.1 * s;
      const double offset = 0.2 * s * scale;
      for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) x(i, j) = gain * x(i, j) + offset * u[j];
      }
      break;
    }
  }
  return out;
}

Dataset mix_outliers(const Dataset& data, double fraction, const OutlierSpec& spec) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidArgumentError("outlier fraction must lie in [0, 1)");
  }
  if (fraction == 0.0) return data;
  if (!(spec.distance >= 3.0)) {
    throw InvalidArgumentError("outlier distance must be at least 3 spreads");
  }
  if (!(spec.spread > 0.0)) throw InvalidArgumentError("spread must be positive");
  data.validate();

  const std::size_t n = data.size();
  const std::size_t dim = data.dim();
  Matrix centers = spec.centers;
  if (centers.rows == 0) {
    centers = Matrix(data.classes, dim);
    std::vector<double> counts(data.classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(data.labels[i]);
      counts[k] += 1.0;
      for (std::size_t j = 0; j < dim; ++j) centers(k, j) += data.features(i, j);
    }
    for (std::size_t k = 0; k < data.classes; ++k) {
      for (std::size_t j = 0; j < dim; ++j) {
        if (counts[k] > 0.0) centers(k, j) /= counts[k];
      }
    }
  }
  if (centers.rows != data.classes || centers.cols != dim) {
    throw DimensionError("outlier centers do not match classes x dim");
  }

  std::mt19937_64 dir_rng(spec.direction_seed);
  Matrix shifted(data.classes, dim);
  for (std::size_t k = 0; k < data.classes; ++k) {
    const auto u = random_unit(dim, dir_rng);
    for (std::size_t j = 0; j < dim; ++j) {
      shifted(k, j) = centers(k, j) + spec.distance * spec.spread * u[j];
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  rows.resize(count);
  std::sort(rows.begin(), rows.end());

  Dataset out = data;
  out.group_names = {"inlier", "outlier"};
  out.groups.assign(n, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t row : rows) {
    const auto k = static_cast<std::size_t>(out.labels[row]);
    for (std::size_t j = 0; j < dim; ++j) {
      out.features(row, j) = shifted(k, j) + spec.spread * normal(rng);
    }
    out.groups[row] = 1;
  }
  return out;
}

}  // namespace vardro
