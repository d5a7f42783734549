#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vardro/matrix.hpp"
#include "vardro/variance_tracker.hpp"

namespace vardro {

inline constexpr int kNoGroup = -1;

// Labeled samples with stable ids. Group tags are evaluation metadata.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<SampleId> ids;
  std::vector<int> groups;               // empty, or one tag index per row
  std::vector<std::string> group_names;  // indexed by tag
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols; }
  bool has_groups() const { return !groups.empty(); }

  void validate() const;
  // Index of a group name, or kNoGroup.
  int group_index(const std::string& name) const;
  // Rows whose group tag equals the given index.
  Dataset subset_of_group(int group) const;
};

// What the training loop is allowed to see: features, labels, ids.
class TrainingView {
 public:
  explicit TrainingView(const Dataset& data) : data_(&data) {}

  std::size_t size() const { return data_->size(); }
  std::size_t dim() const { return data_->dim(); }
  std::size_t classes() const { return data_->classes; }
  std::span<const double> features(std::size_t row) const {
    return data_->features.row(row);
  }
  int label(std::size_t row) const { return data_->labels[row]; }
  SampleId id(std::size_t row) const { return data_->ids[row]; }

 private:
  const Dataset* data_;
};

struct BlobSpec {
  std::size_t classes = 2;
  std::size_t per_class = 100;
  std::size_t dim = 2;
  double separation = 6.0;  // distance between class means
  double spread = 1.0;      // per-coordinate standard deviation
  std::uint64_t seed = 0;
};

// One isotropic Gaussian cluster per class.
Dataset gen_blobs(const BlobSpec& spec);

// Class means used by gen_blobs for the given spec.
Matrix blob_means(const BlobSpec& spec);

struct SpuriousSpec {
  std::size_t per_class = 200;
  double correlation = 0.95;  // P(spurious sign agrees with label)
  double core_strength = 1.0;
  double spurious_strength = 3.0;
  double noise = 1.0;
  std::size_t noise_dims = 0;
  std::uint64_t seed = 0;
};

// Binary labels carried by a core coordinate; a spurious coordinate agrees
// with the label with the configured probability. Group tag is
// (label, spurious sign), four groups.
Dataset gen_spurious(const SpuriousSpec& spec);

enum class Corruption { kGaussianNoise, kFeatureDropout, kAffineShift };

inline constexpr int kMaxSeverity = 5;

std::string to_string(Corruption kind);
Corruption corruption_from_string(const std::string& name);
const std::vector<Corruption>& all_corruptions();

// Label-preserving feature transform with strength increasing in severity
// (1..5). Returns a modified copy.
Dataset corrupt(const Dataset& data, Corruption kind, int severity, std::uint64_t seed);

struct OutlierSpec {
  double distance = 4.0;  // outlier cluster offset in units of spread, >= 3
  double spread = 1.0;    // inlier cluster spread
  // Per-class centers to offset from; empirical class means when empty.
  Matrix centers;
  std::uint64_t direction_seed = 0;  // fixes the offset direction per class
  std::uint64_t seed = 0;            // row selection and point draws
};

// Replaces round(fraction * n) rows with points drawn around shifted class
// centers, keeping labels. Tags become "inlier" / "outlier". Train and test
// splits that share direction_seed share outlier clusters.
Dataset mix_outliers(const Dataset& data, double fraction, const OutlierSpec& spec);

}  // namespace vardro
