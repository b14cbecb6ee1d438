#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "advas/rng.hpp"
#include "advas/tensor.hpp"

namespace advas {

enum class DatasetKey { kRing8, kGrid25, kGauss1d, kMnist };

struct DatasetSpec {
  DatasetKey key = DatasetKey::kRing8;
  double mu = 0.0;     // gauss1d
  double sigma = 1.0;  // gauss1d; 0 gives a point mass
  std::filesystem::path images_path;  // mnist
  std::filesystem::path labels_path;  // mnist

  /// "ring8", "grid25", "gauss1d(mu,sigma)" or "mnist".
  std::string key_string() const;
  static DatasetSpec parse(std::string_view key);

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

inline constexpr double kRing8Radius = 2.0;
inline constexpr double kRing8Sigma = 0.02;
inline constexpr double kGrid25Spacing = 2.0;
inline constexpr double kGrid25Sigma = 0.05;

Tensor ring8_sampler(std::size_t n, Rng& rng);
Tensor grid25_sampler(std::size_t n, Rng& rng);
Tensor gauss1d_sampler(std::size_t n, double mu, double sigma, Rng& rng);

std::vector<std::vector<double>> ring8_modes();
std::vector<std::vector<double>> grid25_modes();

/// p_true: a sampler for synthetic keys or an in-memory array (mnist).
class Dataset {
 public:
  static Dataset synthetic(const DatasetSpec& spec);
  static Dataset in_memory(const DatasetSpec& spec, Tensor samples);
  /// Synthetic keys directly; mnist is loaded from the spec's paths.
  static Dataset open(const DatasetSpec& spec);

  /// n x data_dim batch; in-memory data is drawn with replacement.
  Tensor sample(std::size_t n, Rng& rng) const;
  std::size_t data_dim() const;
  const DatasetSpec& spec() const { return spec_; }
  std::size_t size() const;  // in-memory rows, 0 for samplers

  /// Mixture centers (ring8, grid25), empty otherwise.
  std::vector<std::vector<double>> modes() const;
  /// Per-axis standard deviation of each mixture component.
  double mode_sigma() const;

 private:
  DatasetSpec spec_;
  std::optional<Tensor> data_;
};

/// Exact empirical W1 between equal-size 1D samples.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

struct EnergyEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline constexpr std::size_t kEnergyAllPairsLimit = 2000;

/// 2 E|A-B| - E|A-A'| - E|B-B'| (V-statistic) over all pairs, or over
/// random pairs when either sample exceeds kEnergyAllPairsLimit rows.
/// Symmetric in its arguments bit for bit.
double energy_distance(const Tensor& a, const Tensor& b);

/// Monte-Carlo version drawing `pairs` index pairs per term, with replacement.
EnergyEstimate energy_distance_subsampled(const Tensor& a, const Tensor& b, std::size_t pairs, Rng& rng);

struct ModeStats {
  std::size_t modes_covered = 0;
  double high_quality_fraction = 0.0;
};

/// A sample is near a mode when every coordinate is within `threshold` of the
/// center. A mode is covered when at least n / (4 * #modes) samples are near it.
ModeStats mode_stats(const Tensor& samples, const std::vector<std::vector<double>>& modes, double threshold);

struct EvalReport {
  double energy_distance = 0.0;
  std::optional<double> w1_1d;
  std::optional<std::size_t> modes_covered;
  std::optional<double> high_quality_fraction;
};

/// Metrics of `generated` against `reference` samples from `dataset`.
EvalReport evaluate(const Dataset& dataset, const Tensor& generated, const Tensor& reference);

/// Malformed IDX input. `offset` is the byte position where parsing failed.
class IdxError : public std::runtime_error {
 public:
  IdxError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Images scaled by 1/255 and flattened to rows*cols vectors.
Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

}  // namespace advas
