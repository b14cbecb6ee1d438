#include "advas/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace advas {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("bad number '" + std::string(text) + "' in " + std::string(context));
  }
  return v;
}

Tensor mixture_sample(std::size_t n, const std::vector<std::vector<double>>& modes, double sigma, Rng& rng) {
  Tensor out = Tensor::zeros({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& center = modes[rng.uniform_index(modes.size())];
    out.at(i, 0) = center[0] + sigma * rng.normal();
    out.at(i, 1) = center[1] + sigma * rng.normal();
  }
  return out;
}

double row_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  const std::size_t d = a.shape()[1];
  const double* x = a.data().data() + i * d;
  const double* y = b.data().data() + j * d;
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = x[k] - y[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double mean_pair_distance(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.shape()[0], m = b.shape()[0];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += row_distance(a, i, b, j);
    total += row;
  }
  return total / static_cast<double>(n * m);
}

void require_samples(const Tensor& a, const Tensor& b, std::string_view who) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[1]) {
    throw ShapeError(std::string(who) + ": dimension mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  if (a.shape()[0] == 0 || b.shape()[0] == 0) throw std::invalid_argument(std::string(who) + ": empty sample");
}

// Orders the two samples canonically so the result does not depend on argument order.
bool canonical_less(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return a.shape() < b.shape();
  return std::lexicographical_compare(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

}  // namespace

std::string DatasetSpec::key_string() const {
  switch (key) {
    case DatasetKey::kRing8: return "ring8";
    case DatasetKey::kGrid25: return "grid25";
    case DatasetKey::kGauss1d: return "gauss1d(" + format_double(mu) + "," + format_double(sigma) + ")";
    case DatasetKey::kMnist: return "mnist";
  }
  return "unknown";
}

DatasetSpec DatasetSpec::parse(std::string_view key) {
  DatasetSpec spec;
  if (key == "ring8") {
    spec.key = DatasetKey::kRing8;
  } else if (key == "grid25") {
    spec.key = DatasetKey::kGrid25;
  } else if (key == "mnist") {
    spec.key = DatasetKey::kMnist;
  } else if (key.starts_with("gauss1d(") && key.ends_with(")")) {
    const auto inner = key.substr(8, key.size() - 9);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("gauss1d needs (mu,sigma)");
    spec.key = DatasetKey::kGauss1d;
    spec.mu = parse_double(inner.substr(0, comma), key);
    spec.sigma = parse_double(inner.substr(comma + 1), key);
    if (!(spec.sigma >= 0.0)) throw std::invalid_argument("gauss1d sigma must be >= 0");
  } else {
    throw std::invalid_argument("unknown dataset key '" + std::string(key) + "'");
  }
  return spec;
}

std::vector<std::vector<double>> ring8_modes() {
  std::vector<std::vector<double>> modes;
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    modes.push_back({kRing8Radius * std::cos(angle), kRing8Radius * std::sin(angle)});
  }
  return modes;
}

std::vector<std::vector<double>> grid25_modes() {
  std::vector<std::vector<double>> modes;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) modes.push_back({kGrid25Spacing * i, kGrid25Spacing * j});
  return modes;
}

Tensor ring8_sampler(std::size_t n, Rng& rng) { return mixture_sample(n, ring8_modes(), kRing8Sigma, rng); }

Tensor grid25_sampler(std::size_t n, Rng& rng) { return mixture_sample(n, grid25_modes(), kGrid25Sigma, rng); }

Tensor gauss1d_sampler(std::size_t n, double mu, double sigma, Rng& rng) {
  Tensor out = Tensor::zeros({n, 1});
  for (double& v : out.data()) v = mu + sigma * rng.normal();
  return out;
}

Dataset Dataset::synthetic(const DatasetSpec& spec) {
  if (spec.key == DatasetKey::kMnist) throw std::invalid_argument("mnist is not a synthetic dataset");
  Dataset ds;
  ds.spec_ = spec;
  return ds;
}

Dataset Dataset::in_memory(const DatasetSpec& spec, Tensor samples) {
  if (samples.rank() != 2 || samples.shape()[0] == 0) {
    throw ShapeError("in-memory dataset needs a non-empty (n, d) array, got " + shape_to_string(samples.shape()));
  }
  Dataset ds;
  ds.spec_ = spec;
  ds.data_ = std::move(samples);
  return ds;
}

Dataset Dataset::open(const DatasetSpec& spec) {
  if (spec.key == DatasetKey::kMnist) {
    Dataset ds = load_mnist_idx(spec.images_path, spec.labels_path);
    ds.spec_ = spec;
    return ds;
  }
  return synthetic(spec);
}

Tensor Dataset::sample(std::size_t n, Rng& rng) const {
  if (n < 1) throw std::invalid_argument("Dataset::sample: n must be >= 1");
  if (data_) {
    const std::size_t rows = data_->shape()[0], d = data_->shape()[1];
    Tensor out = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = rng.uniform_index(rows);
      std::copy_n(data_->data().begin() + static_cast<std::ptrdiff_t>(r * d), d,
                  out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
  }
  switch (spec_.key) {
    case DatasetKey::kRing8: return ring8_sampler(n, rng);
    case DatasetKey::kGrid25: return grid25_sampler(n, rng);
    case DatasetKey::kGauss1d: return gauss1d_sampler(n, spec_.mu, spec_.sigma, rng);
    case DatasetKey::kMnist: break;
  }
  throw std::logic_error("mnist dataset has no loaded data");
}

std::size_t Dataset::data_dim() const {
  if (data_) return data_->shape()[1];
  switch (spec_.key) {
    case DatasetKey::kRing8:
    case DatasetKey::kGrid25: return 2;
    case DatasetKey::kGauss1d: return 1;
    case DatasetKey::kMnist: break;
  }
  return 784;
}

std::size_t Dataset::size() const { return data_ ? data_->shape()[0] : 0; }

std::vector<std::vector<double>> Dataset::modes() const {
  if (data_) return {};
  if (spec_.key == DatasetKey::kRing8) return ring8_modes();
  if (spec_.key == DatasetKey::kGrid25) return grid25_modes();
  return {};
}

double Dataset::mode_sigma() const {
  if (spec_.key == DatasetKey::kRing8) return kRing8Sigma;
  if (spec_.key == DatasetKey::kGrid25) return kGrid25Sigma;
  return spec_.sigma;
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("wasserstein1_1d: sample counts differ (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double total = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
  return total / static_cast<double>(sa.size());
}

double energy_distance(const Tensor& a, const Tensor& b) {
  require_samples(a, b, "energy_distance");
  if (canonical_less(b, a)) return energy_distance(b, a);
  if (a.shape()[0] > kEnergyAllPairsLimit || b.shape()[0] > kEnergyAllPairsLimit) {
    Rng rng(0x5EED);
    return energy_distance_subsampled(a, b, 200000, rng).value;
  }
  const double cross = mean_pair_distance(a, b);
  const double within_a = mean_pair_distance(a, a);
  const double within_b = mean_pair_distance(b, b);
  return 2.0 * cross - (within_a + within_b);
}

EnergyEstimate energy_distance_subsampled(const Tensor& a, const Tensor& b, std::size_t pairs, Rng& rng) {
  require_samples(a, b, "energy_distance_subsampled");
  if (pairs < 2) throw std::invalid_argument("energy_distance_subsampled: need at least 2 pairs");
  const std::size_t n = a.shape()[0], m = b.shape()[0];
  auto term = [&](const Tensor& x, std::size_t nx, const Tensor& y, std::size_t ny) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const double d = row_distance(x, rng.uniform_index(nx), y, rng.uniform_index(ny));
      s += d;
      s2 += d * d;
    }
    const double k = static_cast<double>(pairs);
    const double mean = s / k;
    const double var = std::max(0.0, (s2 - k * mean * mean) / (k - 1.0));
    return std::pair{mean, var / k};
  };
  const auto [cross, var_cross] = term(a, n, b, m);
  const auto [within_a, var_a] = term(a, n, a, n);
  const auto [within_b, var_b] = term(b, m, b, m);
  return EnergyEstimate{2.0 * cross - within_a - within_b, std::sqrt(4.0 * var_cross + var_a + var_b)};
}

ModeStats mode_stats(const Tensor& samples, const std::vector<std::vector<double>>& modes, double threshold) {
  if (modes.empty()) throw std::invalid_argument("mode_stats: no modes given");
  if (samples.rank() != 2 || samples.shape()[1] != modes.front().size()) {
    throw ShapeError("mode_stats: samples " + shape_to_string(samples.shape()) + " do not match mode dimension " +
                     std::to_string(modes.front().size()));
  }
  const std::size_t n = samples.shape()[0], d = samples.shape()[1];
  std::vector<std::size_t> counts(modes.size(), 0);
  std::size_t near_any = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool near = false;
    for (std::size_t k = 0; k < modes.size(); ++k) {
      bool inside = true;
      for (std::size_t j = 0; j < d && inside; ++j) inside = std::abs(samples.at(i, j) - modes[k][j]) <= threshold;
      if (inside) {
        ++counts[k];
        near = true;
      }
    }
    if (near) ++near_any;
  }
  ModeStats stats;
  const double needed = static_cast<double>(n) / (4.0 * static_cast<double>(modes.size()));
  for (std::size_t c : counts) {
    if (c > 0 && static_cast<double>(c) >= needed) ++stats.modes_covered;
  }
  stats.high_quality_fraction = n == 0 ? 0.0 : static_cast<double>(near_any) / static_cast<double>(n);
  return stats;
}

EvalReport evaluate(const Dataset& dataset, const Tensor& generated, const Tensor& reference) {
  EvalReport report;
  report.energy_distance = energy_distance(generated, reference);
  if (dataset.data_dim() == 1 && generated.shape()[0] == reference.shape()[0]) {
    report.w1_1d = wasserstein1_1d(generated.data(), reference.data());
  }
  const auto modes = dataset.modes();
  if (!modes.empty()) {
    const auto stats = mode_stats(generated, modes, 3.0 * dataset.mode_sigma());
    report.modes_covered = stats.modes_covered;
    report.high_quality_fraction = stats.high_quality_fraction;
  }
  return report;
}

}  // namespace advas
