#include <fstream>
#include <iterator>

#include "advas/evalkit.hpp"

namespace advas {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, std::string_view what) {
  if (offset + 4 > bytes.size()) throw IdxError("truncated file while reading " + std::string(what), bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic number");
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "bad magic 0x%08x (expected 0x%08x)", magic, expected);
    throw IdxError(buf, 0);
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kImagesMagic);
  IdxImages images;
  images.count = read_be32(bytes, 4, "image count");
  images.rows = read_be32(bytes, 8, "row count");
  images.cols = read_be32(bytes, 12, "column count");
  std::size_t payload = 0;
  if (__builtin_mul_overflow(images.count, images.rows, &payload) ||
      __builtin_mul_overflow(payload, images.cols, &payload) || payload > bytes.size()) {
    throw IdxError("truncated pixel data", bytes.size());
  }
  if (bytes.size() < 16 + payload) throw IdxError("truncated pixel data", bytes.size());
  images.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return images;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kLabelsMagic);
  const std::size_t count = read_be32(bytes, 4, "label count");
  if (bytes.size() < 8 + count) throw IdxError("truncated label data", bytes.size());
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count));
}

Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);
  const auto images = parse_idx_images(image_bytes);
  const auto labels = parse_idx_labels(label_bytes);
  if (labels.size() != images.count) {
    throw IdxError("label count " + std::to_string(labels.size()) + " does not match image count " +
                       std::to_string(images.count),
                   4);
  }
  const std::size_t dim = images.rows * images.cols;
  Tensor data = Tensor::zeros({images.count, dim});
  auto out = data.data();
  for (std::size_t i = 0; i < images.pixels.size(); ++i) out[i] = images.pixels[i] / 255.0;
  DatasetSpec spec;
  spec.key = DatasetKey::kMnist;
  spec.images_path = images_path;
  spec.labels_path = labels_path;
  return Dataset::in_memory(spec, std::move(data));
}

}  // namespace advas
