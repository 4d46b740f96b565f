#include "srm/autoencoder.hpp"
#include "srm/error.hpp"
#include "srm/io.hpp"

#include <cstring>

namespace srm {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const std::string& what) {
  if (bytes.size() < offset + 4) {
    throw Error(ErrorCode::TruncatedFile, what + " header is truncated");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

}  // namespace

MnistFiles mnist_files(const std::filesystem::path& dir, bool train) {
  const std::string prefix = train ? "train" : "t10k";
  return {dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte")};
}

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path, std::optional<std::size_t> limit) {
  const std::string images = io::read_text(images_path);
  const std::string labels = io::read_text(labels_path);

  if (read_be32(images, 0, "image file") != kImagesMagic) {
    throw Error(ErrorCode::BadMagic, images_path.string() + " is not an IDX3 image file");
  }
  if (read_be32(labels, 0, "label file") != kLabelsMagic) {
    throw Error(ErrorCode::BadMagic, labels_path.string() + " is not an IDX1 label file");
  }
  const std::size_t count = read_be32(images, 4, "image file");
  const std::size_t rows = read_be32(images, 8, "image file");
  const std::size_t cols = read_be32(images, 12, "image file");
  const std::size_t label_count = read_be32(labels, 4, "label file");
  if (count != label_count) {
    throw Error(ErrorCode::CountMismatch, std::to_string(count) + " images but " +
                                              std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels) {
    throw Error(ErrorCode::TruncatedFile, images_path.string() + " is shorter than its header");
  }
  if (labels.size() < 8 + count) {
    throw Error(ErrorCode::TruncatedFile, labels_path.string() + " is shorter than its header");
  }

  const std::size_t take = limit ? std::min(*limit, count) : count;
  Dataset data;
  data.images.resize(static_cast<Eigen::Index>(take), static_cast<Eigen::Index>(pixels));
  data.labels.resize(take);
  const auto* px = reinterpret_cast<const std::uint8_t*>(images.data() + 16);
  for (std::size_t i = 0; i < take; ++i) {
    for (std::size_t j = 0; j < pixels; ++j) {
      data.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rescale_pixel(px[i * pixels + j]);
    }
    data.labels[i] = static_cast<std::uint8_t>(labels[8 + i]);
  }
  return data;
}

}  // namespace srm
