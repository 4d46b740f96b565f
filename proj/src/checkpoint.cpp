#include "srm/autoencoder.hpp"
#include "srm/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace srm {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'M', 'C'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get<std::uint8_t>()); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorCode::TruncatedFile, "checkpoint ends early");
    }
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      v |= static_cast<T>(static_cast<T>(bytes_[pos_ + k]) << (8 * k));
    }
    pos_ += sizeof(T);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const MlpModel& model) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.latent_index()));

  // Fingerprint of the activation basis applied to the latent (0 if none).
  std::uint64_t fingerprint = 0;
  for (const auto& layer : model.layers()) {
    if (layer.spec.kind == LayerKind::GeneralizedTanh && layer.spec.in_dim == model.latent_dim()) {
      fingerprint = basis_fingerprint(layer.spec.activation->basis());
      break;
    }
  }
  w.u64(fingerprint);

  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    w.u8(static_cast<std::uint8_t>(layer.spec.kind));
    w.u32(static_cast<std::uint32_t>(layer.spec.in_dim));
    w.u32(static_cast<std::uint32_t>(layer.spec.out_dim));
    switch (layer.spec.kind) {
      case LayerKind::Affine:
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f64(layer.weight(r, c));
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f64(layer.bias[r]);
        break;
      case LayerKind::GeneralizedTanh: {
        const auto& act = *layer.spec.activation;
        const auto& v = act.basis().vectors;
        w.u8(act.apply_correction() ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(v.rows()));
        w.u32(static_cast<std::uint32_t>(v.cols()));
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
          for (Eigen::Index c = 0; c < v.cols(); ++c) w.f64(v(r, c));
        }
        break;
      }
      case LayerKind::ElementwiseTanh:
        break;
    }
  }
  return w.take();
}

MlpModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) {
      throw Error(ErrorCode::BadMagic, "not a model checkpoint");
    }
  }
  const std::uint8_t version = r.u8();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::BadMagic, "unsupported checkpoint version " + std::to_string(version));
  }
  const int latent_index = static_cast<int>(r.u32());
  r.u64();  // fingerprint is informational
  const std::uint32_t count = r.u32();

  struct Params {
    Matrix weight;
    Vector bias;
  };
  std::vector<LayerSpec> specs;
  std::vector<Params> params;
  // Layers sharing a basis share one activation object.
  std::vector<std::shared_ptr<const GeneralizedTanh>> acts;
  for (std::uint32_t k = 0; k < count; ++k) {
    LayerSpec spec;
    const std::uint8_t kind = r.u8();
    if (kind > 2) throw Error(ErrorCode::BadMagic, "unknown layer kind");
    spec.kind = static_cast<LayerKind>(kind);
    spec.in_dim = static_cast<int>(r.u32());
    spec.out_dim = static_cast<int>(r.u32());
    Params p;
    if (spec.kind == LayerKind::Affine) {
      p.weight.resize(spec.out_dim, spec.in_dim);
      for (Eigen::Index i = 0; i < p.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.weight.cols(); ++j) p.weight(i, j) = r.f64();
      }
      p.bias.resize(spec.out_dim);
      for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = r.f64();
    } else if (spec.kind == LayerKind::GeneralizedTanh) {
      const bool correction = r.u8() != 0;
      const auto m = static_cast<Eigen::Index>(r.u32());
      const auto n = static_cast<Eigen::Index>(r.u32());
      RowMatrix v(m, n);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) v(i, j) = r.f64();
      }
      std::shared_ptr<const GeneralizedTanh> found;
      for (const auto& a : acts) {
        if (a->apply_correction() == correction && a->basis().vectors == v) found = a;
      }
      if (!found) {
        found = std::make_shared<const GeneralizedTanh>(
            BasisSet{std::move(v), BasisKind::File, std::nullopt}, correction);
        acts.push_back(found);
      }
      spec.activation = std::move(found);
    }
    specs.push_back(std::move(spec));
    params.push_back(std::move(p));
  }
  if (!r.done()) throw Error(ErrorCode::CountMismatch, "trailing bytes after checkpoint");

  MlpModel model(std::move(specs), latent_index);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& layer = model.layers()[k];
    if (layer.spec.kind != LayerKind::Affine) continue;
    layer.weight = std::move(params[k].weight);
    layer.bias = std::move(params[k].bias);
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model) {
  const auto bytes = serialize_checkpoint(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace srm
