#pragma once

// A small isotropic MLP autoencoder: affine layers, generalized-tanh
// activations, Xavier-normal init and minibatch heavy-ball momentum SGD.

#include "srm/activation.hpp"
#include "srm/srm.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace srm {

enum class LayerKind : std::uint8_t { Affine = 0, GeneralizedTanh = 1, ElementwiseTanh = 2 };

struct LayerSpec {
  int in_dim = 1;
  int out_dim = 1;
  LayerKind kind = LayerKind::Affine;
  // Required for GeneralizedTanh layers; its dimension must equal in_dim.
  std::shared_ptr<const GeneralizedTanh> activation;
};

struct Layer {
  LayerSpec spec;
  Matrix weight;  // out x in, affine layers only
  Vector bias;    // out, affine layers only
};

class MlpModel {
 public:
  MlpModel(std::vector<LayerSpec> specs, int latent_index);

  // 784 -> n affine (latent, no activation before it) -> gtanh -> n -> 784.
  static MlpModel small(int input_dim, std::shared_ptr<const GeneralizedTanh> latent_act);
  // 784 -> h -> gtanh_h -> n -> gtanh_n (latent) -> h -> gtanh_h -> 784.
  static MlpModel large(int input_dim, int hidden_dim,
                        std::shared_ptr<const GeneralizedTanh> latent_act,
                        std::shared_ptr<const GeneralizedTanh> hidden_act);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  int latent_index() const { return latent_index_; }
  int input_dim() const { return layers_.front().spec.in_dim; }
  int output_dim() const { return layers_.back().spec.out_dim; }
  int latent_dim() const { return layers_[static_cast<std::size_t>(latent_index_)].spec.out_dim; }
  std::size_t parameter_count() const;

  // Every layer's output, in order (the last entry is the reconstruction).
  std::vector<RowMatrix> forward(const RowMatrix& batch) const;
  RowMatrix reconstruct(const RowMatrix& batch) const { return forward(batch).back(); }

 private:
  std::vector<Layer> layers_;
  int latent_index_;
};

// Weights ~ N(0, 2 / (fan_in + fan_out)), biases zero.
void xavier_normal_init(MlpModel& model, std::uint64_t seed);
double xavier_normal_std(int fan_in, int fan_out);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

// Mean squared reconstruction error over all elements of the batch, and its
// gradient with respect to every affine parameter.
double mse_loss(const RowMatrix& prediction, const RowMatrix& target);
double loss_and_gradients(const MlpModel& model, const RowMatrix& batch, const RowMatrix& target,
                          Gradients& grads);

struct TrainConfig {
  int batch_size = 24;
  double learning_rate = 0.08;
  double momentum = 0.9;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

// v <- mu v - lr g ; w <- w + v
class MomentumSgd {
 public:
  MomentumSgd(const MlpModel& model, double learning_rate, double momentum);
  void step(MlpModel& model, const Gradients& grads);

 private:
  double lr_;
  double mu_;
  Gradients velocity_;
};

struct Dataset {
  RowMatrix images;  // rows in [-1, 1]
  std::vector<std::uint8_t> labels;

  Eigen::Index size() const { return images.rows(); }
  // Rows whose label is in `keep`, in original order.
  Dataset filter_labels(const std::vector<int>& keep) const;
};

struct TrainResult {
  MlpModel model;
  double initial_loss = 0.0;          // full-dataset MSE before the first update
  std::vector<double> epoch_losses;   // mean minibatch MSE per epoch
};

TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config);

ActivationSet extract_latents(const MlpModel& model, const RowMatrix& images);
RowMatrix latent_rows(const MlpModel& model, const RowMatrix& images);

// pixel -> 2 * pixel / 255 - 1
double rescale_pixel(std::uint8_t pixel);
std::uint8_t unscale_pixel(double value);

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path,
                       std::optional<std::size_t> limit = std::nullopt);

// Standard file names inside an MNIST directory.
struct MnistFiles {
  std::filesystem::path images;
  std::filesystem::path labels;
};
MnistFiles mnist_files(const std::filesystem::path& dir, bool train);

// Gaussian clusters around unit directions (random ones when `directions` is
// empty), isotropic noise sigma = noise.
Dataset synthetic_dataset(int n_dims, int clusters, int samples, std::uint64_t seed,
                          double noise = 0.05, const RowMatrix* directions = nullptr);

// Binary checkpoint: magic "SRMC", version byte, then little-endian fields.
inline constexpr std::uint8_t kCheckpointVersion = 1;
std::vector<std::uint8_t> serialize_checkpoint(const MlpModel& model);
MlpModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace srm
