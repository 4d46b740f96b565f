#include "srm/autoencoder.hpp"

#include "srm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace srm {

MlpModel::MlpModel(std::vector<LayerSpec> specs, int latent_index) : latent_index_(latent_index) {
  if (specs.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one layer");
  if (latent_index < 0 || latent_index >= static_cast<int>(specs.size())) {
    throw Error(ErrorCode::InvalidArgument, "latent index outside the layer stack");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.in_dim < 1 || s.out_dim < 1) {
      throw Error(ErrorCode::InvalidArgument, "layer dimensions must be >= 1");
    }
    if (i > 0 && specs[i - 1].out_dim != s.in_dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "layer " + std::to_string(i) + " input does not match previous output");
    }
    if (s.kind != LayerKind::Affine && s.in_dim != s.out_dim) {
      throw Error(ErrorCode::DimensionMismatch, "activation layers must preserve dimension");
    }
    if (s.kind == LayerKind::GeneralizedTanh && (!s.activation || s.activation->dim() != s.in_dim)) {
      throw Error(ErrorCode::DimensionMismatch, "gtanh layer basis does not match its width");
    }
    Layer layer{s, {}, {}};
    if (s.kind == LayerKind::Affine) {
      layer.weight = Matrix::Zero(s.out_dim, s.in_dim);
      layer.bias = Vector::Zero(s.out_dim);
    }
    layers_.push_back(std::move(layer));
  }
}

MlpModel MlpModel::small(int input_dim, std::shared_ptr<const GeneralizedTanh> latent_act) {
  const int n = static_cast<int>(latent_act->dim());
  std::vector<LayerSpec> specs{
      {input_dim, n, LayerKind::Affine, nullptr},
      {n, n, LayerKind::GeneralizedTanh, latent_act},
      {n, input_dim, LayerKind::Affine, nullptr},
  };
  return MlpModel(std::move(specs), 0);
}

MlpModel MlpModel::large(int input_dim, int hidden_dim,
                         std::shared_ptr<const GeneralizedTanh> latent_act,
                         std::shared_ptr<const GeneralizedTanh> hidden_act) {
  const int n = static_cast<int>(latent_act->dim());
  std::vector<LayerSpec> specs{
      {input_dim, hidden_dim, LayerKind::Affine, nullptr},
      {hidden_dim, hidden_dim, LayerKind::GeneralizedTanh, hidden_act},
      {hidden_dim, n, LayerKind::Affine, nullptr},
      {n, n, LayerKind::GeneralizedTanh, latent_act},
      {n, hidden_dim, LayerKind::Affine, nullptr},
      {hidden_dim, hidden_dim, LayerKind::GeneralizedTanh, hidden_act},
      {hidden_dim, input_dim, LayerKind::Affine, nullptr},
  };
  return MlpModel(std::move(specs), 3);
}

std::size_t MlpModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) {
    total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return total;
}

std::vector<RowMatrix> MlpModel::forward(const RowMatrix& batch) const {
  if (batch.cols() != input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "batch width " + std::to_string(batch.cols()) +
                                                  " != model input " +
                                                  std::to_string(input_dim()));
  }
  std::vector<RowMatrix> outs;
  outs.reserve(layers_.size());
  const RowMatrix* x = &batch;
  for (const auto& layer : layers_) {
    switch (layer.spec.kind) {
      case LayerKind::Affine: {
        RowMatrix y = *x * layer.weight.transpose();
        y.rowwise() += layer.bias.transpose();
        outs.push_back(std::move(y));
        break;
      }
      case LayerKind::GeneralizedTanh:
        outs.push_back(layer.spec.activation->apply_rows(*x));
        break;
      case LayerKind::ElementwiseTanh:
        outs.push_back(x->array().tanh().matrix());
        break;
    }
    x = &outs.back();
  }
  return outs;
}

double xavier_normal_std(int fan_in, int fan_out) {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

void xavier_normal_init(MlpModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : model.layers()) {
    if (layer.spec.kind != LayerKind::Affine) continue;
    std::normal_distribution<double> normal(0.0,
                                            xavier_normal_std(layer.spec.in_dim, layer.spec.out_dim));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = normal(rng);
    }
    layer.bias.setZero();
  }
}

double mse_loss(const RowMatrix& prediction, const RowMatrix& target) {
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

double loss_and_gradients(const MlpModel& model, const RowMatrix& batch, const RowMatrix& target,
                          Gradients& grads) {
  const auto outs = model.forward(batch);
  const auto& layers = model.layers();
  if (target.rows() != outs.back().rows() || target.cols() != outs.back().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "target shape does not match reconstruction");
  }
  const double loss = mse_loss(outs.back(), target);

  grads.weight.assign(layers.size(), Matrix());
  grads.bias.assign(layers.size(), Vector());
  RowMatrix upstream = (2.0 / static_cast<double>(target.size())) * (outs.back() - target);
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    const RowMatrix& input = k == 0 ? batch : outs[k - 1];
    switch (layer.spec.kind) {
      case LayerKind::Affine:
        grads.weight[k] = upstream.transpose() * input;
        grads.bias[k] = upstream.colwise().sum().transpose();
        if (k > 0) upstream = upstream * layer.weight;
        break;
      case LayerKind::GeneralizedTanh:
        upstream = layer.spec.activation->backward_rows(input, upstream);
        break;
      case LayerKind::ElementwiseTanh:
        upstream = upstream.cwiseProduct((1.0 - outs[k].array().square()).matrix());
        break;
    }
  }
  return loss;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
  }
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
}

MomentumSgd::MomentumSgd(const MlpModel& model, double learning_rate, double momentum)
    : lr_(learning_rate), mu_(momentum) {
  for (const auto& layer : model.layers()) {
    velocity_.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    velocity_.bias.push_back(Vector::Zero(layer.bias.size()));
  }
}

void MomentumSgd::step(MlpModel& model, const Gradients& grads) {
  auto& layers = model.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].spec.kind != LayerKind::Affine) continue;
    velocity_.weight[k] = mu_ * velocity_.weight[k] - lr_ * grads.weight[k];
    velocity_.bias[k] = mu_ * velocity_.bias[k] - lr_ * grads.bias[k];
    layers[k].weight += velocity_.weight[k];
    layers[k].bias += velocity_.bias[k];
  }
}

Dataset Dataset::filter_labels(const std::vector<int>& keep) const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const int label = labels.empty() ? -1 : labels[static_cast<std::size_t>(i)];
    if (std::find(keep.begin(), keep.end(), label) != keep.end()) rows.push_back(i);
  }
  Dataset out;
  out.images.resize(static_cast<Eigen::Index>(rows.size()), images.cols());
  out.labels.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.images.row(static_cast<Eigen::Index>(k)) = images.row(rows[k]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[k])]);
  }
  return out;
}

namespace {

double dataset_loss(const MlpModel& model, const RowMatrix& images) {
  constexpr Eigen::Index kChunk = 512;
  double total = 0.0;
  for (Eigen::Index start = 0; start < images.rows(); start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, images.rows() - start);
    const RowMatrix chunk = images.middleRows(start, rows);
    total += (model.reconstruct(chunk) - chunk).squaredNorm();
  }
  return total / static_cast<double>(images.size());
}

}  // namespace

TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (data.images.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset width does not match model input");
  }

  TrainResult result{std::move(model), 0.0, {}};
  MlpModel& m = result.model;
  result.initial_loss = dataset_loss(m, data.images);

  MomentumSgd optimizer(m, config.learning_rate, config.momentum);
  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  Gradients grads;
  RowMatrix batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t rows =
          std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      batch.resize(static_cast<Eigen::Index>(rows), data.images.cols());
      for (std::size_t r = 0; r < rows; ++r) {
        batch.row(static_cast<Eigen::Index>(r)) = data.images.row(order[start + r]);
      }
      const double loss = loss_and_gradients(m, batch, batch, grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::DivergenceDetected,
                    "loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      optimizer.step(m, grads);
      loss_sum += loss;
      ++batches;
    }
    result.epoch_losses.push_back(loss_sum / batches);
  }
  return result;
}

RowMatrix latent_rows(const MlpModel& model, const RowMatrix& images) {
  auto outs = model.forward(images);
  return std::move(outs[static_cast<std::size_t>(model.latent_index())]);
}

ActivationSet extract_latents(const MlpModel& model, const RowMatrix& images) {
  return ActivationSet::from_rows(latent_rows(model, images));
}

double rescale_pixel(std::uint8_t pixel) { return 2.0 * pixel / 255.0 - 1.0; }

std::uint8_t unscale_pixel(double value) {
  return static_cast<std::uint8_t>(std::lround((value + 1.0) * 255.0 / 2.0));
}

Dataset synthetic_dataset(int n_dims, int clusters, int samples, std::uint64_t seed, double noise,
                          const RowMatrix* directions) {
  if (clusters < 1) throw Error(ErrorCode::InvalidArgument, "need at least one cluster");
  if (n_dims < 1 || samples < 1) throw Error(ErrorCode::InvalidArgument, "bad dataset shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix centers;
  if (directions) {
    if (directions->cols() != n_dims || directions->rows() != clusters) {
      throw Error(ErrorCode::DimensionMismatch, "cluster directions do not match the request");
    }
    centers = *directions;
  } else {
    centers.resize(clusters, n_dims);
    for (Eigen::Index i = 0; i < centers.rows(); ++i) {
      for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(i, j) = normal(rng);
      centers.row(i).normalize();
    }
  }
  Dataset out;
  out.images.resize(samples, n_dims);
  out.labels.resize(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const int c = s % clusters;
    for (int j = 0; j < n_dims; ++j) out.images(s, j) = centers(c, j) + noise * normal(rng);
    out.labels[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(c % 256);
  }
  return out;
}

}  // namespace srm
