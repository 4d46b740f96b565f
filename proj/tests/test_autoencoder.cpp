#include "srm/autoencoder.hpp"
#include "srm/error.hpp"
#include "srm/io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace srm;
namespace fs = std::filesystem;
using testutil::max_abs;

namespace {

std::shared_ptr<const GeneralizedTanh> simplex_act(int n) {
  return std::make_shared<const GeneralizedTanh>(gen_simplex(n, 1));
}

MlpModel tiny_model(int input, int latent, std::uint64_t seed) {
  auto model = MlpModel::small(input, simplex_act(latent));
  xavier_normal_init(model, seed);
  return model;
}

RowMatrix random_batch(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RowMatrix out(rows, cols);
  for (int r = 0; r < rows; ++r) out.row(r) = testutil::random_gaussian(cols, rng).transpose();
  return out.array().tanh().matrix();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("srm_test_ae_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_be32(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<std::uint8_t>(v >> s));
}

// IDX pair with `count` 2x2 images whose pixels are 0..count*4-1 (mod 256).
void write_idx(const fs::path& dir, std::uint32_t count, std::uint32_t label_count,
               std::uint32_t image_magic = 0x803, std::size_t drop_pixels = 0) {
  std::vector<std::uint8_t> img;
  put_be32(img, image_magic);
  put_be32(img, count);
  put_be32(img, 2);
  put_be32(img, 2);
  for (std::uint32_t i = 0; i < count * 4; ++i) img.push_back(static_cast<std::uint8_t>(i));
  img.resize(img.size() - drop_pixels);
  std::vector<std::uint8_t> lab;
  put_be32(lab, 0x801);
  put_be32(lab, label_count);
  for (std::uint32_t i = 0; i < label_count; ++i) lab.push_back(static_cast<std::uint8_t>(i % 10));
  write_bytes(dir / "images", img);
  write_bytes(dir / "labels", lab);
}

ErrorCode load_error(const fs::path& dir) {
  try {
    load_mnist_idx(dir / "images", dir / "labels");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a load failure");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("model shapes") {
  const auto small = MlpModel::small(784, simplex_act(10));
  CHECK(small.latent_dim() == 10);
  CHECK(small.input_dim() == 784);
  CHECK(small.output_dim() == 784);
  CHECK(small.parameter_count() == 784 * 10 + 10 + 10 * 784 + 784);
  const auto hidden = std::make_shared<const GeneralizedTanh>(gen_elementwise(32, 3));
  const auto large = MlpModel::large(784, 32, simplex_act(10), hidden);
  CHECK(large.latent_index() == 3);
  CHECK(large.latent_dim() == 10);
  CHECK_THROWS_AS(MlpModel({{4, 3, LayerKind::Affine, nullptr}, {4, 4, LayerKind::Affine, nullptr}}, 0),
                  Error);
  CHECK_THROWS_AS(MlpModel({{4, 3, LayerKind::Affine, nullptr}}, 1), Error);
}

TEST_CASE("Xavier-normal initialisation") {
  CHECK(xavier_normal_std(5, 5) == doctest::Approx(std::sqrt(0.2)));
  auto a = tiny_model(6, 3, 9);
  auto b = tiny_model(6, 3, 9);
  auto c = tiny_model(6, 3, 10);
  CHECK(a.layers()[0].weight == b.layers()[0].weight);
  CHECK(a.layers()[0].weight != c.layers()[0].weight);
  CHECK(max_abs(a.layers()[0].bias) == 0.0);

  MlpModel big({{784, 784, LayerKind::Affine, nullptr}}, 0);
  xavier_normal_init(big, 1);
  const Matrix& w = big.layers()[0].weight;
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
  CHECK(std::abs(sd / xavier_normal_std(784, 784) - 1.0) < 0.05);
}

TEST_CASE("forward pass basics") {
  auto model = tiny_model(5, 2, 1);
  for (auto& layer : model.layers()) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  CHECK(max_abs(model.reconstruct(random_batch(4, 5, 2))) == 0.0);

  MlpModel ident({{3, 3, LayerKind::Affine, nullptr}}, 0);
  ident.layers()[0].weight = Matrix::Identity(3, 3);
  ident.layers()[0].bias.setZero();
  const RowMatrix x = random_batch(5, 3, 3);
  CHECK(ident.reconstruct(x) == x);
  CHECK_THROWS_AS(model.forward(random_batch(2, 4, 1)), Error);
}

TEST_CASE("loss gradients match finite differences") {
  const auto hidden = std::make_shared<const GeneralizedTanh>(gen_random(4, 7, 2));
  auto model = MlpModel::large(6, 4, std::make_shared<const GeneralizedTanh>(gen_simplex(3, 5)),
                               hidden);
  xavier_normal_init(model, 4);
  const RowMatrix x = random_batch(5, 6, 8);
  Gradients grads;
  loss_and_gradients(model, x, x, grads);
  std::mt19937_64 rng(12);
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    if (model.layers()[k].spec.kind != LayerKind::Affine) continue;
    for (int trial = 0; trial < 5; ++trial, ++checked) {
      auto& w = model.layers()[k].weight;
      const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.rows()));
      const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.cols()));
      const double saved = w(i, j);
      w(i, j) = saved + h;
      const double up = mse_loss(model.reconstruct(x), x);
      w(i, j) = saved - h;
      const double down = mse_loss(model.reconstruct(x), x);
      w(i, j) = saved;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(grads.weight[k](i, j) - fd) <= 1e-4 * std::max(1e-3, std::abs(fd)));
    }
    auto& bias = model.layers()[k].bias;
    const double saved = bias[0];
    bias[0] = saved + h;
    const double up = mse_loss(model.reconstruct(x), x);
    bias[0] = saved - h;
    const double down = mse_loss(model.reconstruct(x), x);
    bias[0] = saved;
    CHECK(std::abs(grads.bias[k][0] - (up - down) / (2 * h)) < 1e-7);
  }
  CHECK(checked >= 20);
}

TEST_CASE("momentum SGD") {
  SUBCASE("zero learning rate leaves weights alone") {
    auto model = tiny_model(5, 2, 3);
    const auto before = model.layers()[0].weight;
    const RowMatrix x = random_batch(4, 5, 1);
    Gradients g;
    loss_and_gradients(model, x, x, g);
    MomentumSgd opt(model, 0.0, 0.9);
    for (int k = 0; k < 3; ++k) opt.step(model, g);
    CHECK(model.layers()[0].weight == before);
  }
  SUBCASE("one parameter, two steps") {
    MlpModel model({{1, 1, LayerKind::Affine, nullptr}}, 0);
    model.layers()[0].weight(0, 0) = 1.0;
    model.layers()[0].bias[0] = 0.0;
    Gradients g;
    g.weight = {Matrix::Constant(1, 1, 2.0)};
    g.bias = {Vector::Zero(1)};
    MomentumSgd opt(model, 0.1, 0.5);
    opt.step(model, g);
    CHECK(model.layers()[0].weight(0, 0) == doctest::Approx(0.8));
    opt.step(model, g);
    // v = 0.5 * -0.2 - 0.2 = -0.3
    CHECK(model.layers()[0].weight(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("zero momentum is plain SGD") {
    const Dataset data = synthetic_dataset(6, 3, 60, 5);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.momentum = 0.0;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    const auto trained = train(tiny_model(6, 2, 2), data, cfg);

    auto manual = tiny_model(6, 2, 2);
    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(60);
    std::iota(order.begin(), order.end(), 0);
    Gradients g;
    for (int e = 0; e < cfg.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t s = 0; s < order.size(); s += 8) {
        const std::size_t rows = std::min<std::size_t>(8, order.size() - s);
        RowMatrix batch(static_cast<Eigen::Index>(rows), 6);
        for (std::size_t r = 0; r < rows; ++r) batch.row(static_cast<Eigen::Index>(r)) = data.images.row(order[s + r]);
        loss_and_gradients(manual, batch, batch, g);
        for (std::size_t k = 0; k < manual.layers().size(); ++k) {
          if (manual.layers()[k].spec.kind != LayerKind::Affine) continue;
          manual.layers()[k].weight -= cfg.learning_rate * g.weight[k];
          manual.layers()[k].bias -= cfg.learning_rate * g.bias[k];
        }
      }
    }
    for (std::size_t k = 0; k < manual.layers().size(); ++k) {
      CHECK(manual.layers()[k].weight == trained.model.layers()[k].weight);
    }
  }
  SUBCASE("config validation") {
    TrainConfig cfg;
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

TEST_CASE("training on synthetic clusters") {
  const Dataset data = synthetic_dataset(12, 4, 400, 3);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  const auto a = train(tiny_model(12, 3, 1), data, cfg);
  const auto b = train(tiny_model(12, 3, 1), data, cfg);
  CHECK(a.epoch_losses.size() == 30);
  CHECK(a.epoch_losses.back() < 0.5 * a.initial_loss);
  CHECK(a.epoch_losses == b.epoch_losses);
  CHECK(serialize_checkpoint(a.model) == serialize_checkpoint(b.model));
  CHECK_THROWS_AS(train(tiny_model(5, 3, 1), data, cfg), Error);
}

TEST_CASE("latent extraction") {
  const auto model = tiny_model(8, 3, 4);
  const RowMatrix x = random_batch(9, 8, 1);
  const RowMatrix z = latent_rows(model, x);
  CHECK(z.rows() == 9);
  CHECK(z.cols() == 3);
  CHECK(max_abs(z - x * model.layers()[0].weight.transpose()) < 1e-12);
  CHECK(extract_latents(model, x).size() == 9);
}

TEST_CASE("pixel rescaling round-trips") {
  CHECK(rescale_pixel(0) == -1.0);
  CHECK(rescale_pixel(255) == 1.0);
  for (int p = 0; p < 256; ++p) {
    const auto px = static_cast<std::uint8_t>(p);
    CHECK(unscale_pixel(rescale_pixel(px)) == px);
  }
}

TEST_CASE("IDX loading") {
  const auto dir = scratch_dir("idx");
  SUBCASE("well-formed files") {
    write_idx(dir, 5, 5);
    const auto data = load_mnist_idx(dir / "images", dir / "labels");
    CHECK(data.size() == 5);
    CHECK(data.images.cols() == 4);
    CHECK(data.images(1, 2) == rescale_pixel(6));
    CHECK(data.labels[3] == 3);
    const auto few = load_mnist_idx(dir / "images", dir / "labels", 2);
    CHECK(few.size() == 2);
    CHECK(few.images == data.images.topRows(2));
    const auto filtered = data.filter_labels({1, 3});
    CHECK(filtered.size() == 2);
    CHECK(filtered.images.row(1) == data.images.row(3));
  }
  SUBCASE("bad magic") {
    write_idx(dir, 5, 5, 0x804);
    CHECK(load_error(dir) == ErrorCode::BadMagic);
  }
  SUBCASE("truncated pixels") {
    write_idx(dir, 5, 5, 0x803, 3);
    CHECK(load_error(dir) == ErrorCode::TruncatedFile);
  }
  SUBCASE("count mismatch") {
    write_idx(dir, 5, 4);
    CHECK(load_error(dir) == ErrorCode::CountMismatch);
  }
  SUBCASE("missing file") {
    CHECK(load_error(dir / "nowhere") == ErrorCode::IoFailure);
  }
  fs::remove_all(dir);
}

TEST_CASE("checkpoints") {
  const auto hidden = std::make_shared<const GeneralizedTanh>(gen_elementwise(6, 2));
  auto model = MlpModel::large(9, 6, simplex_act(3), hidden);
  xavier_normal_init(model, 7);
  const auto bytes = serialize_checkpoint(model);
  CHECK(bytes.size() > 5);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SRMC");
  const auto back = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);
  const RowMatrix x = random_batch(3, 9, 5);
  CHECK(back.reconstruct(x) == model.reconstruct(x));
  // The two hidden activations share one object after loading.
  CHECK(back.layers()[1].spec.activation == back.layers()[5].spec.activation);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), Error);
  auto cut = bytes;
  cut.resize(cut.size() - 1);
  try {
    deserialize_checkpoint(cut);
    FAIL("expected TruncatedFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncatedFile);
  }
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(deserialize_checkpoint(extra), Error);

  const auto dir = scratch_dir("ckpt");
  save_checkpoint(dir / "m.bin", model);
  CHECK(serialize_checkpoint(load_checkpoint(dir / "m.bin")) == bytes);
  fs::remove_all(dir);
}

TEST_CASE("synthetic datasets") {
  const auto a = synthetic_dataset(5, 3, 30, 2);
  const auto b = synthetic_dataset(5, 3, 30, 2);
  CHECK(a.images == b.images);
  CHECK(a.labels[4] == 1);
  RowMatrix dirs = RowMatrix::Identity(2, 5);
  const auto c = synthetic_dataset(5, 2, 40, 1, 0.0, &dirs);
  CHECK(c.images.row(3) == dirs.row(1));
  CHECK_THROWS_AS(synthetic_dataset(5, 3, 30, 2, 0.05, &dirs), Error);
}

TEST_CASE("MNIST training" * doctest::skip(!testutil::have_mnist())) {
  const auto train_files = mnist_files(testutil::mnist_dir(), true);
  const auto test_files = mnist_files(testutil::mnist_dir(), false);
  const auto train_set = load_mnist_idx(train_files.images, train_files.labels);
  const auto test_set = load_mnist_idx(test_files.images, test_files.labels);

  ThompsonConfig tc;
  tc.seed = 1;
  const auto basis = gen_thompson(10, 20, tc).basis;
  const auto act = std::make_shared<const GeneralizedTanh>(basis);

  SUBCASE("untrained latents are generally unrelated to the self-SRM") {
    SrmConfig cfg;
    cfg.epsilon = 0.8;
    const auto planes = plane_set(basis, PlaneMode::Combination);
    const auto self = self_srm(basis, planes, cfg);
    int uncorrelated = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      auto model = MlpModel::small(784, act);
      xavier_normal_init(model, seed);
      const auto ens = run_ensemble(extract_latents(model, test_set.images), basis, planes, cfg);
      const double r = curve_correlation(ens.mean_curve, self.mean_curve);
      MESSAGE("init seed " << seed << ": r = " << r);
      if (std::abs(r) < 0.3) ++uncorrelated;
    }
    CHECK(uncorrelated >= 5);
  }
  SUBCASE("default recipe halves the loss and improves on epoch 1") {
    int improved = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto model = MlpModel::small(784, act);
      xavier_normal_init(model, seed);
      TrainConfig cfg;
      cfg.seed = seed;
      const auto result = train(std::move(model), train_set, cfg);
      for (double l : result.epoch_losses) CHECK(std::isfinite(l));
      if (seed == 1) CHECK(result.epoch_losses.back() < 0.5 * result.initial_loss);
      if (result.epoch_losses.back() < result.epoch_losses.front()) ++improved;
    }
    CHECK(improved >= 4);
  }
}
