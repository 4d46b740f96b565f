#include "srm/cli.hpp"

#include "srm/autoencoder.hpp"
#include "srm/error.hpp"
#include "srm/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace srm::cli {

namespace fs = std::filesystem;

namespace {

int to_exit(ErrorCode code) {
  switch (classify(code)) {
    case ErrorClass::Validation: return kValidation;
    case ErrorClass::Io: return kIo;
    case ErrorClass::Numeric: return kNumeric;
  }
  return kNumeric;
}

ExecutionOptions exec_from_env() {
  ExecutionOptions exec;
  const char* env = std::getenv("SRM_THREADS");
  if (env == nullptr || *env == '\0') return exec;
  int threads = 0;
  const std::string_view text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), threads);
  if (ec != std::errc{} || ptr != text.data() + text.size() || threads < 1) {
    throw Error(ErrorCode::InvalidArgument, "SRM_THREADS must be a positive integer");
  }
  exec.threads = threads;
  return exec;
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::IoFailure, what + " not found: " + path.string());
  }
}

// Loads the images for one split, reporting missing files as IO errors
// rather than whatever the reader trips over first.
Dataset load_split(const fs::path& dir, bool train, std::optional<std::size_t> limit) {
  const auto files = mnist_files(dir, train);
  require_file(files.images, "image file");
  require_file(files.labels, "label file");
  return load_mnist_idx(files.images, files.labels, limit);
}

std::optional<std::size_t> limit_opt(long long limit) {
  if (limit < 0) return std::nullopt;
  return static_cast<std::size_t>(limit);
}

std::string fmt(double v) { return io::format_double(v); }

// ---- gen-basis ----------------------------------------------------------

struct GenBasisArgs {
  std::string kind;
  int n = 0;
  int m = -1;
  long long seed = -1;
  int iterations = 5000;
  double lr = 0.05;
  std::string out;
};

struct GeneratedBasis {
  BasisSet basis;
  std::optional<ThompsonResult> thompson;
};

GeneratedBasis generate_basis(const GenBasisArgs& a) {
  const BasisKind kind = parse_basis_kind(a.kind);
  if (a.n < 1) throw Error(ErrorCode::InvalidArgument, "--n must be at least 1");
  std::optional<std::uint64_t> seed;
  if (a.seed >= 0) seed = static_cast<std::uint64_t>(a.seed);

  auto expect_m = [&](int m) {
    if (a.m >= 0 && a.m != m) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(to_string(kind)) + " basis in R^" + std::to_string(a.n) + " has m=" +
                      std::to_string(m) + ", got --m " + std::to_string(a.m));
    }
  };
  auto need_m = [&] {
    if (a.m < 1) throw Error(ErrorCode::InvalidArgument, "--m is required for this kind");
  };

  GeneratedBasis g;
  switch (kind) {
    case BasisKind::Standard:
      expect_m(a.n);
      g.basis = gen_standard(a.n);
      break;
    case BasisKind::Elementwise:
      expect_m(2 * a.n);
      g.basis = gen_elementwise(a.n, seed);
      break;
    case BasisKind::Simplex:
      expect_m(a.n + 1);
      g.basis = gen_simplex(a.n, seed);
      break;
    case BasisKind::Random:
      need_m();
      g.basis = gen_random(a.n, a.m, seed.value_or(0));
      break;
    case BasisKind::Thompson: {
      need_m();
      ThompsonConfig cfg;
      cfg.seed = seed.value_or(0);
      cfg.iterations = a.iterations;
      cfg.learning_rate = a.lr;
      g.thompson = gen_thompson(a.n, a.m, cfg);
      g.basis = g.thompson->basis;
      break;
    }
    case BasisKind::File:
      throw Error(ErrorCode::InvalidArgument, "kind 'file' cannot be generated");
  }
  return g;
}

int cmd_gen_basis(const GenBasisArgs& a, std::ostream& out) {
  const auto g = generate_basis(a);
  if (a.out.empty()) {
    out << io::format_basis_csv(g.basis);
    return kOk;
  }
  io::write_basis_csv(a.out, g.basis);
  out << "wrote " << g.basis.count() << "x" << g.basis.dim() << " basis to " << a.out << "\n";
  if (g.thompson) {
    out << "thompson final_energy=" << fmt(g.thompson->final_energy())
        << " steps=" << g.thompson->steps
        << " converged=" << (g.thompson->converged ? "true" : "false") << "\n";
  }
  return kOk;
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string basis;
  std::string out;
  std::string arch = "small";
  int hidden = 128;
  int epochs = 100;
  int batch = 24;
  double lr = 0.08;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  long long limit = -1;
  std::string labels;
};

MlpModel build_model(const std::string& arch, int input_dim, const BasisSet& basis, int hidden,
                     std::uint64_t seed) {
  auto latent_act = std::make_shared<const GeneralizedTanh>(basis);
  if (arch == "small") return MlpModel::small(input_dim, latent_act);
  if (arch == "large") {
    if (hidden < 2) throw Error(ErrorCode::InvalidArgument, "--hidden must be at least 2");
    auto hidden_act = std::make_shared<const GeneralizedTanh>(gen_elementwise(hidden, seed));
    return MlpModel::large(input_dim, hidden, latent_act, hidden_act);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown architecture '" + arch + "'");
}

struct TrainOutcome {
  MlpModel initial;
  std::optional<TrainResult> trained;
};

TrainOutcome run_training(const TrainArgs& a, const BasisSet& basis, const Dataset& data,
                          std::ostream& out) {
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.momentum = a.momentum;
  cfg.seed = a.seed;
  cfg.validate();

  MlpModel model = build_model(a.arch, static_cast<int>(data.images.cols()), basis, a.hidden,
                               a.seed);
  xavier_normal_init(model, a.seed);

  const fs::path dir(a.out);
  save_checkpoint(dir / "checkpoint_init.bin", model);
  TrainOutcome outcome{model, std::nullopt};
  if (a.epochs == 0) {
    out << "epochs=0: wrote untrained checkpoint only\n";
    return outcome;
  }

  outcome.trained = train(std::move(model), data, cfg);
  const auto& r = *outcome.trained;
  save_checkpoint(dir / "checkpoint.bin", r.model);
  std::string csv = "epoch,loss\n0," + fmt(r.initial_loss) + "\n";
  for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt(r.epoch_losses[e]) + "\n";
  }
  io::write_text(dir / "loss.csv", csv);
  out << "trained " << r.epoch_losses.size() << " epochs on " << data.size()
      << " samples: loss " << fmt(r.initial_loss) << " -> " << fmt(r.epoch_losses.back()) << "\n";
  return outcome;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require_file(a.basis, "basis file");
  const BasisSet basis = io::read_basis_csv(a.basis);
  // Validate everything cheap before touching the dataset.
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.momentum = a.momentum;
  cfg.validate();
  Dataset data = load_split(a.dataset, true, limit_opt(a.limit));
  if (!a.labels.empty()) data = data.filter_labels(parse_labels(a.labels));
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no training samples selected");
  run_training(a, basis, data, out);
  return kOk;
}

// ---- srm ----------------------------------------------------------------

struct SrmArgs {
  std::string basis;
  std::string checkpoint;
  std::string activations;
  std::string dataset;
  std::string split = "test";
  long long limit = -1;
  std::string labels;
  double epsilon = 0.9;
  int theta_samples = 360;
  std::string variant = "plain";
  std::string mode = "combination";
  std::string out;
  bool svg = false;
};

void write_outputs(const fs::path& dir, const SrmEnsemble& ens, const SrmEnsemble* reference,
                   bool svg, const std::string& title) {
  io::write_ensemble_csv(dir / "ensemble.csv", ens);
  io::write_summary_json(dir / "summary.json", ens, reference);
  if (svg) io::write_ensemble_svg(dir / "ensemble.svg", ens, io::SvgOptions{640, 360, title});
}

void report(std::ostream& out, const std::string& tag, const SrmEnsemble& ens,
            const SrmEnsemble* reference) {
  out << tag << ": planes=" << ens.curves.size() << " skipped=" << ens.skipped_planes.size()
      << " mean_amplitude=" << fmt(ens.mean_amplitude());
  if (reference) {
    std::string r = "undefined";
    try {
      r = fmt(curve_correlation(ens.mean_curve, reference->mean_curve));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
    }
    out << " r_vs_self=" << r;
  }
  out << "\n";
}

int cmd_srm(const SrmArgs& a, std::ostream& out, std::ostream& err) {
  SrmConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.theta_samples = a.theta_samples;
  cfg.variant = parse_variant(a.variant);
  cfg.mode = parse_plane_mode(a.mode);
  cfg.validate();
  if (a.split != "test" && a.split != "train") {
    throw Error(ErrorCode::InvalidArgument, "--split must be 'test' or 'train'");
  }
  const auto exec = exec_from_env();

  require_file(a.basis, "basis file");
  const BasisSet basis = io::read_basis_csv(a.basis);
  const PlaneSet planes = plane_set(basis, cfg.mode);
  const fs::path dir(a.out);

  if (cfg.variant == SrmVariant::Self) {
    const auto ens = run_ensemble(ActivationSet{}, basis, planes, cfg, exec);
    write_outputs(dir, ens, nullptr, a.svg, "self-SRM");
    report(out, "self", ens, nullptr);
    return kOk;
  }

  if (a.checkpoint.empty() == a.activations.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --checkpoint or --activations");
  }
  const std::vector<int> labels = a.labels.empty() ? std::vector<int>{} : parse_labels(a.labels);

  SrmConfig self_cfg = cfg;
  self_cfg.variant = SrmVariant::Self;
  // Self-SRM of the basis is the reference shape for every curve below.
  const auto reference = run_ensemble(ActivationSet{}, basis, planes, self_cfg, exec);

  if (!a.activations.empty()) {
    if (!labels.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--labels needs --checkpoint and --dataset");
    }
    require_file(a.activations, "activation file");
    const RowMatrix raw = io::read_matrix_csv(a.activations);
    if (raw.cols() != basis.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "activations have " + std::to_string(raw.cols()) + " columns, basis has " +
                      std::to_string(basis.dim()));
    }
    const auto data = ActivationSet::from_rows(raw);
    const auto ens = run_ensemble(data, basis, planes, cfg, exec);
    write_outputs(dir, ens, &reference, a.svg, std::string(to_string(cfg.variant)) + " SRM");
    report(out, "activations", ens, &reference);
    return kOk;
  }

  require_file(a.checkpoint, "checkpoint");
  const MlpModel model = load_checkpoint(a.checkpoint);
  if (model.latent_dim() != basis.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "checkpoint latent has " + std::to_string(model.latent_dim()) +
                    " dimensions, basis has " + std::to_string(basis.dim()));
  }
  if (a.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "--checkpoint needs --dataset");
  const Dataset data = load_split(a.dataset, a.split == "train", limit_opt(a.limit));
  if (data.images.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset rows do not match the model input");
  }

  if (labels.empty()) {
    const auto ens = run_ensemble(extract_latents(model, data.images), basis, planes, cfg, exec);
    write_outputs(dir, ens, &reference, a.svg, std::string(to_string(cfg.variant)) + " SRM");
    report(out, "all", ens, &reference);
    return kOk;
  }

  for (int label : labels) {
    const Dataset subset = data.filter_labels({label});
    if (subset.size() == 0) {
      err << "warning: no samples with label " << label << "; skipped\n";
      continue;
    }
    const auto ens = run_ensemble(extract_latents(model, subset.images), basis, planes, cfg, exec);
    const std::string tag = "digit_" + std::to_string(label);
    write_outputs(dir / tag, ens, &reference, a.svg,
                  std::string(to_string(cfg.variant)) + " SRM, digit " + std::to_string(label));
    report(out, tag, ens, &reference);
  }
  return kOk;
}

// ---- expected -----------------------------------------------------------

struct ExpectedArgs {
  std::vector<int> n{3, 8, 24};
  std::vector<double> epsilon{0.0, 0.5, 0.8, 0.9};
  std::size_t samples = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_expected(const ExpectedArgs& a, std::ostream& out) {
  std::string csv = "n,epsilon,analytic,mc,mc_se\n";
  for (int n : a.n) {
    for (double eps : a.epsilon) {
      const double analytic = expected_uniform_fraction(n, eps);
      const auto mc = mc_uniform_oracle(n, eps, a.samples, a.seed);
      csv += std::to_string(n) + "," + fmt(eps) + "," + fmt(analytic) + "," + fmt(mc.fraction) +
             "," + fmt(mc.standard_error) + "\n";
    }
  }
  out << csv;
  if (!a.out.empty()) io::write_text(a.out, csv);
  return kOk;
}

// ---- repro-fig1 ---------------------------------------------------------

struct ReproArgs {
  std::string dataset;
  std::string out;
  int n = 10;
  int m = 20;
  std::uint64_t seed = 0;
  int epochs = 100;
  int batch = 24;
  double lr = 0.08;
  double momentum = 0.9;
  long long limit = 10000;
  long long eval_limit = -1;
  double epsilon = 0.9;
  int theta_samples = 360;
  std::string mode = "combination";
};

int cmd_repro_fig1(const ReproArgs& a, std::ostream& out) {
  SrmConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.theta_samples = a.theta_samples;
  cfg.mode = parse_plane_mode(a.mode);
  cfg.validate();
  const auto exec = exec_from_env();
  const fs::path dir(a.out);

  GenBasisArgs gb;
  gb.kind = "thompson";
  gb.n = a.n;
  gb.m = a.m;
  gb.seed = static_cast<long long>(a.seed);
  const auto g = generate_basis(gb);
  io::write_basis_csv(dir / "basis.csv", g.basis);
  out << "basis: thompson n=" << a.n << " m=" << a.m
      << " final_energy=" << fmt(g.thompson->final_energy()) << "\n";

  Dataset train_data = load_split(a.dataset, true, limit_opt(a.limit));
  const Dataset eval_data = load_split(a.dataset, false, limit_opt(a.eval_limit));

  TrainArgs ta;
  ta.out = a.out;
  ta.epochs = a.epochs;
  ta.batch = a.batch;
  ta.lr = a.lr;
  ta.momentum = a.momentum;
  ta.seed = a.seed;
  const auto outcome = run_training(ta, g.basis, train_data, out);

  const PlaneSet planes = plane_set(g.basis, cfg.mode);
  SrmConfig self_cfg = cfg;
  self_cfg.variant = SrmVariant::Self;
  const auto self = run_ensemble(ActivationSet{}, g.basis, planes, self_cfg, exec);
  write_outputs(dir / "self", self, nullptr, true, "self-SRM");
  report(out, "self", self, nullptr);

  const auto before =
      run_ensemble(extract_latents(outcome.initial, eval_data.images), g.basis, planes, cfg, exec);
  write_outputs(dir / "before", before, &self, true, "SRM before training");
  report(out, "before", before, &self);
  const double baseline = expected_uniform_fraction(a.n, a.epsilon);
  const double peak = *std::max_element(before.mean_curve.begin(), before.mean_curve.end());
  out << "uniform baseline=" << fmt(baseline) << " before peak/baseline=" << fmt(peak / baseline)
      << "\n";

  if (outcome.trained) {
    const auto after = run_ensemble(extract_latents(outcome.trained->model, eval_data.images),
                                    g.basis, planes, cfg, exec);
    write_outputs(dir / "after", after, &self, true, "SRM after training");
    report(out, "after", after, &self);
  }
  return kOk;
}

}  // namespace

std::vector<int> parse_labels(const std::string& spec) {
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "bad label list '" + spec + "'"); };
  auto number = [&](std::string_view s) {
    int v = -1;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0 || v > 255) {
      throw bad();
    }
    return v;
  };
  std::vector<int> labels;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      labels.push_back(number(item));
      continue;
    }
    const int lo = number(std::string_view(item).substr(0, dots));
    const int hi = number(std::string_view(item).substr(dots + 2));
    if (lo > hi) throw bad();
    for (int v = lo; v <= hi; ++v) labels.push_back(v);
  }
  if (labels.empty()) throw bad();
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spotlight resonance toolkit", "srm"};
  app.require_subcommand(1);

  GenBasisArgs gb;
  auto* gen = app.add_subcommand("gen-basis", "Generate a privileged basis CSV");
  gen->add_option("--kind", gb.kind, "standard|elementwise|simplex|thompson|random")->required();
  gen->add_option("--n", gb.n, "Ambient dimension")->required();
  gen->add_option("--m", gb.m, "Number of basis vectors");
  gen->add_option("--seed", gb.seed, "Seed (rotation seed for elementwise/simplex)");
  gen->add_option("--iterations", gb.iterations, "Thompson iterations")->capture_default_str();
  gen->add_option("--lr", gb.lr, "Thompson step size")->capture_default_str();
  gen->add_option("--out", gb.out, "Output CSV (stdout if omitted)");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train the autoencoder");
  tr->add_option("--dataset", ta.dataset, "MNIST directory")->required();
  tr->add_option("--basis", ta.basis, "Latent basis CSV")->required();
  tr->add_option("--out", ta.out, "Output directory")->required();
  tr->add_option("--arch", ta.arch, "small|large")->capture_default_str();
  tr->add_option("--hidden", ta.hidden, "Hidden width of the large model")->capture_default_str();
  tr->add_option("--epochs", ta.epochs)->capture_default_str();
  tr->add_option("--batch", ta.batch)->capture_default_str();
  tr->add_option("--lr", ta.lr)->capture_default_str();
  tr->add_option("--momentum", ta.momentum)->capture_default_str();
  tr->add_option("--seed", ta.seed)->capture_default_str();
  tr->add_option("--limit", ta.limit, "Use the first N training samples");
  tr->add_option("--labels", ta.labels, "Train only on these digits, e.g. 0..4");

  SrmArgs sa;
  auto* sr = app.add_subcommand("srm", "Run an SRM ensemble");
  sr->add_option("--basis", sa.basis, "Privileged basis CSV")->required();
  sr->add_option("--checkpoint", sa.checkpoint, "Model checkpoint");
  sr->add_option("--activations", sa.activations, "Raw activation CSV");
  sr->add_option("--dataset", sa.dataset, "MNIST directory (with --checkpoint)");
  sr->add_option("--split", sa.split, "test|train")->capture_default_str();
  sr->add_option("--limit", sa.limit, "Use the first N samples of the split");
  sr->add_option("--labels", sa.labels, "Per-digit outputs, e.g. 0..9");
  sr->add_option("--epsilon", sa.epsilon)->capture_default_str();
  sr->add_option("--theta-samples", sa.theta_samples)->capture_default_str();
  sr->add_option("--variant", sa.variant, "plain|signed|self")->capture_default_str();
  sr->add_option("--mode", sa.mode, "combination|permutation")->capture_default_str();
  sr->add_option("--out", sa.out, "Output directory")->required();
  sr->add_flag("--svg", sa.svg, "Also write ensemble.svg");

  ExpectedArgs ea;
  auto* ex = app.add_subcommand("expected", "Uniform-sphere baseline table");
  ex->add_option("--n", ea.n, "Dimensions")->delimiter(',')->capture_default_str();
  ex->add_option("--epsilon", ea.epsilon, "Thresholds")->delimiter(',')->capture_default_str();
  ex->add_option("--samples", ea.samples, "Monte Carlo samples")->capture_default_str();
  ex->add_option("--seed", ea.seed)->capture_default_str();
  ex->add_option("--out", ea.out, "Also write the table as CSV");

  ReproArgs ra;
  auto* rp = app.add_subcommand("repro-fig1", "Basis, training and before/after SRM in one go");
  rp->add_option("--dataset", ra.dataset, "MNIST directory")->required();
  rp->add_option("--out", ra.out, "Output directory")->required();
  rp->add_option("--n", ra.n)->capture_default_str();
  rp->add_option("--m", ra.m)->capture_default_str();
  rp->add_option("--seed", ra.seed)->capture_default_str();
  rp->add_option("--epochs", ra.epochs)->capture_default_str();
  rp->add_option("--batch", ra.batch)->capture_default_str();
  rp->add_option("--lr", ra.lr)->capture_default_str();
  rp->add_option("--momentum", ra.momentum)->capture_default_str();
  rp->add_option("--limit", ra.limit, "Training samples")->capture_default_str();
  rp->add_option("--eval-limit", ra.eval_limit, "Held-out samples used for SRM");
  rp->add_option("--epsilon", ra.epsilon)->capture_default_str();
  rp->add_option("--theta-samples", ra.theta_samples)->capture_default_str();
  rp->add_option("--mode", ra.mode)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*gen) return cmd_gen_basis(gb, out);
    if (*tr) return cmd_train(ta, out);
    if (*sr) return cmd_srm(sa, out, err);
    if (*ex) return cmd_expected(ea, out);
    if (*rp) return cmd_repro_fig1(ra, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return to_exit(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace srm::cli
