// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every selected criterion ran to completion; with
// --strict it is also non-zero when any criterion fails.

#include "srm/activation.hpp"
#include "srm/autoencoder.hpp"
#include "srm/basis.hpp"
#include "srm/error.hpp"
#include "srm/geometry.hpp"
#include "srm/io.hpp"
#include "srm/kernels.hpp"
#include "srm/srm.hpp"
#include "test_util.hpp"

#include <CLI11.hpp>
#include <Eigen/LU>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace srm;
namespace fs = std::filesystem;
using testutil::kPi;
using testutil::max_abs;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---- 1: rotations --------------------------------------------------------

void rotation_suite(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  double worst_orth = 0, worst_det = 0, worst_period = 0, worst_group = 0, worst_oracle = 0;
  for (int n : {2, 3, 8, 24}) {
    const Matrix id = Matrix::Identity(n, n);
    for (int k = 0; k < 100; ++k) {
      const UnitVector a = testutil::random_unit(n, rng);
      const UnitVector b = testutil::random_unit(n, rng);
      const PlaneRotor r = plane_rotor(a, b);
      const double t1 = angle(rng);
      const double t2 = angle(rng);
      const Matrix r1 = rotate(r, t1);
      worst_orth = std::max(worst_orth, max_abs(r1.transpose() * r1 - id));
      worst_det = std::max(worst_det, std::abs(r1.determinant() - 1.0));
      worst_period = std::max(worst_period, max_abs(rotate(r, 2 * kPi) - id));
      worst_group = std::max(worst_group, max_abs(r1 * rotate(r, t2) - rotate(r, t1 + t2)));
      worst_oracle =
          std::max(worst_oracle, max_abs(r1 - eigen_rotor_oracle(build_bivector(a, b), t1)));
    }
  }
  v.require(worst_orth < 1e-9, "R^T R = I");
  v.require(worst_det < 1e-9, "det R = 1");
  v.require(worst_period < 1e-6, "R(2 pi) = I");
  v.require(worst_group < 1e-8, "R(t1) R(t2) = R(t1 + t2)");
  v.require(worst_oracle < 1e-8, "closed form vs eigen oracle");
  v.detail << "max errors: orth " << worst_orth << ", det " << worst_det << ", period "
           << worst_period << ", group " << worst_group << ", oracle " << worst_oracle;
}

// ---- 2: uniform baseline -------------------------------------------------

void baseline_suite(Verdict& v) {
  double worst_z = 0.0;
  for (int n : {3, 8, 24}) {
    for (double eps : {0.0, 0.5, 0.8, 0.9}) {
      const double p = expected_uniform_fraction(n, eps);
      const auto mc = mc_uniform_oracle(n, eps, 1000000, 77);
      // Standard error under the analytic null; the sample SE is zero when no
      // sample lands in a vanishing cap.
      const double se = std::sqrt(std::max(p * (1 - p), 0.0) / 1e6);
      const double diff = std::abs(mc.fraction - p);
      const double z = se > 0 ? diff / se : (diff == 0 ? 0.0 : 1e300);
      worst_z = std::max(worst_z, z);
      v.require(diff <= 3 * se, "n=" + std::to_string(n) + " eps=" + io::format_double(eps));
    }
    v.require(std::abs(expected_uniform_fraction(n, 0.0) - 0.5) <= 1e-12, "eps = 0 gives 0.5");
  }
  v.detail << "worst |mc - analytic| = " << worst_z << " SE";
}

// ---- 3: generalized tanh -------------------------------------------------

void gtanh_suite(Verdict& v) {
  double worst_def = 0;
  for (const auto& basis : {gen_simplex(3), gen_elementwise(4)}) {
    const GeneralizedTanh act(basis);
    for (double alpha : {0.1, 1.0, 3.0}) {
      for (Eigen::Index j = 0; j < basis.count(); ++j) {
        const Vector bj = basis.vectors.row(j).transpose();
        worst_def = std::max(worst_def, std::abs(act.apply(alpha * bj).dot(bj) - std::tanh(alpha)));
      }
    }
  }
  v.require(worst_def < 1e-6, "defining equality");

  std::mt19937_64 rng(5);
  double worst_reduce = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 9;
    const GeneralizedTanh act(gen_elementwise(n));
    const Vector x = 3.0 * testutil::random_gaussian(n, rng);
    worst_reduce = std::max(worst_reduce, max_abs(act.apply(x) - elementwise_tanh(x)));
  }
  v.require(worst_reduce < 1e-9, "+-standard reduction");

  ThompsonConfig tc;
  tc.seed = 3;
  const std::vector<BasisSet> bases{gen_simplex(3), gen_random(4, 9, 2), gen_elementwise(5, 1),
                                    gen_thompson(6, 12, tc).basis};
  double worst_fd = 0;
  for (int k = 0; k < 100; ++k) {
    const auto& basis = bases[static_cast<std::size_t>(k % 4)];
    const GeneralizedTanh act(basis);
    const int n = static_cast<int>(basis.dim());
    const Vector x = 2.0 * testutil::random_gaussian(n, rng);
    const Vector g = testutil::random_gaussian(n, rng);
    const Vector analytic = act.backward(x, g);
    Vector fd(n);
    const double h = 1e-5;
    for (int i = 0; i < n; ++i) {
      Vector up = x;
      Vector down = x;
      up[i] += h;
      down[i] -= h;
      fd[i] = (g.dot(act.apply(up)) - g.dot(act.apply(down))) / (2 * h);
    }
    worst_fd = std::max(worst_fd, (analytic - fd).norm() / std::max(fd.norm(), 1e-8));
  }
  v.require(worst_fd < 1e-4, "backward vs finite differences");
  v.detail << "defining " << worst_def << ", reduction " << worst_reduce << ", backward rel "
           << worst_fd;
}

// ---- 4: Thompson ---------------------------------------------------------

void thompson_suite(Verdict& v) {
  double worst_tetra = 0, worst_gap = 0;
  std::size_t steps = 0, good = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ThompsonConfig cfg;
    cfg.seed = seed;
    const auto tetra = gen_thompson(3, 4, cfg);
    const Matrix g = tetra.basis.gram();
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) worst_tetra = std::max(worst_tetra, std::abs(g(i, j) + 1.0 / 3.0));
    }
    const auto square = gen_thompson(2, 4, cfg);
    std::vector<double> angles;
    for (int i = 0; i < 4; ++i) angles.push_back(std::atan2(square.basis.vectors(i, 1), square.basis.vectors(i, 0)));
    std::sort(angles.begin(), angles.end());
    for (int i = 0; i < 4; ++i) {
      const double gap = i < 3 ? angles[i + 1] - angles[i] : angles[0] + 2 * kPi - angles[3];
      worst_gap = std::max(worst_gap, std::abs(gap - kPi / 2));
    }
    for (const auto* run : {&tetra, &square}) {
      const auto& trace = run->energy_trace;
      for (std::size_t s = 1; s < trace.size(); ++s, ++steps) {
        if (trace[s] <= trace[s - 1] + cfg.convergence_tol) ++good;
      }
    }
  }
  const double frac = steps ? static_cast<double>(good) / static_cast<double>(steps) : 1.0;
  v.require(worst_tetra < 1e-2, "(3, 4) dots near -1/3");
  v.require(worst_gap < 1e-2, "(2, 4) quarter-turn spacing");
  v.require(frac >= 0.95, "energy non-increasing");
  v.detail << "tetra " << worst_tetra << ", gap " << worst_gap << " rad, non-increasing "
           << frac * 100 << "% of " << steps << " steps";
}

// ---- 5: SRM exactness ----------------------------------------------------

void exactness_suite(Verdict& v) {
  std::size_t mismatches = 0, points = 0;
  for (int n = 2; n <= 4; ++n) {
    const auto basis = gen_standard(n);
    SrmConfig cfg;
    cfg.epsilon = 0.9;
    const auto ens = self_srm(basis, plane_set(basis, PlaneMode::Permutation), cfg);
    for (const auto& c : ens.curves) {
      for (std::size_t t = 0; t < c.thetas.size(); ++t, ++points) {
        std::vector<double> d(static_cast<std::size_t>(n), 0.0);
        d[static_cast<std::size_t>(c.plane.alpha)] = std::cos(c.thetas[t]);
        d[static_cast<std::size_t>(c.plane.beta)] = std::sin(c.thetas[t]);
        int inside = 0;
        for (int r = 0; r < n; ++r) {
          double dot = 0;
          for (int k = 0; k < n; ++k) dot += basis.vectors(r, k) * d[static_cast<std::size_t>(k)];
          inside += dot >= 0.9;
        }
        if (c.values[t] != static_cast<double>(inside) / n) ++mismatches;
      }
    }
  }
  v.require(mismatches == 0, "self-SRM vs brute force");

  std::mt19937_64 rng(8);
  double worst_signed = 0;
  for (int n : {3, 8}) {
    RowMatrix rows(400, n);
    for (int r = 0; r < 200; ++r) {
      rows.row(r) = testutil::random_gaussian(n, rng).transpose();
      rows.row(r + 200) = -rows.row(r);
    }
    const auto basis = gen_random(n, 2 * n, 4);
    SrmConfig cfg;
    cfg.variant = SrmVariant::Signed;
    cfg.epsilon = 0.5;
    const auto ens = run_ensemble(ActivationSet::from_rows(rows), basis,
                                  plane_set(basis, PlaneMode::Permutation), cfg);
    for (const auto& c : ens.curves) {
      for (double x : c.values) worst_signed = std::max(worst_signed, std::abs(x));
    }
  }
  v.require(worst_signed <= 1e-12, "signed SRM of symmetric data");
  v.detail << mismatches << " mismatches over " << points << " grid points, max |signed| "
           << worst_signed;
}

// ---- 6 and 7: trained models ---------------------------------------------

struct SeedOutcome {
  double before_ratio = 0;  // max over theta of mean curve / baseline
  double r_after = 0;
  bool r_defined = true;
  double amp_privileged = 0;
  double amp_random = 0;
  double r_standard = 0;
  bool standard_defined = true;
  double seconds = 0;
};

double correlation_or_nan(const std::vector<double>& a, const std::vector<double>& b, bool& ok) {
  try {
    ok = true;
    return curve_correlation(a, b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    ok = false;
    return std::nan("");
  }
}

SeedOutcome train_seed(std::uint64_t seed, int epochs, const Dataset& train_set,
                       const Dataset& eval_set) {
  const auto start = Clock::now();
  SeedOutcome o;
  ThompsonConfig tc;
  tc.seed = seed;
  const auto basis = gen_thompson(10, 20, tc).basis;
  const auto act = std::make_shared<const GeneralizedTanh>(basis);
  auto model = MlpModel::small(784, act);
  xavier_normal_init(model, seed);

  SrmConfig cfg;
  cfg.epsilon = 0.9;
  const auto planes = plane_set(basis, PlaneMode::Combination);
  const auto self = self_srm(basis, planes, cfg);
  const auto before = run_ensemble(extract_latents(model, eval_set.images), basis, planes, cfg);
  const double baseline = expected_uniform_fraction(10, 0.9);
  o.before_ratio = *std::max_element(before.mean_curve.begin(), before.mean_curve.end()) / baseline;

  TrainConfig train_cfg;
  train_cfg.epochs = epochs;
  train_cfg.seed = seed;
  const auto trained = train(std::move(model), train_set, train_cfg);
  const auto latents = extract_latents(trained.model, eval_set.images);

  const auto after = run_ensemble(latents, basis, planes, cfg);
  o.r_after = correlation_or_nan(after.mean_curve, self.mean_curve, o.r_defined);
  o.amp_privileged = after.mean_amplitude();

  const auto random_basis = gen_random(10, 20, 1000 + seed);
  o.amp_random =
      run_ensemble(latents, random_basis, plane_set(random_basis, PlaneMode::Combination), cfg)
          .mean_amplitude();

  const auto standard = gen_elementwise(10);
  const auto standard_planes = plane_set(standard, PlaneMode::Combination);
  const auto std_ens = run_ensemble(latents, standard, standard_planes, cfg);
  const auto std_self = self_srm(standard, standard_planes, cfg);
  o.r_standard = correlation_or_nan(std_ens.mean_curve, std_self.mean_curve, o.standard_defined);
  o.seconds = seconds_since(start);
  return o;
}

// ---- 8: CLI determinism --------------------------------------------------

int shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::vector<fs::path> comparable_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".json" || ext == ".bin")) {
      files.push_back(fs::relative(e.path(), root));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void determinism_suite(Verdict& v, const std::string& cli, const fs::path& mnist) {
  const fs::path root = fs::temp_directory_path() / "srm_acceptance_determinism";
  fs::remove_all(root);
  const std::string q = "'";
  const std::string data = q + mnist.string() + q;
  std::size_t compared = 0;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    const std::string d = q + dir.string() + q;
    const std::vector<std::string> cmds{
        "gen-basis --kind thompson --n 10 --m 20 --seed 7 --out " + d + "/thompson.csv",
        "gen-basis --kind random --n 10 --m 20 --seed 7 --out " + d + "/random.csv",
        "gen-basis --kind simplex --n 10 --seed 3 --out " + d + "/simplex.csv",
        "expected --samples 100000 --seed 4 --out " + d + "/expected.csv",
        "train --dataset " + data + " --basis " + d + "/thompson.csv --epochs 2 --limit 600 --seed 5 --out " + d + "/train",
        "srm --checkpoint " + d + "/train/checkpoint.bin --dataset " + data + " --basis " + d +
            "/thompson.csv --limit 500 --epsilon 0.8 --labels 0..2 --out " + d + "/srm",
        "srm --variant self --basis " + d + "/thompson.csv --mode permutation --out " + d + "/self",
        "srm --variant signed --checkpoint " + d + "/train/checkpoint.bin --dataset " + data +
            " --basis " + d + "/random.csv --limit 500 --epsilon 0.5 --out " + d + "/signed",
        "repro-fig1 --dataset " + data + " --epochs 2 --limit 600 --eval-limit 500 --seed 2 --out " + d + "/repro",
    };
    for (const auto& c : cmds) v.require(shell(q + cli + q + " " + c) == 0, "command failed: " + c);
  }
  const auto a = comparable_files(root / "run0");
  const auto b = comparable_files(root / "run1");
  v.require(a == b && !a.empty(), "same output file set");
  for (const auto& rel : a) {
    ++compared;
    v.require(io::read_text(root / "run0" / rel) == io::read_text(root / "run1" / rel),
              "bytes differ: " + rel.string());
  }
  v.detail << compared << " CSV/JSON/checkpoint files compared byte for byte";
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SRM acceptance suite"};
  bool strict = false;
  std::string mnist = testutil::mnist_dir();
  std::string cli = SRM_CLI_PATH;
  int epochs = 750;
  std::vector<int> only;
  app.add_flag("--strict", strict, "Exit non-zero when any criterion fails");
  app.add_option("--mnist", mnist, "Directory with the MNIST IDX files");
  app.add_option("--cli", cli, "Path to the srm executable");
  app.add_option("--epochs", epochs, "Training epochs per seed for criteria 6 and 7");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };
  int failures = 0;
  int errors = 0;

  auto report = [&](int k, const std::string& name, Verdict& v, double secs, double limit) {
    if (limit > 0) {
      v.require(secs < limit, "runtime over " + io::format_double(limit) + " s");
    }
    char time_buf[32];
    std::snprintf(time_buf, sizeof(time_buf), "%.1f s", secs);
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << name << ", "
              << time_buf << "): " << v.detail.str() << std::endl;
    if (!v.pass) ++failures;
  };

  auto run_simple = [&](int k, const std::string& name, double limit,
                        const std::function<void(Verdict&)>& body) {
    if (!wanted(k)) return;
    Verdict v;
    const auto start = Clock::now();
    try {
      body(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
      ++errors;
    }
    report(k, name, v, seconds_since(start), limit);
  };

  run_simple(1, "rotation suite", 30, rotation_suite);
  run_simple(2, "uniform baseline vs Monte Carlo", 60, baseline_suite);
  run_simple(3, "generalized tanh", 30, gtanh_suite);
  run_simple(4, "Thompson optimizer", 60, thompson_suite);
  run_simple(5, "SRM exactness", 0, exactness_suite);

  if (wanted(6) || wanted(7)) {
    const auto start = Clock::now();
    std::vector<SeedOutcome> seeds;
    std::string load_error;
    try {
      const auto tr = mnist_files(mnist, true);
      const auto te = mnist_files(mnist, false);
      const Dataset train_set = load_mnist_idx(tr.images, tr.labels);
      const Dataset eval_set = load_mnist_idx(te.images, te.labels);
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        seeds.push_back(train_seed(seed, epochs, train_set, eval_set));
        const auto& o = seeds.back();
        std::cout << "  seed " << seed << ": before peak/baseline " << o.before_ratio
                  << ", r after " << (o.r_defined ? io::format_double(o.r_after) : "undefined")
                  << ", amplitude privileged " << o.amp_privileged << " random " << o.amp_random
                  << ", standard-basis r "
                  << (o.standard_defined ? io::format_double(o.r_standard) : "undefined (flat)")
                  << ", " << o.seconds << " s" << std::endl;
      }
    } catch (const std::exception& e) {
      load_error = e.what();
      ++errors;
    }
    const double secs = seconds_since(start);

    if (wanted(6)) {
      Verdict v;
      if (!load_error.empty()) {
        v.require(false, "exception: " + load_error);
      } else {
        int both = 0, after_ok = 0, before_ok = 0;
        for (const auto& o : seeds) {
          const bool a = o.r_defined && o.r_after > 0.7;
          const bool b = o.before_ratio < 5.0;
          after_ok += a;
          before_ok += b;
          both += a && b;
        }
        v.require(both >= 4, "fewer than 4 of 5 seeds");
        v.detail << both << "/5 seeds pass (r after > 0.7 in " << after_ok
                 << ", before < 5x baseline in " << before_ok << "), " << epochs << " epochs";
      }
      report(6, "before/after SRM on MNIST", v, secs, 15 * 60);
    }
    if (wanted(7)) {
      Verdict v;
      if (!load_error.empty()) {
        v.require(false, "exception: " + load_error);
      } else {
        int random_ok = 0, standard_ok = 0;
        for (const auto& o : seeds) {
          random_ok += o.amp_random < 0.25 * o.amp_privileged;
          // A flat curve carries no alignment signal at all.
          standard_ok += !o.standard_defined || std::abs(o.r_standard) < 0.3;
        }
        v.require(random_ok >= 4, "random-basis amplitude");
        v.require(standard_ok >= 4, "standard-basis correlation");
        v.detail << "random < 25% of privileged in " << random_ok << "/5, standard |r| < 0.3 in "
                 << standard_ok << "/5";
      }
      report(7, "random and standard basis controls", v, 0.0, 0);
    }
  }

  run_simple(8, "CLI determinism", 0, [&](Verdict& v) { determinism_suite(v, cli, mnist); });

  std::cout << "acceptance finished: " << failures << " criteria failed" << std::endl;
  if (errors > 0) return 2;
  return strict && failures > 0 ? 1 : 0;
}
