// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fls/basis.hpp"
#include "fls/bench.hpp"
#include "fls/io.hpp"
#include "fls/registration.hpp"
#include "fls/scale.hpp"
#include "fls/solver.hpp"
#include "test_support.hpp"

namespace {

using namespace fls;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

void gauss_legendre(double lo, double hi, int panels, std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  x.clear();
  w.clear();
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      x.push_back(mid + 0.5 * h * Rule::abscissa()[i]);
      w.push_back(0.5 * h * Rule::weights()[i]);
      x.push_back(mid - 0.5 * h * Rule::abscissa()[i]);
      w.push_back(0.5 * h * Rule::weights()[i]);
    }
  }
}

// Cosine basis on [lo, hi], written independently of the library.
double cos_basis(int k, double x, double lo, double hi) {
  const double width = hi - lo;
  return std::cos(k * M_PI * (x - lo) / width) / std::sqrt(k == 0 ? width : width / 2);
}

Outcome orthonormality() {
  const auto t0 = Clock::now();
  const auto spec = BasisSpec::unit_cube(3, 4);
  std::vector<double> x, w;
  gauss_legendre(-1, 1, 1, x, w);
  const std::size_t q = x.size();
  const Eigen::Index nf = static_cast<Eigen::Index>(spec.size());
  Matrix f(nf, static_cast<Eigen::Index>(q * q * q));
  Vector wt(f.cols());
  Eigen::Index col = 0;
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < q; ++b) {
      for (std::size_t c = 0; c < q; ++c, ++col) {
        const Eigen::Vector3d p(x[a], x[b], x[c]);
        wt[col] = w[a] * w[b] * w[c];
        for (Eigen::Index k = 0; k < nf; ++k) f(k, col) = basis_eval(spec, spec.multi_index(static_cast<std::size_t>(k)), p);
      }
    }
  }
  const Matrix gram = f * wt.asDiagonal() * f.transpose();
  const double err = (gram - Matrix::Identity(nf, nf)).cwiseAbs().maxCoeff();
  const double dt = seconds_since(t0);
  return {err <= 1e-10 && dt < 10.0, fmt("max |G - I| = %.2e over %.0f pairs, %.2f s", err, double(nf * nf), dt)};
}

Outcome delta_distance_oracle() {
  const int order = 50;
  const BasisSpec spec(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), order, 1.0);
  CounterRng rng(2024);
  std::vector<double> x, w;
  gauss_legendre(-1, 1, 50, x, w);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto na = 1 + rng.below(10), nb = 1 + rng.below(10);
    const Matrix a = test::random_cloud(2, na, rng.next_u64()).points().topRows(1);
    const Matrix b = test::random_cloud(2, nb, rng.next_u64()).points().topRows(1);
    const double lib = delta_distance_sq(coefficients(spec, a), coefficients(spec, b));
    // Direct quadrature of the squared truncated mixture difference.
    double integral = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double g = 0.0;
      for (int k = 0; k <= order; ++k) {
        double ck = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) ck += cos_basis(k, a(0, j), -1, 1) / na;
        for (Eigen::Index j = 0; j < b.cols(); ++j) ck -= cos_basis(k, b(0, j), -1, 1) / nb;
        g += ck * cos_basis(k, x[i], -1, 1);
      }
      integral += w[i] * g * g;
    }
    worst = std::max(worst, std::abs(lib - integral));
  }
  return {worst <= 1e-8, fmt("20 pairs, K=50, max |lib - quadrature| = %.2e", worst)};
}

Outcome jacobian_audits() {
  CounterRng rng(77);
  const auto names = bench::primitive_names();
  double worst_pose = 0.0, worst_scale = 0.0;
  int passed = 0;
  for (int i = 0; i < 100; ++i) {
    const int dim = i % 5 == 4 ? 2 : 3;
    FlsConfig cfg;
    cfg.order = 2 + static_cast<int>(rng.below(4));
    const auto spec = cfg.basis_spec(dim);
    const auto src = PointCloud(test::random_cloud(3, 60 + rng.below(100), rng.next_u64(), -0.6, 0.6).points().topRows(dim));
    const auto tgt = PointCloud(test::random_cloud(3, 60, rng.next_u64(), -0.6, 0.6).points().topRows(dim));
    PoseObjective obj(spec, src, coefficients(spec, tgt).values);
    const auto problem = obj.problem();
    const Matrix r = dim == 3 ? test::random_rotation3(rng, M_PI) : rotation_exp(Vector::Constant(1, rng.uniform(-M_PI, M_PI)));
    const Vector state = pack_pose(r, test::random_vector(dim, rng, -0.2, 0.2));
    const auto pose = audit_jacobian(problem, state, 1e-6, 1e-5, 1e-7);
    worst_pose = std::max(worst_pose, pose.max_relative_error);

    const auto a = trims(test::random_cloud(3, 30 + rng.below(30), rng.next_u64()));
    const auto b = trims(test::random_cloud(3, 30 + rng.below(30), rng.next_u64(), -2, 2));
    ScaleObjective sobj(a, b, ScaleConfig{});
    const auto scale = audit_jacobian(sobj.problem(), Vector::Constant(1, rng.uniform(-1.5, 1.5)), 1e-6, 1e-5, 1e-7);
    worst_scale = std::max(worst_scale, scale.max_relative_error);
    if (pose.passed && scale.passed) ++passed;
  }
  return {passed == 100, fmt("%.0f/100 instances; worst relative error pose %.2e, scale %.2e", passed, worst_pose,
                             worst_scale)};
}

bench::ExperimentConfig config(const std::string& yaml) { return bench::parse_experiment_config(yaml); }

// Trials per object so that the eight primitives give at least 50 trials.
std::size_t per_object(std::size_t total) {
  const auto n = bench::primitive_names().size();
  return (total + n - 1) / n;
}

const std::string kSmallPose =
    "perturbation:\n  rotation_deg: [-30, 30]\n  translation: [-0.11547, 0.11547]\n";  // |t| <= 0.2

Outcome noiseless_recovery() {
  auto cfg = config("version: 1\nseed: 101\nmethods: fls\nobjects: primitives\npoints: 1024\ntrials: " +
                    std::to_string(per_object(50)) + "\n" + kSmallPose);
  const auto rep = bench::run_experiment(cfg);
  const auto& c = rep.cells.at(0);
  return {c.exact_recovery_rate >= 0.95 && c.failure_rate <= 0.02,
          fmt("%.0f trials: exact %.3f, failed %.3f, mean rot err %.3f deg", double(c.trials), c.exact_recovery_rate,
              c.failure_rate, c.rotation_mean)};
}

// Noise sweep: full clouds, rotations up to 90 deg about octant axes,
// translations in [1, 2] per axis. The FLS / FLS-ICP pairing uses the
// partial-view protocol (three views, 4096 dense, 512 kept) at sigma 0.02.
Outcome noise_trend() {
  auto cfg = config("version: 1\nseed: 202\nmethods: fls\nobjects: primitives\npoints: 1024\ntrials: " +
                    std::to_string(per_object(50)) +
                    "\nperturbation:\n  rotation_deg: [-90, 90]\n  translation: [1, 2]\n  noise_sigmas: [0.01, 0.05]\n");
  const auto sweep = bench::run_experiment(cfg);
  auto paired = config("version: 1\nseed: 203\nmethods: [fls, fls-icp]\nobjects: primitives\npoints: 1024\ntrials: " +
                       std::to_string(per_object(50)) +
                       "\nperturbation:\n  rotation_deg: [-90, 90]\n  translation: [1, 2]\n  noise_sigmas: 0.02\n"
                       "partial_view:\n  views: 3\n  dense_points: 4096\n  keep_points: 512\n");
  const auto rep = bench::run_experiment(paired);
  double low = NAN, high = NAN;
  for (const auto& c : sweep.cells) {
    if (c.sigma == 0.01) low = c.rotation_mean;
    if (c.sigma == 0.05) high = c.rotation_mean;
  }
  // Pair fls and fls-icp trials at sigma 0.02: same object, same trial index.
  std::size_t pairs = 0, better = 0;
  for (const auto& a : rep.trials) {
    if (a.method != bench::Method::kFls || a.sigma != 0.02) continue;
    for (const auto& b : rep.trials) {
      if (b.method == bench::Method::kFlsIcp && b.sigma == 0.02 && b.object == a.object && b.trial == a.trial) {
        ++pairs;
        if (b.rotation_error_deg <= a.rotation_error_deg) ++better;
      }
    }
  }
  const double frac = pairs ? static_cast<double>(better) / static_cast<double>(pairs) : 0.0;
  const bool trend = std::isfinite(low) && std::isfinite(high) && high >= low;
  return {trend && frac >= 0.8,
          fmt("fls mean rot err %.3f deg @0.01, %.3f deg @0.05; fls-icp <= fls in %.1f%% of %.0f pairs @0.02", low, high,
              100 * frac, double(pairs))};
}

Outcome scale_estimation() {
  auto cfg = config("version: 1\nseed: 303\nmethods: fls-scale\nobjects: primitives\npoints: 1024\ntrials: " +
                    std::to_string(per_object(50)) + "\n" + kSmallPose + "  scale: [2, 5]\n");
  const auto rep = bench::run_experiment(cfg);
  std::size_t good_scale = 0;
  for (const auto& t : rep.trials) {
    if (t.error.empty() && t.scale_error < 0.01) ++good_scale;
  }
  const double n = static_cast<double>(rep.trials.size());
  const double scale_rate = good_scale / n;
  const double exact = rep.cells.at(0).exact_recovery_rate;
  return {scale_rate >= 0.95 && exact >= 0.90,
          fmt("%.0f trials: scale err < 1%% in %.3f, exact pose %.3f", n, scale_rate, exact)};
}

Outcome linear_time() {
  FlsConfig cfg;
  cfg.solver.max_iterations = 10;
  // Tolerances too small to trigger: every run takes the full iteration cap.
  cfg.solver.cost_tolerance = std::numeric_limits<double>::min();
  cfg.solver.gradient_tolerance = std::numeric_limits<double>::min();
  cfg.solver.step_tolerance = std::numeric_limits<double>::min();
  const auto mesh = bench::primitive_mesh("crane");
  auto median_time = [&](std::size_t n) {
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      const auto src = normalize_to_unit_cube(io::sample_mesh(mesh, n, 10 + rep)).cloud;
      bench::PerturbationSpec ps;
      ps.rotation_angle = {-M_PI / 6, M_PI / 6};
      ps.translation = {-0.1, 0.1};
      ps.seed = static_cast<std::uint64_t>(rep);
      const auto tgt = bench::perturb(src, ps).cloud;
      times.push_back(register_pose(src, tgt, cfg).wall_time);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  const double t3 = median_time(1000), t4 = median_time(10000);
  const double ratio = t4 / t3;
  return {ratio <= 12.0 && t4 <= 2.0, fmt("median %.4f s @1e3, %.4f s @1e4, ratio %.2f", t3, t4, ratio)};
}

Outcome initialization_sensitivity() {
  auto cfg = config("version: 1\nseed: 404\nmethods: fls\nobjects: primitives\npoints: 1024\ntrials: " +
                    std::to_string(per_object(50)) +
                    "\nperturbation:\n  rotation_angles_deg: [30, 180]\n  translation: [-0.11547, 0.11547]\n");
  const auto rep = bench::run_experiment(cfg);
  double near = NAN, far = NAN;
  for (const auto& c : rep.cells) {
    if (c.angle_deg == 30.0) near = c.exact_recovery_rate;
    if (c.angle_deg == 180.0) far = c.exact_recovery_rate;
  }
  return {near - far >= 0.30, fmt("exact rate %.3f @30 deg vs %.3f @180 deg (gap %.0f pp)", near, far, 100 * (near - far))};
}

Outcome determinism() {
  const auto dir = test::scratch_dir("acceptance_determinism");
  const std::string yaml =
      "version: 1\nseed: 505\nmethods: [fls, fls-icp, icp, fls-scale]\nobjects:\n  - primitive: chair\n"
      "  - primitive: piano\n  - primitive: stairs\npoints: [128, 256]\ntrials: 3\n"
      "perturbation:\n  rotation_deg: [-60, 60]\n  translation: [-0.2, 0.2]\n  noise_sigmas: [0, 0.02]\n"
      "  scale: [0.5, 2]\noutput:\n  record_time: false\n";
  std::vector<std::string> outputs;
  for (unsigned workers : {1u, 2u, 4u, 1u}) {
    auto cfg = config(yaml);
    cfg.workers = workers;
    const auto rep = bench::run_experiment(cfg);
    const auto out = dir / ("w" + std::to_string(workers) + "_" + std::to_string(outputs.size()));
    bench::write_report(cfg, rep, out);
    outputs.push_back(io::read_file(out / "trials.csv") + io::read_file(out / "summary.csv"));
  }
  // Partial views go through the same seeding path.
  auto pv = config("version: 1\nseed: 9\nmethods: fls\nobjects:\n  - primitive: desk\npoints: 256\ntrials: 4\n"
                   "partial_view:\n  views: 2\n  dense_points: 2048\n  keep_points: 256\noutput:\n  record_time: false\n");
  pv.workers = 1;
  const auto pv1 = bench::trials_csv(bench::run_experiment(pv), false);
  pv.workers = 3;
  const auto pv3 = bench::trials_csv(bench::run_experiment(pv), false);
  bool same = pv1 == pv3;
  for (const auto& o : outputs) same = same && o == outputs.front();
  return {same, fmt("%.0f runs at 1/2/4/1 workers plus partial-view runs, %.0f bytes each, identical: %.0f",
                    double(outputs.size()), double(outputs.front().size()), same ? 1.0 : 0.0)};
}

Outcome io_robustness() {
  const auto dir = test::scratch_dir("acceptance_io");
  CounterRng rng(606);
  bool round_trip = true;
  for (int k = 0; k < 10; ++k) {
    const int dim = k % 2 ? 2 : 3;
    Matrix m(dim, 1 + static_cast<Eigen::Index>(rng.below(2000)));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (int i = 0; i < dim; ++i) m(i, j) = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
    }
    const PointCloud c(m);
    const auto path = dir / ("cloud" + std::to_string(k) + ".ply");
    io::write_cloud(c, path);
    const auto back = io::load_cloud(path);
    round_trip = round_trip && back.dim() == dim && back.size() == c.size() &&
                 std::memcmp(back.points().data(), c.points().data(), sizeof(double) * m.size()) == 0;
  }

  const std::string head = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n";
  std::string truncated = io::format_cloud(test::random_cloud(3, 50, 1), io::CloudFormat::kPlyBinary);
  truncated.resize(truncated.size() - 13);
  const std::vector<std::pair<std::string, std::string>> corpus = {
      {"empty.ply", ""},
      {"magic.ply", "PLY\nformat ascii 1.0\nend_header\n"},
      {"noend.ply", head},
      {"big.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty double x\nproperty double y\nend_header\n"},
      {"version.ply", "ply\nformat ascii 9.9\nelement vertex 0\nend_header\n"},
      {"count.ply", "ply\nformat ascii 1.0\nelement vertex many\nend_header\n"},
      {"type.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty real x\nend_header\n"},
      {"short.ply", head + "end_header\n1 2 3\n"},
      {"token.ply", head + "end_header\n1 2 3\n4 five 6\n"},
      {"extra.ply", head + "end_header\n1 2 3\n4 5 6 7\n"},
      {"nonfinite.ply", head + "end_header\n1 2 3\ninf 5 6\n"},
      {"truncated.ply", truncated},
      {"noxy.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float z\nend_header\n1\n"},
      {"ragged.xyz", "1 2 3\n4 5\n"},
      {"word.xyz", "1 2 three\n"},
      {"wide.xyz", "1 2 3 4 5\n"},
  };
  std::size_t typed = 0;
  for (const auto& [name, bytes] : corpus) {
    io::write_file(dir / name, bytes);
    try {
      io::load_cloud(dir / name);
    } catch (const ParseError& e) {
      if (e.code() == ErrorCode::kParse) ++typed;
    } catch (...) {
    }
  }
  return {round_trip && typed == corpus.size(),
          fmt("10 binary round trips bit-exact: %.0f; %.0f/%.0f malformed files gave typed parse errors",
              round_trip ? 1.0 : 0.0, double(typed), double(corpus.size()))};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "basis orthonormality", orthonormality},
      {2, "coefficient distance equals quadrature", delta_distance_oracle},
      {3, "Jacobian audits", jacobian_audits},
      {4, "noiseless exact recovery", noiseless_recovery},
      {5, "noise robustness trend", noise_trend},
      {6, "scale estimation", scale_estimation},
      {7, "linear-time scaling", linear_time},
      {8, "initialization sensitivity", initialization_sensitivity},
      {9, "determinism across worker counts", determinism},
      {10, "IO round trip and malformed input", io_robustness},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
