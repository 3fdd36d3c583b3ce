#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <set>

#include "fls/bench.hpp"
#include "test_support.hpp"

namespace fls::bench {
namespace {

TEST(RandomRotation, AngleWithinRangeAndAxisInOctant) {
  CounterRng rng(1);
  for (int i = 0; i < 500; ++i) {
    const Matrix r = random_rotation({0.2, 0.9}, rng);
    EXPECT_NEAR((r * r.transpose() - Matrix::Identity(3, 3)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    const Eigen::AngleAxisd aa{Eigen::Matrix3d(r)};
    EXPECT_GE(aa.angle(), 0.2 - 1e-9);
    EXPECT_LE(aa.angle(), 0.9 + 1e-9);
    EXPECT_GE(aa.axis().minCoeff(), -1e-9);
  }
  const Matrix r2 = random_rotation({0.5, 0.5}, rng, 2);
  EXPECT_NEAR(std::atan2(r2(1, 0), r2(0, 0)), 0.5, 1e-15);
  EXPECT_EQ(random_rotation({-1, 1}, 7), random_rotation({-1, 1}, 7));
}

TEST(RandomRotation, AnglesCoverRangeUniformly) {
  CounterRng rng(2);
  std::vector<int> bins(4, 0);
  const int n = 8000;
  for (int i = 0; i < n; ++i) {
    const double deg = rotation_error_deg(random_rotation({0, M_PI / 2}, rng), Matrix::Identity(3, 3));
    bins[std::min(3, static_cast<int>(deg / 22.5))]++;
  }
  for (int b : bins) EXPECT_NEAR(b, n / 4, 5 * std::sqrt(n * 0.25 * 0.75));
}

TEST(Perturb, NoiselessMatchesApplyTransform) {
  const auto c = test::random_cloud(3, 100, 3);
  PerturbationSpec spec;
  spec.shuffle = false;
  spec.scale = Range{2, 5};
  spec.seed = 9;
  const auto p = perturb(c, spec);
  EXPECT_EQ(p.cloud.points(), apply_transform(c, p.ground_truth).points());
  EXPECT_GE(p.ground_truth.scale(), 2.0);
  EXPECT_LE(p.ground_truth.scale(), 5.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_GE(p.ground_truth.translation()[i], 1.0);
    EXPECT_LE(p.ground_truth.translation()[i], 2.0);
  }
}

TEST(Perturb, NoiseStandardDeviation) {
  const auto c = test::random_cloud(3, 10000, 4);
  PerturbationSpec spec;
  spec.shuffle = false;
  spec.noise_sigma = 0.02;
  spec.seed = 5;
  const auto p = perturb(c, spec);
  const Matrix diff = p.cloud.points() - apply_transform(c, p.ground_truth).points();
  const double sd = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
  EXPECT_GE(sd, 0.019);
  EXPECT_LE(sd, 0.021);
  EXPECT_NEAR(diff.mean(), 0.0, 0.001);
}

TEST(Perturb, ShufflePermutesAndPoseIndependentOfNoise) {
  const auto c = test::random_cloud(3, 200, 5);
  PerturbationSpec spec;
  spec.seed = 11;
  const auto a = perturb(c, spec);
  spec.noise_sigma = 0.05;
  const auto b = perturb(c, spec);
  EXPECT_EQ(a.ground_truth.rotation(), b.ground_truth.rotation());
  EXPECT_EQ(a.ground_truth.translation(), b.ground_truth.translation());
  EXPECT_EQ(a.cloud.points(), perturb(c, [] { PerturbationSpec s; s.seed = 11; return s; }()).cloud.points());
  // Same multiset of points as the unshuffled transform.
  const auto moved = apply_transform(c, a.ground_truth);
  EXPECT_NE(a.cloud.points(), moved.points());
  std::multiset<std::vector<double>> lhs, rhs;
  for (std::size_t i = 0; i < c.size(); ++i) {
    lhs.insert({a.cloud.point(i)[0], a.cloud.point(i)[1], a.cloud.point(i)[2]});
    rhs.insert({moved.point(i)[0], moved.point(i)[1], moved.point(i)[2]});
  }
  EXPECT_EQ(lhs, rhs);
}

TEST(Perturb, SpecValidation) {
  PerturbationSpec spec;
  spec.rotation_angle = {1.0, 0.5};
  EXPECT_THROW(perturb(test::random_cloud(3, 10, 1), spec), Error);
  spec = PerturbationSpec{};
  spec.noise_sigma = -1;
  EXPECT_THROW(spec.validate(), Error);
  spec = PerturbationSpec{};
  spec.scale = Range{0, 2};
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Classify, Thresholds) {
  TrialRecord r;
  r.rotation_error_deg = 4.9;
  r.translation_error = 0.029;
  classify(r);
  EXPECT_TRUE(r.exact_recovery);
  EXPECT_FALSE(r.failed);
  r.rotation_error_deg = 5.0;
  classify(r);
  EXPECT_FALSE(r.exact_recovery);
  EXPECT_FALSE(r.failed);
  r.rotation_error_deg = 45.1;
  classify(r);
  EXPECT_TRUE(r.failed);
  r.rotation_error_deg = 1;
  r.translation_error = 0.51;
  classify(r);
  EXPECT_TRUE(r.failed);
  r.translation_error = std::nan("");
  classify(r);
  EXPECT_TRUE(r.failed);
  r.translation_error = 0.0;
  r.error = "boom";
  classify(r);
  EXPECT_TRUE(r.failed);
}

TEST(Summarize, CellStatistics) {
  std::vector<TrialRecord> trials;
  const double rot[] = {1.0, 2.0, 3.0, 90.0};
  for (int i = 0; i < 4; ++i) {
    TrialRecord t;
    t.method = Method::kFls;
    t.points = 64;
    t.angle_deg = std::nan("");
    t.rotation_error_deg = rot[i];
    t.translation_error = 0.01 * i;
    t.wall_time = i + 1.0;
    classify(t);
    trials.push_back(t);
  }
  TrialRecord other = trials[0];
  other.method = Method::kIcp;
  trials.insert(trials.begin() + 1, other);
  const auto rep = summarize(trials);
  ASSERT_EQ(rep.cells.size(), 2u);
  const auto& c = rep.cells[0];
  EXPECT_EQ(c.method, Method::kFls);
  EXPECT_EQ(c.trials, 4u);
  EXPECT_DOUBLE_EQ(c.failure_rate, 0.25);
  EXPECT_DOUBLE_EQ(c.exact_recovery_rate, 0.75);
  EXPECT_DOUBLE_EQ(c.rotation_mean, 2.0);
  EXPECT_DOUBLE_EQ(c.rotation_std, 1.0);
  EXPECT_DOUBLE_EQ(c.time_mean, 2.5);
  EXPECT_DOUBLE_EQ(c.time_median, 2.5);
  EXPECT_EQ(rep.cells[1].method, Method::kIcp);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::kFls, Method::kFlsIcp, Method::kIcp, Method::kFlsScale, Method::kFlsIcpScale}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("ransac"), Error);
}

TEST(Primitives, AllBuildAndAreDistinct) {
  const auto names = primitive_names();
  EXPECT_GE(names.size(), 8u);
  for (const auto& n : names) {
    const auto mesh = primitive_mesh(n);
    EXPECT_GT(mesh.faces.size(), 12u) << n;
    EXPECT_EQ(mesh.dropped_degenerate, 0u);
  }
  EXPECT_THROW(primitive_mesh("teapot"), Error);
}

// Brute-force hull oracle: a point is a vertex iff some plane through it
// and two others has every point on one side, and it is extreme there.
bool on_hull_brute(const std::vector<Eigen::Vector3d>& p, std::size_t i) {
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t k = j + 1; k < p.size(); ++k) {
      if (j == i || k == i) continue;
      const Eigen::Vector3d n = (p[j] - p[i]).cross(p[k] - p[i]);
      if (n.norm() < 1e-12) continue;
      int pos = 0, neg = 0;
      for (const auto& q : p) {
        const double s = n.dot(q - p[i]);
        if (s > 1e-12) ++pos;
        if (s < -1e-12) ++neg;
      }
      if (pos == 0 || neg == 0) return true;
    }
  }
  return false;
}

TEST(ConvexHull, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = test::random_cloud(3, 40, seed);
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i = 0; i < c.size(); ++i) pts.push_back(c.point(i));
    const auto hull = convex_hull_vertices(pts);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (on_hull_brute(pts, i)) want.push_back(i);
    }
    EXPECT_EQ(hull, want) << "seed " << seed;
  }
}

TEST(ConvexHull, CubeCornersAndDegenerate) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  pts.emplace_back(0.5, 0.5, 0.5);
  pts.emplace_back(0.2, 0.3, 0.4);
  EXPECT_EQ(convex_hull_vertices(pts), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  const std::vector<Eigen::Vector3d> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  try {
    convex_hull_vertices(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCloud);
  }
}

TEST(VisiblePoints, SphereKeepsOnlyFacingSide) {
  CounterRng rng(3);
  Matrix m(3, 2000);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    m.col(j) = v.normalized();
  }
  const PointCloud sphere(m);
  const Eigen::Vector3d eye(0, 0, 5);
  const auto vis = visible_points(sphere, eye);
  EXPECT_GT(vis.size(), 200u);
  EXPECT_LT(vis.size(), 1000u);
  const std::set<std::size_t> seen(vis.begin(), vis.end());
  std::size_t facing = 0, facing_seen = 0;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const Eigen::Vector3d p = sphere.point(i);
    // The outward normal of a unit sphere is p itself.
    const double cosine = p.dot((eye - p).normalized());
    if (seen.count(i)) {
      EXPECT_GT(cosine, -0.2) << "back-facing point kept";
    }
    if (cosine > 0.3) {
      ++facing;
      if (seen.count(i)) ++facing_seen;
    }
  }
  EXPECT_GT(static_cast<double>(facing_seen), 0.9 * static_cast<double>(facing));
  EXPECT_TRUE(std::is_sorted(vis.begin(), vis.end()));
}

TEST(PartialView, DeterministicSizedAndSorted) {
  const auto dense = test::primitive_cloud("crane", 4096, 2);
  const auto a = synthesize_partial_view(dense, 3, 512, 17);
  const auto b = synthesize_partial_view(dense, 3, 512, 17);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.cloud.points(), b.cloud.points());
  EXPECT_EQ(a.indices.size(), 512u);
  EXPECT_FALSE(a.insufficient);
  EXPECT_TRUE(std::is_sorted(a.indices.begin(), a.indices.end()));
  EXPECT_EQ(a.viewpoints.size(), 3u);
  for (std::size_t i = 0; i < a.indices.size(); ++i) EXPECT_EQ(a.cloud.point(i), dense.point(a.indices[i]));
  EXPECT_NE(a.indices, synthesize_partial_view(dense, 3, 512, 18).indices);
}

TEST(PartialView, InsufficientWhenTooFewVisible) {
  const auto dense = test::primitive_cloud("desk", 300, 2);
  const auto v = synthesize_partial_view(dense, 1, 300, 3);
  EXPECT_TRUE(v.insufficient);
  EXPECT_LT(v.indices.size(), 300u);
  EXPECT_GT(v.indices.size(), 0u);
}

const char* kConfig = R"(version: 1
name: tiny
seed: 3
methods: [fls, icp]
objects:
  - primitive: chair
  - primitive: stairs
points: 128
trials: 2
perturbation:
  rotation_deg: [-20, 20]
  translation: [-0.1, 0.1]
  noise_sigmas: [0, 0.01]
output:
  record_time: false
)";

TEST(ExperimentConfig, ParsesSchema) {
  const auto cfg = parse_experiment_config(kConfig);
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.objects.size(), 2u);
  EXPECT_EQ(cfg.points, std::vector<std::size_t>{128});
  EXPECT_EQ(cfg.noise_sigmas, (std::vector<double>{0, 0.01}));
  EXPECT_FALSE(cfg.record_time);
  EXPECT_EQ(parse_experiment_config("version: 1\nobjects: primitives\n").objects.size(), primitive_names().size());
}

TEST(ExperimentConfig, ErrorsAreTypedWithLines) {
  auto line_of = [](const std::string& yaml) -> std::size_t {
    try {
      parse_experiment_config(yaml);
    } catch (const ParseError& e) {
      return e.line();
    }
    ADD_FAILURE() << "accepted: " << yaml;
    return 0;
  };
  EXPECT_EQ(line_of("version: 1\nobjects: primitives\ntrails: 3\n"), 3u);
  EXPECT_EQ(line_of("version: 2\nobjects: primitives\n"), 1u);
  EXPECT_EQ(line_of("version: 1\nobjects: primitives\npoints: 4\n"), 3u);
  EXPECT_EQ(line_of("version: 1\nobjects: primitives\nmethods: [fls, magic]\n"), 3u);
  EXPECT_EQ(line_of("version: 1\nobjects:\n  - primitive: teapot\n"), 3u);
  EXPECT_GT(line_of("version: 1\nobjects: [\n"), 0u);
  line_of("objects: primitives\n");
  line_of("version: 1\n");
}

TEST(RunExperiment, DeterministicAcrossWorkerCounts) {
  auto cfg = parse_experiment_config(kConfig);
  cfg.workers = 1;
  const auto one = run_experiment(cfg);
  cfg.workers = 3;
  const auto three = run_experiment(cfg);
  ASSERT_EQ(one.trials.size(), 2u * 2u * 2u * 2u);
  EXPECT_EQ(trials_csv(one, false), trials_csv(three, false));
  EXPECT_EQ(summary_csv(one, false), summary_csv(three, false));
  EXPECT_EQ(one.cells.size(), 4u);
}

TEST(RunExperiment, CsvSchemaAndReportFiles) {
  auto cfg = parse_experiment_config(kConfig);
  cfg.trials = 1;
  cfg.methods = {Method::kFls};
  const auto rep = run_experiment(cfg);
  const auto csv = trials_csv(rep, false);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "object,method,sigma,scale_gt,scale_est,rot_err_deg,trans_err,time_s,failed,exact,points,angle_deg,trial,"
            "iterations");
  const auto dir = test::scratch_dir("bench_report");
  write_report(cfg, rep, dir);
  for (const char* f : {"trials.csv", "summary.csv", "report.json"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  EXPECT_EQ(io::read_file(dir / "trials.csv"), csv);
}

TEST(RunExperiment, CommonRandomNumbersAcrossMethods) {
  auto cfg = parse_experiment_config(kConfig);
  const auto rep = run_experiment(cfg);
  // Same object, sigma and trial index see the same ground truth for every method.
  for (const auto& a : rep.trials) {
    for (const auto& b : rep.trials) {
      if (a.object == b.object && a.trial == b.trial && a.method != b.method && a.sigma == b.sigma) {
        EXPECT_EQ(a.ground_truth.rotation(), b.ground_truth.rotation());
      }
    }
  }
}

TEST(ResolveWorkers, EnvironmentCap) {
  EXPECT_EQ(resolve_workers(3u) >= 1u, true);
  ::setenv("FLS_WORKERS", "1", 1);
  EXPECT_EQ(resolve_workers(4u), 1u);
  ::unsetenv("FLS_WORKERS");
  EXPECT_EQ(resolve_workers(4u), 4u);
}

}  // namespace
}  // namespace fls::bench
