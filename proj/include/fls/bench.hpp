#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fls/core.hpp"
#include "fls/icp.hpp"
#include "fls/io.hpp"
#include "fls/registration.hpp"
#include "fls/rng.hpp"
#include "fls/scale.hpp"

namespace fls::bench {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PerturbationSpec {
  Range rotation_angle{-M_PI / 2, M_PI / 2};  // radians
  Range translation{1.0, 2.0};                 // per axis
  double noise_sigma = 0.0;
  std::optional<Range> scale;
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// exp([u theta]x) with u uniform in the nonnegative octant (normalized) and
/// theta uniform in the range. In 2-D, a rotation by theta.
Matrix random_rotation(Range angle_range, CounterRng& rng, int dim = 3);
Matrix random_rotation(Range angle_range, std::uint64_t seed, int dim = 3);

struct Perturbed {
  PointCloud cloud;
  SimilarityTransform ground_truth;
};

/// Applies a random similarity, then i.i.d. Gaussian noise per coordinate,
/// then (optionally) shuffles the points. Rotation, translation, scale, noise
/// and shuffle draw from separate child streams of the seed, so changing the
/// noise level leaves the pose draws untouched.
Perturbed perturb(const PointCloud& cloud, const PerturbationSpec& spec);

/// Indices of points visible from `viewpoint` by spherical-flip hidden point
/// removal with flip radius radius_factor * (max distance to the viewpoint).
std::vector<std::size_t> visible_points(const PointCloud& cloud, const Eigen::Vector3d& viewpoint,
                                        double radius_factor = 100.0);

/// Indices of the convex hull's vertices (3-D). Throws kDegenerateCloud when
/// the points do not span a volume.
std::vector<std::size_t> convex_hull_vertices(const std::vector<Eigen::Vector3d>& points);

struct PartialView {
  PointCloud cloud;
  std::vector<std::size_t> indices;  // into the input cloud, ascending
  std::vector<Eigen::Vector3d> viewpoints;
  bool insufficient = false;  // fewer visible points than requested
};

/// Union of the points visible from `n_views` random viewpoints placed at 3x
/// the cloud radius around its centroid, subsampled to `keep_points` with
/// weights favoring points seen from several views and from close up.
PartialView synthesize_partial_view(const PointCloud& cloud, int n_views, std::size_t keep_points,
                                    std::uint64_t seed);

/// Procedural test objects built from boxes, none with a rotational symmetry.
std::vector<std::string> primitive_names();
io::TriangleMesh primitive_mesh(const std::string& name);

enum class Method { kFls, kFlsIcp, kIcp, kFlsScale, kFlsIcpScale };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct TrialRecord {
  std::string object;
  Method method = Method::kFls;
  double sigma = 0.0;
  double angle_deg = 0.0;  // fixed angle of an initialization sweep cell, NaN otherwise
  std::size_t points = 0;
  std::size_t trial = 0;
  SimilarityTransform ground_truth;
  SimilarityTransform estimate;
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  double scale_error = 0.0;  // |s_est - s_gt| / s_gt
  double wall_time = 0.0;
  bool failed = false;
  bool exact_recovery = false;
  int iterations = 0;
  std::string error;  // non-empty when the trial threw
};

/// Failure: rotation error > 45 deg or translation error > 0.5.
/// Exact recovery: rotation error < 5 deg and translation error < 0.03.
void classify(TrialRecord& record);

struct CellSummary {
  Method method = Method::kFls;
  double sigma = 0.0;
  double angle_deg = 0.0;
  std::size_t points = 0;
  std::size_t trials = 0;
  double failure_rate = 0.0;
  double exact_recovery_rate = 0.0;
  // Error statistics exclude failed trials.
  double rotation_mean = 0.0, rotation_std = 0.0;
  double translation_mean = 0.0, translation_std = 0.0;
  double time_mean = 0.0, time_std = 0.0, time_median = 0.0;
};

struct BenchReport {
  std::vector<TrialRecord> trials;
  std::vector<CellSummary> cells;
};

BenchReport summarize(std::vector<TrialRecord> trials);

struct ObjectSource {
  enum class Kind { kPrimitive, kMesh, kCloud };
  Kind kind = Kind::kPrimitive;
  std::string name;  // primitive name or path as written
  std::filesystem::path path;
};

struct PartialViewConfig {
  int views = 3;
  std::size_t dense_points = 4096;
  std::size_t keep_points = 512;
};

/// Declarative experiment; see README for the YAML schema.
struct ExperimentConfig {
  int version = 1;
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::kFls};
  std::vector<ObjectSource> objects;
  std::vector<std::size_t> points{1024};
  std::size_t trials = 1;
  Range rotation_deg{-90.0, 90.0};
  std::vector<double> rotation_angles_deg;  // when set, one cell per fixed angle
  Range translation{1.0, 2.0};
  std::vector<double> noise_sigmas{0.0};
  std::optional<Range> scale;
  bool shuffle = true;
  std::optional<PartialViewConfig> partial_view;
  FlsConfig fls;
  ScaleConfig scale_estimation;
  IcpOptions icp;
  bool record_time = true;
  std::optional<unsigned> workers;
};

ExperimentConfig parse_experiment_config(const std::string& yaml_text,
                                         const std::filesystem::path& base_dir = std::filesystem::current_path());
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Worker count: config value, else hardware concurrency, capped by the
/// FLS_WORKERS environment variable when set.
unsigned resolve_workers(std::optional<unsigned> requested);

/// Runs every (method, cell, object, trial) combination. Trial exceptions are
/// recorded as failures. Results do not depend on the worker count.
BenchReport run_experiment(const ExperimentConfig& config);

/// Fixed CSV schema: object,method,sigma,scale_gt,scale_est,rot_err_deg,
/// trans_err,time_s,failed,exact followed by points,angle_deg,trial,iterations.
std::string trials_csv(const BenchReport& report, bool record_time);
std::string summary_csv(const BenchReport& report, bool record_time);
std::string report_json(const ExperimentConfig& config, const BenchReport& report);

/// Writes trials.csv, summary.csv and report.json into `out_dir` (created if needed).
void write_report(const ExperimentConfig& config, const BenchReport& report, const std::filesystem::path& out_dir);

}  // namespace fls::bench
