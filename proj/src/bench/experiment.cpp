#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "fls/bench.hpp"
#include "json.hpp"

namespace fls::bench {

Method parse_method(const std::string& name) {
  if (name == "fls") return Method::kFls;
  if (name == "fls-icp") return Method::kFlsIcp;
  if (name == "icp") return Method::kIcp;
  if (name == "fls-scale") return Method::kFlsScale;
  if (name == "fls-icp-scale") return Method::kFlsIcpScale;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown method '" + name + "' (expected fls, fls-icp, icp, fls-scale or fls-icp-scale)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kFls: return "fls";
    case Method::kFlsIcp: return "fls-icp";
    case Method::kIcp: return "icp";
    case Method::kFlsScale: return "fls-scale";
    case Method::kFlsIcpScale: return "fls-icp-scale";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void config_error(const YAML::Node& node, const std::string& what) {
  const auto mark = node.Mark();
  throw ParseError("<config>", mark.is_null() ? 0 : static_cast<std::size_t>(mark.line + 1),
                   mark.is_null() ? 0 : static_cast<std::size_t>(mark.column), what);
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& section) {
  if (!node.IsMap()) config_error(node, section + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error(kv.first, "unknown key '" + key + "' in " + section);
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error(node, what + ": invalid value");
  }
}

Range range(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() != 2) config_error(node, what + " must be a [lo, hi] pair");
  Range r{scalar<double>(node[0], what), scalar<double>(node[1], what)};
  if (!(r.lo <= r.hi)) config_error(node, what + " must satisfy lo <= hi");
  return r;
}

template <typename T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& what) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(scalar<T>(item, what));
  } else {
    out.push_back(scalar<T>(node, what));
  }
  if (out.empty()) config_error(node, what + " must not be empty");
  return out;
}

void parse_solver(const YAML::Node& node, SolverOptions& s) {
  if (node["max_iterations"]) s.max_iterations = scalar<int>(node["max_iterations"], "max_iterations");
  if (node["cost_tolerance"]) s.cost_tolerance = scalar<double>(node["cost_tolerance"], "cost_tolerance");
  if (node["gradient_tolerance"]) s.gradient_tolerance = scalar<double>(node["gradient_tolerance"], "gradient_tolerance");
  if (node["step_tolerance"]) s.step_tolerance = scalar<double>(node["step_tolerance"], "step_tolerance");
}

const std::set<std::string> kSolverKeys{"max_iterations", "cost_tolerance", "gradient_tolerance", "step_tolerance"};

std::set<std::string> with_solver_keys(std::set<std::string> keys) {
  keys.insert(kSolverKeys.begin(), kSolverKeys.end());
  return keys;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("<config>", static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column),
                     e.msg);
  }
  if (!root.IsMap()) throw ParseError("<config>", 1, 0, "experiment config must be a mapping");
  check_keys(root,
             {"version", "name", "seed", "methods", "objects", "points", "trials", "perturbation", "partial_view",
              "fls", "scale_estimation", "icp", "output", "workers"},
             "config");

  ExperimentConfig cfg;
  if (!root["version"]) config_error(root, "missing 'version'");
  cfg.version = scalar<int>(root["version"], "version");
  if (cfg.version != 1) config_error(root["version"], "unsupported config version " + std::to_string(cfg.version));
  if (root["name"]) cfg.name = scalar<std::string>(root["name"], "name");
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["methods"]) {
    cfg.methods.clear();
    for (const auto& m : scalar_or_list<std::string>(root["methods"], "methods")) {
      try {
        cfg.methods.push_back(parse_method(m));
      } catch (const Error& e) {
        config_error(root["methods"], e.what());
      }
    }
  }

  if (!root["objects"]) config_error(root, "missing 'objects'");
  const YAML::Node objects = root["objects"];
  if (objects.IsScalar()) {
    if (objects.as<std::string>() != "primitives") config_error(objects, "objects: expected a list or 'primitives'");
    for (const auto& name : primitive_names()) cfg.objects.push_back({ObjectSource::Kind::kPrimitive, name, {}});
  } else if (objects.IsSequence()) {
    for (const auto& item : objects) {
      check_keys(item, {"primitive", "mesh", "cloud"}, "object");
      if (item.size() != 1) config_error(item, "object entries need exactly one of primitive, mesh, cloud");
      ObjectSource src;
      if (item["primitive"]) {
        src.kind = ObjectSource::Kind::kPrimitive;
        src.name = scalar<std::string>(item["primitive"], "primitive");
        const auto names = primitive_names();
        if (std::find(names.begin(), names.end(), src.name) == names.end()) {
          config_error(item["primitive"], "unknown primitive '" + src.name + "'");
        }
      } else {
        const bool mesh = static_cast<bool>(item["mesh"]);
        src.kind = mesh ? ObjectSource::Kind::kMesh : ObjectSource::Kind::kCloud;
        src.name = scalar<std::string>(mesh ? item["mesh"] : item["cloud"], "path");
        src.path = std::filesystem::path(src.name).is_absolute() ? std::filesystem::path(src.name) : base_dir / src.name;
      }
      cfg.objects.push_back(std::move(src));
    }
  } else {
    config_error(objects, "objects: expected a list or 'primitives'");
  }
  if (cfg.objects.empty()) config_error(objects, "objects must not be empty");

  if (root["points"]) {
    cfg.points.clear();
    for (auto n : scalar_or_list<std::uint64_t>(root["points"], "points")) {
      if (n < 16) config_error(root["points"], "points must be >= 16");
      cfg.points.push_back(static_cast<std::size_t>(n));
    }
  }
  if (root["trials"]) {
    const auto t = scalar<std::int64_t>(root["trials"], "trials");
    if (t < 1) config_error(root["trials"], "trials must be >= 1");
    cfg.trials = static_cast<std::size_t>(t);
  }

  if (const YAML::Node p = root["perturbation"]) {
    check_keys(p, {"rotation_deg", "rotation_angles_deg", "translation", "noise_sigmas", "scale", "shuffle"},
               "perturbation");
    if (p["rotation_deg"]) cfg.rotation_deg = range(p["rotation_deg"], "rotation_deg");
    if (p["rotation_angles_deg"]) cfg.rotation_angles_deg = scalar_or_list<double>(p["rotation_angles_deg"], "rotation_angles_deg");
    if (p["translation"]) cfg.translation = range(p["translation"], "translation");
    if (p["noise_sigmas"]) cfg.noise_sigmas = scalar_or_list<double>(p["noise_sigmas"], "noise_sigmas");
    if (p["scale"]) cfg.scale = range(p["scale"], "scale");
    if (p["shuffle"]) cfg.shuffle = scalar<bool>(p["shuffle"], "shuffle");
    for (double a : cfg.rotation_angles_deg) {
      if (!(std::abs(a) <= 180.0)) config_error(p["rotation_angles_deg"], "rotation angles must lie in [-180, 180]");
    }
    if (cfg.rotation_deg.lo < -180.0 || cfg.rotation_deg.hi > 180.0) {
      config_error(p["rotation_deg"], "rotation_deg must lie in [-180, 180]");
    }
    for (double s : cfg.noise_sigmas) {
      if (!(s >= 0.0)) config_error(p["noise_sigmas"], "noise sigmas must be >= 0");
    }
    if (cfg.scale && !(cfg.scale->lo > 0.0)) config_error(p["scale"], "scale range must be positive");
  }

  if (const YAML::Node pv = root["partial_view"]) {
    check_keys(pv, {"views", "dense_points", "keep_points"}, "partial_view");
    PartialViewConfig pc;
    if (pv["views"]) pc.views = scalar<int>(pv["views"], "views");
    if (pv["dense_points"]) pc.dense_points = scalar<std::size_t>(pv["dense_points"], "dense_points");
    if (pv["keep_points"]) pc.keep_points = scalar<std::size_t>(pv["keep_points"], "keep_points");
    if (pc.views < 1 || pc.dense_points < 16 || pc.keep_points < 16) {
      config_error(pv, "partial_view needs views >= 1, dense_points >= 16, keep_points >= 16");
    }
    cfg.partial_view = pc;
  }

  if (const YAML::Node f = root["fls"]) {
    check_keys(f, with_solver_keys({"order", "weight_exponent", "margin", "pre_align_centroids"}), "fls");
    if (f["order"]) cfg.fls.order = scalar<int>(f["order"], "order");
    if (f["weight_exponent"]) cfg.fls.weight_exponent = scalar<double>(f["weight_exponent"], "weight_exponent");
    if (f["margin"]) cfg.fls.margin = scalar<double>(f["margin"], "margin");
    if (f["pre_align_centroids"]) cfg.fls.pre_align_centroids = scalar<bool>(f["pre_align_centroids"], "pre_align_centroids");
    parse_solver(f, cfg.fls.solver);
  }
  if (const YAML::Node s = root["scale_estimation"]) {
    check_keys(s, with_solver_keys({"order", "max_scale", "domain_padding", "max_pairs"}), "scale_estimation");
    if (s["order"]) cfg.scale_estimation.order = scalar<int>(s["order"], "order");
    if (s["max_scale"]) cfg.scale_estimation.max_scale = scalar<double>(s["max_scale"], "max_scale");
    if (s["domain_padding"]) cfg.scale_estimation.domain_padding = scalar<double>(s["domain_padding"], "domain_padding");
    if (s["max_pairs"]) cfg.scale_estimation.max_pairs = scalar<std::size_t>(s["max_pairs"], "max_pairs");
    parse_solver(s, cfg.scale_estimation.solver);
  }
  if (const YAML::Node i = root["icp"]) {
    check_keys(i, {"max_iterations", "tolerance", "cutoff"}, "icp");
    if (i["max_iterations"]) cfg.icp.max_iterations = scalar<int>(i["max_iterations"], "max_iterations");
    if (i["tolerance"]) cfg.icp.tolerance = scalar<double>(i["tolerance"], "tolerance");
    if (i["cutoff"]) cfg.icp.correspondence_cutoff = scalar<double>(i["cutoff"], "cutoff");
  }
  if (const YAML::Node o = root["output"]) {
    check_keys(o, {"record_time"}, "output");
    if (o["record_time"]) cfg.record_time = scalar<bool>(o["record_time"], "record_time");
  }
  if (root["workers"]) {
    const auto w = scalar<int>(root["workers"], "workers");
    if (w < 1) config_error(root["workers"], "workers must be >= 1");
    cfg.workers = static_cast<unsigned>(w);
  }

  try {
    cfg.fls.solver.validate();
    cfg.scale_estimation.solver.validate();
    (void)cfg.fls.basis_spec(3);
  } catch (const Error& e) {
    throw ParseError("<config>", 0, 0, e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_experiment_config(text, path.parent_path().empty() ? std::filesystem::current_path() : path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.offset(), e.what());
  }
}

unsigned resolve_workers(std::optional<unsigned> requested) {
  unsigned n = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FLS_WORKERS")) {
    unsigned cap = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc() && ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return std::max(1u, n);
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct Task {
  std::size_t object = 0;
  std::size_t points_index = 0;
  Method method = Method::kFls;
  double sigma = 0.0;
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  std::size_t trial = 0;
};

// Streams of the master seed; objects and trials get their own sub-streams.
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kTrialStream = 2;

PointCloud subsample(const PointCloud& cloud, std::size_t n, CounterRng rng) {
  if (cloud.size() <= n) return cloud;
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return reorder(cloud, idx);
}

struct ObjectData {
  std::string label;
  std::optional<io::TriangleMesh> mesh;
  std::optional<PointCloud> cloud;
};

ObjectData load_object(const ObjectSource& src) {
  ObjectData d;
  switch (src.kind) {
    case ObjectSource::Kind::kPrimitive:
      d.label = src.name;
      d.mesh = primitive_mesh(src.name);
      break;
    case ObjectSource::Kind::kMesh:
      d.label = src.path.stem().string();
      d.mesh = io::load_mesh(src.path);
      break;
    case ObjectSource::Kind::kCloud:
      d.label = src.path.stem().string();
      d.cloud = io::load_cloud(src.path);
      break;
  }
  return d;
}

PointCloud draw_cloud(const ObjectData& obj, std::size_t n, std::uint64_t seed) {
  const PointCloud raw = obj.mesh ? io::sample_mesh(*obj.mesh, n, seed) : subsample(*obj.cloud, n, CounterRng(seed));
  return normalize_to_unit_cube(raw).cloud.with_name(obj.label);
}

struct Prepared {
  std::vector<ObjectData> objects;
  // [object][points index] normalized source clouds, and dense clouds for partial views.
  std::vector<std::vector<PointCloud>> sources;
  std::vector<PointCloud> dense;
};

RegistrationResult run_method(Method method, const PointCloud& source, const PointCloud& target, double known_scale,
                              const ExperimentConfig& cfg) {
  switch (method) {
    case Method::kFls:
      return register_pose(source, target, cfg.fls, known_scale);
    case Method::kFlsScale:
      return register_with_unknown_scale(source, target, cfg.fls, cfg.scale_estimation);
    case Method::kFlsIcp:
    case Method::kFlsIcpScale: {
      const auto start = std::chrono::steady_clock::now();
      RegistrationResult coarse = method == Method::kFlsIcp
                                      ? register_pose(source, target, cfg.fls, known_scale)
                                      : register_with_unknown_scale(source, target, cfg.fls, cfg.scale_estimation);
      RegistrationResult fine = icp_refine(source, target, coarse.transform, cfg.icp);
      fine.iterations += coarse.iterations;
      fine.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return fine;
    }
    case Method::kIcp: {
      const auto start = std::chrono::steady_clock::now();
      const int d = source.dim();
      const Vector t = target.centroid() - known_scale * source.centroid();
      RegistrationResult r = icp_refine(source, target, SimilarityTransform(known_scale, Matrix::Identity(d, d), t), cfg.icp);
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return r;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method");
}

TrialRecord run_task(const Task& task, const Prepared& prep, const ExperimentConfig& cfg) {
  TrialRecord rec;
  rec.object = prep.objects[task.object].label;
  rec.method = task.method;
  rec.sigma = task.sigma;
  rec.angle_deg = task.angle_deg;
  rec.points = cfg.points[task.points_index];
  rec.trial = task.trial;
  try {
    // Keyed on object and trial only: every method, noise level and angle
    // sees the same draws (common random numbers across cells).
    const CounterRng trial_rng =
        CounterRng(cfg.seed, kTrialStream).child(task.object).child(task.points_index).child(task.trial);
    const PointCloud& source = prep.sources[task.object][task.points_index];
    PointCloud base = source;
    if (cfg.partial_view) {
      base = synthesize_partial_view(prep.dense[task.object], cfg.partial_view->views, cfg.partial_view->keep_points,
                                     trial_rng.child(0).next_u64())
                 .cloud;
    }
    PerturbationSpec spec;
    const double to_rad = M_PI / 180.0;
    spec.rotation_angle = std::isnan(task.angle_deg) ? Range{cfg.rotation_deg.lo * to_rad, cfg.rotation_deg.hi * to_rad}
                                                     : Range{task.angle_deg * to_rad, task.angle_deg * to_rad};
    spec.translation = cfg.translation;
    spec.noise_sigma = task.sigma;
    spec.scale = cfg.scale;
    spec.shuffle = cfg.shuffle;
    spec.seed = trial_rng.child(1).next_u64();
    const Perturbed target = perturb(base, spec);
    rec.ground_truth = target.ground_truth;

    const RegistrationResult result =
        run_method(task.method, source, target.cloud, target.ground_truth.scale(), cfg);
    rec.estimate = result.transform;
    rec.wall_time = result.wall_time;
    rec.iterations = result.iterations;
    rec.rotation_error_deg = rotation_error_deg(result.transform.rotation(), target.ground_truth.rotation());
    rec.translation_error = translation_error(result.transform.translation(), target.ground_truth.translation());
    rec.scale_error = std::abs(result.transform.scale() - target.ground_truth.scale()) / target.ground_truth.scale();
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.estimate = SimilarityTransform::identity(3);
    rec.rotation_error_deg = std::numeric_limits<double>::quiet_NaN();
    rec.translation_error = std::numeric_limits<double>::quiet_NaN();
    rec.scale_error = std::numeric_limits<double>::quiet_NaN();
  }
  classify(rec);
  return rec;
}

}  // namespace

BenchReport run_experiment(const ExperimentConfig& cfg) {
  Prepared prep;
  for (const auto& src : cfg.objects) prep.objects.push_back(load_object(src));
  const CounterRng sample_root(cfg.seed, kSampleStream);
  for (std::size_t o = 0; o < prep.objects.size(); ++o) {
    const CounterRng obj_rng = sample_root.child(o);
    std::vector<PointCloud> per_n;
    for (std::size_t p = 0; p < cfg.points.size(); ++p) {
      per_n.push_back(draw_cloud(prep.objects[o], cfg.points[p], obj_rng.child(p).next_u64()));
    }
    prep.sources.push_back(std::move(per_n));
    if (cfg.partial_view) {
      prep.dense.push_back(draw_cloud(prep.objects[o], cfg.partial_view->dense_points, obj_rng.child(~0ULL).next_u64()));
    }
  }

  std::vector<double> angles = cfg.rotation_angles_deg;
  if (angles.empty()) angles.push_back(std::numeric_limits<double>::quiet_NaN());
  std::vector<Task> tasks;
  for (Method m : cfg.methods) {
    for (std::size_t p = 0; p < cfg.points.size(); ++p) {
      for (double sigma : cfg.noise_sigmas) {
        for (double angle : angles) {
          for (std::size_t o = 0; o < prep.objects.size(); ++o) {
            for (std::size_t t = 0; t < cfg.trials; ++t) tasks.push_back({o, p, m, sigma, angle, t});
          }
        }
      }
    }
  }

  std::vector<TrialRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) records[i] = run_task(tasks[i], prep, cfg);
  };
  const unsigned n_workers = std::min<unsigned>(resolve_workers(cfg.workers), static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return summarize(std::move(records));
}

// ---------------------------------------------------------------------------
// Aggregation and output

namespace {

bool same_angle(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

nlohmann::json json_num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

BenchReport summarize(std::vector<TrialRecord> trials) {
  BenchReport report;
  report.trials = std::move(trials);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    const auto& t = report.trials[i];
    std::size_t c = 0;
    for (; c < report.cells.size(); ++c) {
      const auto& cell = report.cells[c];
      if (cell.method == t.method && cell.sigma == t.sigma && same_angle(cell.angle_deg, t.angle_deg) &&
          cell.points == t.points) {
        break;
      }
    }
    if (c == report.cells.size()) {
      CellSummary cell;
      cell.method = t.method;
      cell.sigma = t.sigma;
      cell.angle_deg = t.angle_deg;
      cell.points = t.points;
      report.cells.push_back(cell);
      members.emplace_back();
    }
    members[c].push_back(i);
  }
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    auto& cell = report.cells[c];
    std::vector<double> rot, trans, time;
    std::size_t failed = 0, exact = 0;
    for (std::size_t i : members[c]) {
      const auto& t = report.trials[i];
      time.push_back(t.wall_time);
      if (t.failed) {
        ++failed;
        continue;
      }
      if (t.exact_recovery) ++exact;
      rot.push_back(t.rotation_error_deg);
      trans.push_back(t.translation_error);
    }
    cell.trials = members[c].size();
    cell.failure_rate = static_cast<double>(failed) / static_cast<double>(cell.trials);
    cell.exact_recovery_rate = static_cast<double>(exact) / static_cast<double>(cell.trials);
    cell.rotation_mean = mean(rot);
    cell.rotation_std = stddev(rot);
    cell.translation_mean = mean(trans);
    cell.translation_std = stddev(trans);
    cell.time_mean = mean(time);
    cell.time_std = stddev(time);
    cell.time_median = median(time);
  }
  return report;
}

std::string trials_csv(const BenchReport& report, bool record_time) {
  std::ostringstream out;
  out << "object,method,sigma,scale_gt,scale_est,rot_err_deg,trans_err,time_s,failed,exact,points,angle_deg,trial,"
         "iterations\n";
  for (const auto& t : report.trials) {
    out << csv_field(t.object) << ',' << to_string(t.method) << ',' << num(t.sigma) << ','
        << num(t.ground_truth.scale()) << ',' << num(t.error.empty() ? t.estimate.scale() : std::nan("")) << ','
        << num(t.rotation_error_deg) << ',' << num(t.translation_error) << ','
        << num(record_time ? t.wall_time : 0.0) << ',' << (t.failed ? 1 : 0) << ',' << (t.exact_recovery ? 1 : 0)
        << ',' << t.points << ',' << num(t.angle_deg) << ',' << t.trial << ',' << t.iterations << '\n';
  }
  return out.str();
}

std::string summary_csv(const BenchReport& report, bool record_time) {
  std::ostringstream out;
  out << "method,sigma,angle_deg,points,trials,failure_rate,exact_rate,rot_mean,rot_std,trans_mean,trans_std,"
         "time_mean,time_std,time_median\n";
  for (const auto& c : report.cells) {
    out << to_string(c.method) << ',' << num(c.sigma) << ',' << num(c.angle_deg) << ',' << c.points << ','
        << c.trials << ',' << num(c.failure_rate) << ',' << num(c.exact_recovery_rate) << ','
        << num(c.rotation_mean) << ',' << num(c.rotation_std) << ',' << num(c.translation_mean) << ','
        << num(c.translation_std) << ',' << num(record_time ? c.time_mean : 0.0) << ','
        << num(record_time ? c.time_std : 0.0) << ',' << num(record_time ? c.time_median : 0.0) << '\n';
  }
  return out.str();
}

std::string report_json(const ExperimentConfig& config, const BenchReport& report) {
  using nlohmann::json;
  json j;
  j["version"] = config.version;
  j["name"] = config.name;
  j["seed"] = config.seed;
  json methods = json::array();
  for (Method m : config.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  json objects = json::array();
  for (const auto& o : config.objects) objects.push_back(o.name);
  j["objects"] = objects;
  j["trials_per_cell_object"] = config.trials;
  j["record_time"] = config.record_time;
  json cells = json::array();
  for (const auto& c : report.cells) {
    const double tm = config.record_time ? c.time_mean : 0.0;
    const double ts = config.record_time ? c.time_std : 0.0;
    const double tmed = config.record_time ? c.time_median : 0.0;
    cells.push_back({{"method", to_string(c.method)},
                     {"sigma", c.sigma},
                     {"angle_deg", json_num(c.angle_deg)},
                     {"points", c.points},
                     {"trials", c.trials},
                     {"failure_rate", c.failure_rate},
                     {"exact_recovery_rate", c.exact_recovery_rate},
                     {"rotation_error_deg", {{"mean", json_num(c.rotation_mean)}, {"std", json_num(c.rotation_std)}}},
                     {"translation_error", {{"mean", json_num(c.translation_mean)}, {"std", json_num(c.translation_std)}}},
                     {"time_s", {{"mean", json_num(tm)}, {"std", json_num(ts)}, {"median", json_num(tmed)}}}});
  }
  j["cells"] = cells;
  json errors = json::array();
  for (const auto& t : report.trials) {
    if (t.error.empty()) continue;
    errors.push_back({{"object", t.object}, {"method", to_string(t.method)}, {"sigma", t.sigma},
                      {"angle_deg", json_num(t.angle_deg)}, {"points", t.points}, {"trial", t.trial},
                      {"message", t.error}});
  }
  j["trial_errors"] = errors;
  return j.dump(2) + "\n";
}

void write_report(const ExperimentConfig& config, const BenchReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + out_dir.string() + "': " + ec.message());
  io::write_file(out_dir / "trials.csv", trials_csv(report, config.record_time));
  io::write_file(out_dir / "summary.csv", summary_csv(report, config.record_time));
  io::write_file(out_dir / "report.json", report_json(config, report));
}

}  // namespace fls::bench
