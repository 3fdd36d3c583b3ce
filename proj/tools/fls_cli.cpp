#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fls/bench.hpp"
#include "fls/icp.hpp"
#include "fls/io.hpp"
#include "fls/registration.hpp"
#include "fls/scale.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

json transform_json(const fls::SimilarityTransform& t) {
  json rot = json::array();
  for (int r = 0; r < t.dim(); ++r) {
    json row = json::array();
    for (int c = 0; c < t.dim(); ++c) row.push_back(t.rotation()(r, c));
    rot.push_back(row);
  }
  json trans = json::array();
  for (int i = 0; i < t.dim(); ++i) trans.push_back(t.translation()[i]);
  return {{"scale", t.scale()}, {"rotation", rot}, {"translation", trans}};
}

fls::SimilarityTransform transform_from_json(const json& j) {
  const auto& rot = j.at("rotation");
  const int d = static_cast<int>(rot.size());
  fls::Matrix r(d, d);
  fls::Vector t(d);
  for (int i = 0; i < d; ++i) {
    for (int c = 0; c < d; ++c) r(i, c) = rot.at(i).at(c).get<double>();
    t[i] = j.at("translation").at(i).get<double>();
  }
  return fls::SimilarityTransform(j.value("scale", 1.0), r, t);
}

struct RegisterArgs {
  std::string source, target, scale = "known:1", output = "text", initial;
  bool refine_icp = false;
  int k = 5;
  std::uint64_t seed = 0;
  int max_iterations = 100;
};

int run_register(const RegisterArgs& a) {
  if (a.k < 1) throw fls::Error(fls::ErrorCode::kInvalidArgument, "--k must be >= 1");
  const fls::PointCloud source = fls::io::load_cloud(a.source);
  const fls::PointCloud target = fls::io::load_cloud(a.target);
  fls::FlsConfig cfg;
  cfg.order = a.k - 1;
  cfg.solver.max_iterations = a.max_iterations;
  std::optional<fls::SimilarityTransform> initial;
  if (!a.initial.empty()) initial = transform_from_json(json::parse(fls::io::read_file(a.initial)));

  fls::RegistrationResult result;
  std::optional<fls::ScaleEstimate> scale_est;
  if (a.scale == "unknown") {
    fls::ScaleConfig sc;
    sc.seed = a.seed;
    sc.order = cfg.order;
    fls::ScaleEstimate est;
    result = fls::register_with_unknown_scale(source, target, cfg, sc, initial, &est);
    scale_est = est;
  } else if (a.scale.rfind("known:", 0) == 0) {
    double s = 0.0;
    try {
      s = std::stod(a.scale.substr(6));
    } catch (const std::exception&) {
      throw fls::Error(fls::ErrorCode::kInvalidArgument, "--scale: cannot parse '" + a.scale + "'");
    }
    if (!(s > 0.0)) throw fls::Error(fls::ErrorCode::kInvalidArgument, "--scale: known scale must be positive");
    result = fls::register_pose(source, target, cfg, s, initial);
  } else {
    throw fls::Error(fls::ErrorCode::kInvalidArgument, "--scale expects known:<s> or unknown");
  }
  json stages = json::array();
  stages.push_back({{"stage", "fls"},
                    {"iterations", result.iterations},
                    {"final_cost", result.final_cost},
                    {"termination", std::string(fls::to_string(result.termination))},
                    {"wall_time_s", result.wall_time}});
  if (a.refine_icp) {
    const auto fine = fls::icp_refine(source, target, result.transform);
    stages.push_back({{"stage", "icp"},
                      {"iterations", fine.iterations},
                      {"final_cost", fine.final_cost},
                      {"termination", std::string(fls::to_string(fine.termination))},
                      {"wall_time_s", fine.wall_time}});
    const double total = result.wall_time + fine.wall_time;
    result = fine;
    result.wall_time = total;
  }

  json out = {{"transform", transform_json(result.transform)},
              {"converged", result.converged},
              {"final_cost", result.final_cost},
              {"wall_time_s", result.wall_time},
              {"stages", stages}};
  if (!result.message.empty()) out["message"] = result.message;
  if (scale_est) out["scale_estimate"] = {{"scale", scale_est->scale}, {"clamped", scale_est->clamped}};
  if (a.output == "json") {
    std::cout << out.dump(2) << "\n";
  } else {
    const auto& t = result.transform;
    std::cout << "scale: " << t.scale() << "\nrotation:\n" << t.rotation() << "\ntranslation: "
              << t.translation().transpose() << "\nconverged: " << (result.converged ? "yes" : "no")
              << "\nfinal_cost: " << result.final_cost << "\nwall_time_s: " << result.wall_time << "\n";
  }
  return 0;
}

int run_bench(const std::string& config_path, const std::string& out_dir, std::optional<unsigned> workers) {
  auto cfg = fls::bench::load_experiment_config(config_path);
  if (workers) cfg.workers = workers;
  const auto report = fls::bench::run_experiment(cfg);
  fls::bench::write_report(cfg, report, out_dir);
  std::printf("%-14s %8s %8s %6s %7s %7s %10s %10s\n", "method", "sigma", "angle", "N", "fail", "exact", "rot_mean",
              "time_mean");
  for (const auto& c : report.cells) {
    std::printf("%-14s %8.4f %8.2f %6zu %7.3f %7.3f %10.4f %10.4f\n", fls::bench::to_string(c.method).c_str(),
                c.sigma, c.angle_deg, c.points, c.failure_rate, c.exact_recovery_rate, c.rotation_mean,
                cfg.record_time ? c.time_mean : 0.0);
  }
  std::printf("wrote %s/{trials.csv,summary.csv,report.json}\n", out_dir.c_str());
  return 0;
}

struct PerturbArgs {
  std::string input, output, ground_truth;
  std::vector<double> rotation_deg{-90.0, 90.0};
  std::vector<double> translation{1.0, 2.0};
  std::vector<double> scale;
  double sigma = 0.0;
  bool no_shuffle = false;
  std::uint64_t seed = 0;
};

int run_perturb(const PerturbArgs& a) {
  const auto cloud = fls::io::load_cloud(a.input);
  fls::bench::PerturbationSpec spec;
  spec.rotation_angle = {a.rotation_deg[0] * M_PI / 180.0, a.rotation_deg[1] * M_PI / 180.0};
  spec.translation = {a.translation[0], a.translation[1]};
  if (!a.scale.empty()) spec.scale = fls::bench::Range{a.scale[0], a.scale[1]};
  spec.noise_sigma = a.sigma;
  spec.shuffle = !a.no_shuffle;
  spec.seed = a.seed;
  const auto p = fls::bench::perturb(cloud, spec);
  fls::io::write_cloud(p.cloud, a.output);
  const std::string gt_path = a.ground_truth.empty() ? a.output + ".gt.json" : a.ground_truth;
  json gt = transform_json(p.ground_truth);
  gt["noise_sigma"] = a.sigma;
  gt["seed"] = a.seed;
  gt["shuffled"] = spec.shuffle;
  fls::io::write_file(gt_path, gt.dump(2) + "\n");
  std::cout << "wrote " << a.output << " and " << gt_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud registration by Fourier coefficient matching"};
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* cmd_reg = app.add_subcommand("register", "Register a source cloud onto a target cloud");
  cmd_reg->add_option("source", reg.source, "Source cloud (.xyz or .ply)")->required();
  cmd_reg->add_option("target", reg.target, "Target cloud (.xyz or .ply)")->required();
  cmd_reg->add_option("--scale", reg.scale, "known:<s> or unknown")->capture_default_str();
  cmd_reg->add_flag("--refine-icp", reg.refine_icp, "Refine the result with point-to-point ICP");
  cmd_reg->add_option("--k", reg.k, "Basis functions per dimension")->capture_default_str();
  cmd_reg->add_option("--seed", reg.seed, "Seed for pair subsampling in scale estimation")->capture_default_str();
  cmd_reg->add_option("--max-iterations", reg.max_iterations, "Solver iteration cap")->capture_default_str();
  cmd_reg->add_option("--initial", reg.initial, "JSON file with an initial transform");
  cmd_reg->add_option("--output", reg.output, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  std::string bench_config, bench_out = "bench_out";
  std::optional<unsigned> bench_workers;
  auto* cmd_bench = app.add_subcommand("bench", "Run a declarative experiment");
  cmd_bench->add_option("--config", bench_config, "Experiment YAML file")->required();
  cmd_bench->add_option("--out-dir", bench_out, "Output directory")->capture_default_str();
  cmd_bench->add_option("--workers", bench_workers, "Worker threads (overrides the config)");

  std::string mesh_path, sample_out, sample_format = "auto";
  std::size_t sample_n = 1024;
  std::uint64_t sample_seed = 0;
  bool sample_normalize = false;
  auto* cmd_sample = app.add_subcommand("sample", "Sample a point cloud from a mesh surface");
  cmd_sample->add_option("mesh", mesh_path, "Mesh (.obj or .ply)")->required();
  cmd_sample->add_option("-o,--out", sample_out, "Output cloud")->required();
  cmd_sample->add_option("-n,--points", sample_n, "Number of points")->capture_default_str();
  cmd_sample->add_option("--seed", sample_seed, "Sampling seed")->capture_default_str();
  cmd_sample->add_option("--format", sample_format, "auto, xyz, ply, ply-ascii, ply-binary")->capture_default_str();
  cmd_sample->add_flag("--normalize", sample_normalize, "Fit the samples into the unit cube");

  PerturbArgs pert;
  auto* cmd_pert = app.add_subcommand("perturb", "Apply a random similarity and noise to a cloud");
  cmd_pert->add_option("input", pert.input, "Input cloud")->required();
  cmd_pert->add_option("-o,--out", pert.output, "Output cloud")->required();
  cmd_pert->add_option("--ground-truth", pert.ground_truth, "Ground-truth JSON (default <out>.gt.json)");
  cmd_pert->add_option("--rotation-deg", pert.rotation_deg, "Rotation angle range in degrees")->expected(2);
  cmd_pert->add_option("--translation", pert.translation, "Per-axis translation range")->expected(2);
  cmd_pert->add_option("--scale", pert.scale, "Scale range (omit for no scaling)")->expected(2);
  cmd_pert->add_option("--sigma", pert.sigma, "Gaussian noise sigma")->capture_default_str();
  cmd_pert->add_flag("--no-shuffle", pert.no_shuffle, "Keep the point order");
  cmd_pert->add_option("--seed", pert.seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*cmd_reg) return run_register(reg);
    if (*cmd_bench) return run_bench(bench_config, bench_out, bench_workers);
    if (*cmd_sample) {
      auto cloud = fls::io::sample_mesh(fls::io::load_mesh(mesh_path), sample_n, sample_seed);
      if (sample_normalize) cloud = fls::normalize_to_unit_cube(cloud).cloud;
      fls::io::write_cloud(cloud, sample_out, fls::io::parse_format(sample_format));
      std::cout << "wrote " << cloud.size() << " points to " << sample_out << "\n";
      return 0;
    }
    if (*cmd_pert) return run_perturb(pert);
  } catch (const fls::ParseError& e) {
    std::cerr << "error[" << fls::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const fls::Error& e) {
    std::cerr << "error[" << fls::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[parse_error]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
