#include "primvote/cli.hpp"

#include "primvote/cloud_io.hpp"
#include "primvote/datagen.hpp"
#include "primvote/detector.hpp"
#include "primvote/eval.hpp"
#include "primvote/report_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace primvote {

namespace {

namespace fs = std::filesystem;

// PRIMVOTE_THREADS; unset, empty or 0 means serial.
unsigned thread_count() {
  const char* env = std::getenv("PRIMVOTE_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 0) throw std::invalid_argument("PRIMVOTE_THREADS must be a non-negative integer");
  return static_cast<unsigned>(std::max(1L, n));
}

struct GenerateArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool ascii = false;
};

struct DetectArgs {
  std::string cloud;
  std::string out;
  std::vector<std::string> types;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> refs;
  std::optional<std::size_t> pairs;
  bool no_spread = false;
  bool no_bin_avg = false;
  bool nms_cluster = false;
  std::string labels;
  std::string dump_acc;
  std::size_t dump_ref = 0;
  bool timing = false;
};

struct EvaluateArgs {
  std::string dir = ".";
  std::string cloud;
  std::string truth;
  std::string report;
  std::string out_dir;
  double threshold = 0.6;
};

struct BenchArgs {
  std::string cloud;
  std::size_t repeat = 3;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> refs;
  std::optional<std::size_t> pairs;
};

DetectorConfig detector_config(const DetectArgs& a) {
  DetectorConfig c;
  if (!a.types.empty()) {
    c.enabled_types.fill(false);
    for (const std::string& t : a.types) c.enabled_types[static_cast<std::size_t>(parse_type_name(t))] = true;
  }
  if (a.seed) c.rng_seed = *a.seed;
  if (a.refs) c.n_reference = *a.refs;
  if (a.pairs) c.n_pair = *a.pairs;
  c.use_vote_spreading = !a.no_spread;
  c.use_bin_averaging = !a.no_bin_avg;
  c.use_cluster_averaging = !a.nms_cluster;
  c.threads = thread_count();
  c.validate();
  return c;
}

int run_generate(const GenerateArgs& a) {
  SceneSpec spec = spec_from_json(read_json(a.spec));
  if (a.seed) spec.rng_seed = *a.seed;
  const Scene scene = generate_scene(spec);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_cloud(dir / "cloud.ply", scene.cloud, a.ascii ? CloudFormat::kPlyAscii : CloudFormat::kPlyBinary);
  write_json(dir / "ground_truth.json", truth_to_json(scene.truth));
  std::cout << scene.cloud.size() << " points, " << scene.truth.primitives.size() << " primitives -> " << dir.string()
            << "\n";
  return kExitOk;
}

int run_detect(const DetectArgs& a) {
  const DetectorConfig config = detector_config(a);
  const PointCloud cloud = read_cloud(a.cloud);
  const DetectionReport report = detect(cloud, config);
  const fs::path out = a.out.empty() ? fs::path(a.cloud).parent_path() / "report.json" : fs::path(a.out);
  write_json(out, report_to_json(report, a.timing));
  if (!a.labels.empty()) write_text(a.labels, labels_csv(report.inlier_labels));
  if (!a.dump_acc.empty()) {
    std::ofstream dump(a.dump_acc);
    if (!dump) throw IoError("cannot write " + a.dump_acc);
    dump_accumulators_csv(cloud, config, a.dump_ref, dump);
    if (!dump) throw IoError("cannot write " + a.dump_acc);
  }
  std::cout << report.primitives.size() << " primitives from " << report.candidate_count << " candidates -> "
            << out.string() << "\n";
  if (a.timing) {
    const StageTimings& t = report.timing;
    std::printf("voting %.1f ms, clustering %.1f ms, inliers %.1f ms, total %.1f ms\n", t.voting_ms, t.clustering_ms,
                t.inliers_ms, t.total_ms);
  }
  return kExitOk;
}

int run_evaluate(const EvaluateArgs& a) {
  const fs::path dir(a.dir);
  const fs::path cloud_path = a.cloud.empty() ? dir / "cloud.ply" : fs::path(a.cloud);
  const fs::path truth_path = a.truth.empty() ? dir / "ground_truth.json" : fs::path(a.truth);
  const fs::path report_path = a.report.empty() ? dir / "report.json" : fs::path(a.report);
  const fs::path out_dir = a.out_dir.empty() ? dir : fs::path(a.out_dir);

  const PointCloud cloud = read_cloud(cloud_path);
  const GroundTruth truth = truth_from_json(read_json(truth_path));
  const DetectionReport report = report_from_json(read_json(report_path));
  if (truth.labels.size() != cloud.size())
    throw std::invalid_argument("ground truth has " + std::to_string(truth.labels.size()) + " labels for " +
                                std::to_string(cloud.size()) + " points");

  const std::vector<Primitive> shapes = report.shapes();
  const std::vector<std::int32_t> labels =
      shapes.empty() ? std::vector<std::int32_t>(cloud.size(), -1) : assign_inliers(cloud, shapes, report.config);
  const std::vector<double> grid = log_epsilon_grid();
  const Evaluation e = evaluate(cloud, truth, shapes, labels, grid, a.threshold);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  write_json(out_dir / "metrics.json", evaluation_to_json(e));
  write_text(out_dir / "curves.csv", coverage_csv(e));
  std::printf("precision %.3f recall %.3f missed %.3f noise %.3f\n", e.overall.scores.precision,
              e.overall.scores.recall, e.overall.scores.missed_rate, e.overall.scores.noise_rate);
  return kExitOk;
}

int run_bench(const BenchArgs& a) {
  const PointCloud cloud = read_cloud(a.cloud);
  DetectorConfig base;
  if (a.seed) base.rng_seed = *a.seed;
  if (a.refs) base.n_reference = *a.refs;
  if (a.pairs) base.n_pair = *a.pairs;
  base.threads = thread_count();
  base.validate();
  std::printf("%zu points, %zu x %zu pairs, %u thread(s), best of %zu\n", cloud.size(), base.n_reference, base.n_pair,
              base.threads, a.repeat);
  std::printf("%-9s %10s %10s %10s %10s %6s\n", "mode", "voting", "cluster", "inliers", "total", "found");

  for (int mode = -1; mode < static_cast<int>(kPrimitiveTypeCount); ++mode) {
    DetectorConfig config = base;
    std::string name = "joint";
    if (mode >= 0) {
      config.enabled_types.fill(false);
      config.enabled_types[static_cast<std::size_t>(mode)] = true;
      name = std::string(type_name(static_cast<PrimitiveType>(mode)));
    }
    std::optional<DetectionReport> best;
    for (std::size_t r = 0; r < a.repeat; ++r) {
      DetectionReport report = detect(cloud, config);
      if (!best || report.timing.total_ms < best->timing.total_ms) best = std::move(report);
    }
    const StageTimings& t = best->timing;
    std::printf("%-9s %10.1f %10.1f %10.1f %10.1f %6zu\n", name.c_str(), t.voting_ms, t.clustering_ms, t.inliers_ms,
                t.total_ms, best->primitives.size());
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Primitive detection in oriented point clouds by semi-global Hough voting", "primvote"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Render a synthetic scene with ground truth");
  generate->add_option("--spec", gen.spec, "Scene spec JSON")->required();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--seed", gen.seed, "Override the spec's seed");
  generate->add_flag("--ascii", gen.ascii, "Write ascii PLY instead of binary");

  DetectArgs det;
  auto* detect_cmd = app.add_subcommand("detect", "Detect primitives in an oriented point cloud");
  detect_cmd->add_option("cloud", det.cloud, "PLY or XYZN file")->required();
  detect_cmd->add_option("--out", det.out, "Report JSON (default: report.json next to the cloud)");
  detect_cmd->add_option("--types", det.types, "Comma-separated subset of plane,sphere,cylinder,cone")
      ->delimiter(',')
      ->check(CLI::IsMember({"plane", "sphere", "cylinder", "cone"}));
  detect_cmd->add_option("--seed", det.seed, "Sampling seed");
  detect_cmd->add_option("--refs", det.refs, "Reference points")->check(CLI::PositiveNumber);
  detect_cmd->add_option("--pairs", det.pairs, "Pairs per reference point")->check(CLI::PositiveNumber);
  detect_cmd->add_flag("--no-spread", det.no_spread, "Nearest-bin votes without constraint weights");
  detect_cmd->add_flag("--no-bin-avg", det.no_bin_avg, "Take the maximal bin's parameters");
  detect_cmd->add_flag("--nms-cluster", det.nms_cluster, "Keep the strongest candidate per cluster");
  detect_cmd->add_option("--labels", det.labels, "Write per-point inlier labels as CSV");
  detect_cmd->add_option("--dump-acc", det.dump_acc, "Write the accumulators of one reference point as CSV");
  detect_cmd->add_option("--dump-ref", det.dump_ref, "Reference used by --dump-acc (default 0)");
  detect_cmd->add_flag("--timing", det.timing, "Include stage timings in the report");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a report against the ground truth");
  evaluate_cmd->add_option("--dir", ev.dir, "Scene directory holding cloud.ply, ground_truth.json, report.json");
  evaluate_cmd->add_option("--cloud", ev.cloud, "Cloud file (overrides --dir)");
  evaluate_cmd->add_option("--truth", ev.truth, "Ground truth JSON (overrides --dir)");
  evaluate_cmd->add_option("--report", ev.report, "Report JSON (overrides --dir)");
  evaluate_cmd->add_option("--out", ev.out_dir, "Directory for metrics.json and curves.csv (default: --dir)");
  evaluate_cmd->add_option("--threshold", ev.threshold, "Overlap threshold T")->check(CLI::Range(1e-9, 1.0));

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time joint and single-type detection");
  bench_cmd->add_option("cloud", bench.cloud, "PLY or XYZN file")->required();
  bench_cmd->add_option("--repeat", bench.repeat, "Runs per mode; the fastest is reported")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Sampling seed");
  bench_cmd->add_option("--refs", bench.refs, "Reference points")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--pairs", bench.pairs, "Pairs per reference point")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return run_generate(gen);
    if (detect_cmd->parsed()) return run_detect(det);
    if (evaluate_cmd->parsed()) return run_evaluate(ev);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace primvote
