#include "primvote/cli.hpp"
#include "primvote/report_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace primvote {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "primvote");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return cli_main(static_cast<int>(args.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_spec(const TempDir& dir, const std::string& json) {
  const fs::path path = dir.path() / "spec.json";
  write_text(path, json);
  return path;
}

const char* kSmallSpec = R"({"counts": {"plane": 1, "sphere": 1}, "noise_sigma": 0.005, "rng_seed": 3,
                             "camera": {"width": 150, "height": 150}})";

TEST(Cli, GenerateDetectEvaluate) {
  TempDir dir;
  const fs::path spec = write_spec(dir, kSmallSpec);
  const fs::path scene = dir.path() / "scene";
  ASSERT_EQ(run({"generate", "--spec", spec.string(), "--out", scene.string()}), kExitOk);
  ASSERT_TRUE(fs::exists(scene / "cloud.ply"));
  ASSERT_TRUE(fs::exists(scene / "ground_truth.json"));
  ASSERT_EQ(run({"detect", (scene / "cloud.ply").string(), "--seed", "7", "--labels", (scene / "labels.csv").string()}),
            kExitOk);
  const DetectionReport report = report_from_json(read_json(scene / "report.json"));
  EXPECT_EQ(report.config.rng_seed, 7u);
  EXPECT_FALSE(report.primitives.empty());
  ASSERT_EQ(run({"evaluate", "--dir", scene.string()}), kExitOk);
  const Json metrics = read_json(scene / "metrics.json");
  EXPECT_TRUE(metrics.contains("overall"));
  const std::string curves = slurp(scene / "curves.csv");
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 101);
}

TEST(Cli, ArtifactsAreByteIdenticalAcrossRuns) {
  TempDir dir;
  const fs::path spec = write_spec(dir, kSmallSpec);
  std::vector<std::string> bytes;
  for (const char* name : {"a", "b"}) {
    const fs::path scene = dir.path() / name;
    ASSERT_EQ(run({"generate", "--spec", spec.string(), "--out", scene.string()}), kExitOk);
    ASSERT_EQ(run({"detect", (scene / "cloud.ply").string(), "--seed", "7"}), kExitOk);
    ASSERT_EQ(run({"evaluate", "--dir", scene.string()}), kExitOk);
    std::string all;
    for (const char* file : {"cloud.ply", "ground_truth.json", "report.json", "metrics.json", "curves.csv"})
      all += slurp(scene / file);
    bytes.push_back(all);
  }
  EXPECT_EQ(bytes[0], bytes[1]);
}

TEST(Cli, TypeSubsetOnPlaneOnlyCloudFindsNothing) {
  TempDir dir;
  const fs::path spec = write_spec(dir, R"({"counts": {"plane": 2}, "noise_sigma": 0.005, "rng_seed": 5,
                                            "camera": {"width": 150, "height": 150}})");
  const fs::path scene = dir.path() / "scene";
  ASSERT_EQ(run({"generate", "--spec", spec.string(), "--out", scene.string(), "--ascii"}), kExitOk);
  ASSERT_EQ(run({"detect", (scene / "cloud.ply").string(), "--types", "sphere", "--out",
                 (dir.path() / "spheres.json").string()}),
            kExitOk);
  EXPECT_TRUE(report_from_json(read_json(dir.path() / "spheres.json")).primitives.empty());
  ASSERT_EQ(run({"detect", (scene / "cloud.ply").string(), "--types", "plane,cone", "--out",
                 (dir.path() / "planes.json").string()}),
            kExitOk);
  const DetectionReport planes = report_from_json(read_json(dir.path() / "planes.json"));
  EXPECT_FALSE(planes.primitives.empty());
  for (const auto& d : planes.primitives) EXPECT_EQ(type_of(d.primitive), PrimitiveType::kPlane);
}

TEST(Cli, DumpsAccumulators) {
  TempDir dir;
  const fs::path spec = write_spec(dir, kSmallSpec);
  const fs::path scene = dir.path() / "scene";
  ASSERT_EQ(run({"generate", "--spec", spec.string(), "--out", scene.string()}), kExitOk);
  const fs::path dump = dir.path() / "acc.csv";
  ASSERT_EQ(run({"detect", (scene / "cloud.ply").string(), "--dump-acc", dump.string(), "--dump-ref", "3"}), kExitOk);
  EXPECT_EQ(slurp(dump).rfind("type,p1,p2,p3,p4,mass\n", 0), 0u);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"detect", "x.ply", "--bogus"}), kExitUsage);
  EXPECT_EQ(run({"detect", "x.ply", "--types", "torus"}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_EQ(run({"detect", (dir.path() / "missing.ply").string()}), kExitIo);
  EXPECT_EQ(run({"evaluate", "--dir", (dir.path() / "nowhere").string()}), kExitIo);

  const fs::path bad = write_spec(dir, R"({"counts": {"torus": 1}})");
  EXPECT_EQ(run({"generate", "--spec", bad.string(), "--out", (dir.path() / "s").string()}), kExitInvalid);
  const fs::path empty = write_spec(dir, R"({"counts": {}})");
  EXPECT_EQ(run({"generate", "--spec", empty.string(), "--out", (dir.path() / "s").string()}), kExitInvalid);
  write_text(dir.path() / "bad.xyzn", "0 0 0 0 0 0.5\n");
  EXPECT_EQ(run({"detect", (dir.path() / "bad.xyzn").string()}), kExitInvalid);
}

}  // namespace
}  // namespace primvote
