#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MVC3D_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "mvc3d_cli_test";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch();
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("eval --scene " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run("gen-scene --preset mall --out " + dir.string()), 2);
  {
    std::ofstream(dir / "bad.json") << "{\"learning_rte\": 1}";
  }
  EXPECT_EQ(run("gen-scene --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
  {
    std::ofstream(dir / "broken.json") << "{not json";
  }
  EXPECT_EQ(run("eval --scene " + (dir / "broken.json").string() + " --ground-truth"), 2);
  fs::remove_all(dir);
}

TEST(Cli, GenerateThenScoreGroundTruth) {
  const fs::path dir = scratch();
  {
    std::ofstream(dir / "cfg.json")
        << R"({"preset": "desk", "train_frames": 2, "test_frames": 1, "scene": {"n_frames": 3}})";
  }
  const std::string cfg = " --config " + (dir / "cfg.json").string() + " --out " + dir.string();
  ASSERT_EQ(run("gen-scene" + cfg), 0);
  ASSERT_TRUE(fs::exists(dir / "scene.json"));
  ASSERT_EQ(run("make-gt --scene " + (dir / "scene.json").string() + cfg), 0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(run("eval --ground-truth --scene " + (dir / "scene.json").string() + cfg), 0);
  EXPECT_EQ(run("project --scene " + (dir / "scene.json").string() + " --frame 0 --view 0" + cfg), 0);
  EXPECT_EQ(run("project --scene " + (dir / "scene.json").string() + " --frame 99 --view 0" + cfg), 2);
  fs::remove_all(dir);
}
