#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lgobs/dataset.hpp"
#include "lgobs/errors.hpp"
#include "lgobs/eval.hpp"
#include "lgobs_cli/commands.hpp"

namespace lgobs::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args,
              const std::optional<std::string>& env = std::nullopt) {
  std::ostringstream out, err;
  const int code = run(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("lgobs_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small dataset: 10 sequences of length 6, two inference sets of length 15.
  void make_data(const std::string& name = "data") {
    const auto r = invoke({"generate", "--data", path(name), "--n", "10", "--m", "6",
                           "--inference-sequences", "3", "--inference-length", "15",
                           "--inference-sigmas", "0.1,0.3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  void make_checkpoint(const std::string& name = "run", const std::string& iters = "1") {
    const auto r = invoke({"train", "--data", path("data"), "--out", path(name), "--h", "6",
                           "--batch-size", "4", "--max-iters", iters});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(invoke({"train", "--help"}).code, kExitOk);
  EXPECT_EQ(invoke({}).code, kExitValidation);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(invoke({"generate", "--no-such-flag", "1"}).code, kExitValidation);
  EXPECT_EQ(invoke({"generate", "--preset", "huge"}).code, kExitValidation);
  EXPECT_EQ(invoke({"generate", "--n", "ten"}).code, kExitValidation);
}

TEST_F(CliTest, GenerateRejectsZeroLength) {
  const auto r = invoke({"generate", "--data", path("d"), "--m", "0"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("length"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("d")));
}

TEST_F(CliTest, GenerateIsByteIdentical) {
  make_data("a");
  make_data("b");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(path("a"))) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(path("b") / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 6u);  // 3 splits, 2 inference sets, manifest
}

TEST_F(CliTest, PaperPresetSplit) {
  const auto r = invoke({"generate", "--preset", "paper", "--data", path("p"), "--m", "1",
                         "--inference-sequences", "1", "--inference-length", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_manifest(path("p"));
  EXPECT_EQ(m.counts.train, 16000u);
  EXPECT_EQ(m.counts.val, 2000u);
  EXPECT_EQ(m.counts.test, 2000u);
  EXPECT_NE(r.out.find("n = 20000"), std::string::npos);
}

TEST_F(CliTest, LayeringAndProvenance) {
  std::ofstream(path("cfg.ini")) << "[run]\npreset = paper\n\n[data]\nn = 12   ; comment\n"
                                    "dt = 0.02\n\n[train]\nlr = 0.001\n";
  const auto cfg = resolve(fs::path(path("cfg.ini")), Overrides{std::nullopt, {{"data.dt", "0.05"}}});
  EXPECT_EQ(cfg.preset, "paper");
  EXPECT_EQ(cfg.n, 12u);
  EXPECT_EQ(cfg.m, 100u);
  EXPECT_EQ(cfg.dt, 0.05);
  EXPECT_EQ(cfg.lr, 0.001);
  EXPECT_EQ(cfg.batch_size, 64u);
  EXPECT_EQ(cfg.provenance.at("data.n"), Source::File);
  EXPECT_EQ(cfg.provenance.at("data.m"), Source::Preset);
  EXPECT_EQ(cfg.provenance.at("data.dt"), Source::Flag);
  EXPECT_EQ(cfg.provenance.at("train.batch_size"), Source::Default);

  // A preset flag beats the file's preset.
  const auto desk = resolve(fs::path(path("cfg.ini")), Overrides{"desk", {}});
  EXPECT_EQ(desk.m, 50u);
  EXPECT_EQ(desk.n, 12u);

  std::ostringstream echo;
  print_effective(echo, cfg, Command::Generate);
  EXPECT_NE(echo.str().find("n = 12"), std::string::npos);
  EXPECT_NE(echo.str().find("; file"), std::string::npos);
  EXPECT_NE(echo.str().find("; preset"), std::string::npos);
  EXPECT_NE(echo.str().find("; flag"), std::string::npos);
  EXPECT_NE(echo.str().find("; default"), std::string::npos);
}

TEST_F(CliTest, EchoedConfigReproducesRun) {
  const auto cfg = resolve(std::nullopt, Overrides{"paper", {{"train.lr", "0.0007"},
                                                            {"train.out", "some dir/x"},
                                                            {"train.clip_norm", "2.5"}}});
  std::ostringstream echo;
  print_effective(echo, cfg, Command::Train);
  std::ofstream(path("echo.ini")) << echo.str();
  const auto again = resolve(fs::path(path("echo.ini")), Overrides{});
  EXPECT_EQ(again.lr, 0.0007);
  EXPECT_EQ(again.out_dir, "some dir/x");
  EXPECT_EQ(again.clip_norm, 2.5);
  EXPECT_EQ(again.hidden, 512u);
  EXPECT_EQ(again.preset, "paper");
}

TEST_F(CliTest, ConfigFileErrors) {
  std::ofstream(path("bad_key.ini")) << "[data]\nbogus = 1\n";
  std::ofstream(path("bad_value.ini")) << "[train]\nlr = fast\n";
  EXPECT_EQ(invoke({"gradcheck", "--config", path("bad_key.ini")}).code, kExitValidation);
  EXPECT_EQ(invoke({"train", "--config", path("bad_value.ini")}).code, kExitValidation);
  EXPECT_EQ(invoke({"gradcheck", "--config", path("missing.ini")}).code, kExitValidation);
  EXPECT_EQ(invoke({"gradcheck"}, path("missing.ini")).code, kExitValidation);
}

TEST_F(CliTest, EnvironmentSuppliesDefaultConfig) {
  std::ofstream(path("env.ini")) << "[gradcheck]\nhidden = 3\nlength = 2\n";
  const auto r = invoke({"gradcheck", "--m", "3"}, path("env.ini"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("hidden = 3"), std::string::npos);
  EXPECT_NE(r.out.find("length = 3"), std::string::npos);
  // An explicit --config wins over the environment.
  std::ofstream(path("other.ini")) << "[gradcheck]\nhidden = 2\n";
  const auto o = invoke({"gradcheck", "--config", path("other.ini")}, path("env.ini"));
  EXPECT_NE(o.out.find("hidden = 2"), std::string::npos);
  EXPECT_NE(o.out.find("length = 3 "), std::string::npos);
}

TEST_F(CliTest, TrainWithoutIterationsWritesInitialCheckpoint) {
  make_data();
  const auto r = invoke({"train", "--data", path("data"), "--out", path("r0"), "--h", "4",
                         "--max-iters", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("r0") + "/iter_00000.ckpt"));
  EXPECT_TRUE(fs::exists(path("r0") + "/best.ckpt"));
  EXPECT_EQ(lines(slurp(path("r0") + "/history.txt")), 2u);
}

TEST_F(CliTest, TrainIsDeterministic) {
  make_data();
  make_checkpoint("r1", "2");
  make_checkpoint("r2", "2");
  EXPECT_EQ(slurp(path("r1") + "/history.txt"), slurp(path("r2") + "/history.txt"));
  EXPECT_EQ(slurp(path("r1") + "/best.ckpt"), slurp(path("r2") + "/best.ckpt"));
}

TEST_F(CliTest, TrainRequiresDataset) {
  const auto r = invoke({"train", "--data", path("nowhere"), "--out", path("r")});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos);
}

TEST_F(CliTest, EvaluateTraceLength) {
  make_data();
  make_checkpoint();
  const auto r = invoke({"evaluate", "--data", path("data"), "--checkpoint", path("run/best.ckpt"),
                         "--report", path("rep"), "--skip", "10", "--sigma", "0.3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& name : ErrorTrace::channel_names())
    EXPECT_EQ(lines(slurp(path("rep") + "/traces/" + name + ".csv")), 1u + 15 - 10) << name;
  EXPECT_EQ(parse_sweep_csv(slurp(path("rep") + "/sweep.csv"))[0].sigma, 0.3);

  EXPECT_EQ(invoke({"evaluate", "--data", path("data"), "--checkpoint", path("run/best.ckpt"),
                    "--skip", "15"})
                .code,
            kExitValidation);
  EXPECT_EQ(invoke({"evaluate", "--data", path("data"), "--checkpoint", path("none.ckpt")}).code,
            kExitRuntime);
}

TEST_F(CliTest, SweepOnUntrainedParameters) {
  make_data();
  make_checkpoint("r0", "0");
  const auto r = invoke({"sweep", "--checkpoint", path("r0/best.ckpt"), "--report", path("rep"),
                         "--sequences", "2", "--length", "25"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_sweep_csv(slurp(path("rep") + "/sweep.csv"));
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].sigma, 0.1 * static_cast<double>(i + 1), 1e-12);
    EXPECT_LE(rows[i].manifold, 1e-6);
  }
  EXPECT_TRUE(fs::exists(path("rep") + "/summary.txt"));
}

TEST_F(CliTest, GradcheckExitCodes) {
  const auto ok = invoke({"gradcheck", "--h", "4", "--m", "3"});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("max relative error"), std::string::npos);
  EXPECT_NE(ok.out.find("PASS"), std::string::npos);

  const auto bad = invoke({"gradcheck", "--corrupt", "0.01"});
  EXPECT_EQ(bad.code, kExitRuntime);
  EXPECT_NE(bad.out.find("worst: "), std::string::npos);
}

}  // namespace
}  // namespace lgobs::cli
