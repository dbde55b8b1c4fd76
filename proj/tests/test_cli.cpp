#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "texsense/model.hpp"
#include "texsense/wav.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "texsense_test_cli";

struct CliRun {
  int code = -1;
  std::string out;
};

/// Runs the CLI with `args`; stdout and stderr are captured together.
CliRun cli(const std::string& args) {
  const fs::path log = kDir / "last.log";
  const std::string cmd = std::string(TEXSENSE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string p(const fs::path& path) { return path.string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    ASSERT_EQ(cli("make-synthetic --out-dir " + p(kDir / "corpus") +
                  " --seed 3 --files-per-label 1 --seconds 6").code,
              0);
    const auto r = cli("train --synthetic 7 --chunks-per-class 300 --epochs 3 --batch 256 --seed 1 --out " +
                       p(kDir / "model.rtm"));
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_EQ(cli("synth-wav --out " + p(kDir / "in.wav") + " --pattern rough:1.5,silence:0.5,smooth:1.5 --seed 4")
                  .code,
              0);
  }
};

}  // namespace

TEST_F(Cli, HelpSucceeds) {
  const auto r = cli("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"train", "eval", "simulate", "send", "receive", "chunk", "convert"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(cli("train --bogus").code, 2);
  EXPECT_EQ(cli("simulate --in").code, 2);
}

TEST_F(Cli, MissingInputIsUsageError) {
  EXPECT_EQ(cli("simulate --in " + p(kDir / "nope.wav") + " --model " + p(kDir / "model.rtm") +
                " --out-dir " + p(kDir / "x")).code,
            2);
}

TEST_F(Cli, TrainWritesSidecars) {
  EXPECT_TRUE(fs::exists(kDir / "model.rtm"));
  const auto loss = slurp(kDir / "model.rtm.loss.txt");
  EXPECT_EQ(loss.rfind("epoch\tloss\n", 0), 0u) << loss;
  const auto run = nlohmann::json::parse(slurp(kDir / "model.rtm.run.json"));
  EXPECT_EQ(run.at("command"), "train");
  EXPECT_TRUE(run.contains("params"));
  EXPECT_TRUE(run.contains("created_utc"));
}

TEST_F(Cli, RetrainingGivesIdenticalModel) {
  ASSERT_EQ(cli("train --synthetic 7 --chunks-per-class 300 --epochs 3 --batch 256 --seed 1 --out " +
                p(kDir / "again.rtm")).code,
            0);
  EXPECT_EQ(slurp(kDir / "again.rtm"), slurp(kDir / "model.rtm"));
}

TEST_F(Cli, EvalReportsAccuracy) {
  const auto r = cli("eval --model " + p(kDir / "model.rtm") + " --synthetic 9 --chunks-per-class 50 --json " +
                     p(kDir / "eval.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("accuracy_rough"), std::string::npos) << r.out;
  const auto j = nlohmann::json::parse(slurp(kDir / "eval.json"));
  EXPECT_GE(j.at("accuracy_rough").get<double>(), 0.9);
  EXPECT_GE(j.at("accuracy_smooth").get<double>(), 0.9);
}

TEST_F(Cli, EvalOnManifestTestSplit) {
  const auto r = cli("eval --model " + p(kDir / "model.rtm") + " --manifest " + p(kDir / "corpus/manifest.txt") +
                     " --split test");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, FingerprintMismatchIsConfigExit) {
  const auto r = cli("eval --model " + p(kDir / "model.rtm") + " --synthetic 9 --chunks-per-class 5 --hann");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("window"), std::string::npos) << r.out;
}

TEST_F(Cli, CorruptModelIsDataExit) {
  std::string bytes = slurp(kDir / "model.rtm");
  bytes[bytes.size() / 2] ^= 0x10;
  std::ofstream(kDir / "bad.rtm", std::ios::binary) << bytes;
  EXPECT_EQ(cli("eval --model " + p(kDir / "bad.rtm") + " --synthetic 9 --chunks-per-class 5").code, 3);
}

TEST_F(Cli, EvalAfterWithoutTestSplitFails) {
  const fs::path m = kDir / "train_only.txt";
  std::ofstream(m) << "texsense-manifest 1\n" << p(kDir / "corpus/train_rough_0.wav") << " o rough x train\n";
  const auto r = cli("train --manifest " + p(m) + " --eval-after --epochs 1 --out " + p(kDir / "t.rtm"));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_FALSE(fs::exists(kDir / "t.rtm"));
}

TEST_F(Cli, TrainAndEvalFromManifest) {
  const auto r = cli("train --manifest " + p(kDir / "corpus/manifest.txt") +
                     " --eval-after --epochs 2 --batch 64 --out " + p(kDir / "m2.rtm"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(kDir / "m2.rtm.eval.txt"));
}

TEST_F(Cli, ChunkWritesCache) {
  const auto r = cli("chunk --manifest " + p(kDir / "corpus/manifest.txt") + " --split all --out " +
                     p(kDir / "chunks.bin"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(kDir / "chunks.bin"));
  EXPECT_EQ(cli("eval --model " + p(kDir / "model.rtm") + " --chunks " + p(kDir / "chunks.bin")).code, 0);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRuns) {
  for (const char* d : {"sim_a", "sim_b"}) {
    const auto r = cli("simulate --in " + p(kDir / "in.wav") + " --model " + p(kDir / "model.rtm") +
                       " --out-dir " + p(kDir / d) + " --transport --loss 0.05 --impair-seed 3");
    ASSERT_EQ(r.code, 0) << r.out;
  }
  EXPECT_EQ(slurp(kDir / "sim_a/timeline.tsv"), slurp(kDir / "sim_b/timeline.tsv"));
  EXPECT_EQ(slurp(kDir / "sim_a/oscillator.wav"), slurp(kDir / "sim_b/oscillator.wav"));
  EXPECT_TRUE(fs::exists(kDir / "sim_a/run.json"));
  EXPECT_NE(slurp(kDir / "sim_a/latency.txt").find("total_ms"), std::string::npos);
  const auto osc = texsense::read_wav(kDir / "sim_a/oscillator.wav");
  EXPECT_EQ(osc.num_channels(), 1u);
}

TEST_F(Cli, ConvertPicksChannels) {
  texsense::WavData w;
  w.channels = {std::vector<float>(1000, 0.1f), std::vector<float>(1000, 0.2f), std::vector<float>(1000, 0.3f)};
  texsense::write_wav(kDir / "three.wav", w);
  ASSERT_EQ(cli("convert --in " + p(kDir / "three.wav") + " --out " + p(kDir / "two.wav") +
                " --piezo-channel 2 --mems-channel 0").code,
            0);
  const auto two = texsense::read_wav(kDir / "two.wav");
  ASSERT_EQ(two.num_channels(), 2u);
  EXPECT_EQ(two.channels[0][5], 0.3f);
  EXPECT_EQ(two.channels[1][5], 0.1f);
}

TEST_F(Cli, SendAndReceiveOverLoopback) {
  const int port = 39000 + static_cast<int>(::getpid() % 2000);
  CliRun rx;
  std::thread receiver([&] {
    rx = cli("receive --listen 127.0.0.1:" + std::to_string(port) + " --model " + p(kDir / "model.rtm") +
             " --out-dir " + p(kDir / "rx") + " --idle-timeout 1 --start-timeout 20");
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  const std::string send_cmd = std::string(TEXSENSE_CLI) + " send --in " + p(kDir / "in.wav") +
                               " --to 127.0.0.1:" + std::to_string(port) + " --speed 10 > /dev/null 2>&1";
  EXPECT_EQ(std::system(send_cmd.c_str()), 0);
  receiver.join();
  EXPECT_EQ(rx.code, 0) << rx.out;
  EXPECT_TRUE(fs::exists(kDir / "rx/timeline.tsv"));
  EXPECT_TRUE(fs::exists(kDir / "rx/stats.txt"));
  ASSERT_EQ(cli("simulate --in " + p(kDir / "in.wav") + " --model " + p(kDir / "model.rtm") + " --out-dir " +
                p(kDir / "sim_plain")).code,
            0);
  EXPECT_EQ(slurp(kDir / "rx/timeline.tsv"), slurp(kDir / "sim_plain/timeline.tsv"));
}

TEST_F(Cli, ReceiveWithoutSenderIsNetworkExit) {
  const auto r = cli("receive --listen 127.0.0.1:0 --model " + p(kDir / "model.rtm") + " --out-dir " +
                     p(kDir / "rx_none") + " --start-timeout 0.3");
  EXPECT_EQ(r.code, 5) << r.out;
}
