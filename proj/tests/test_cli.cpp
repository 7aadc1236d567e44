#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "panelforge/tuner.hpp"

namespace cli = panelforge::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "panelforge");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path tmp(const char* name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Cli, VerifyDefaultPasses) {
  const auto r = run({"verify"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(" 0 failed"), std::string::npos);
}

TEST(Cli, VerifySingleDimsAllVariants) {
  const auto r = run({"verify", "--dims", "7x5x3", "--variant", "all"});
  EXPECT_EQ(r.code, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 7u);
  EXPECT_EQ(ls.back(), "6 cases, 0 failed");
  for (int i = 0; i < 6; ++i) EXPECT_EQ(ls[i].rfind("ok ", 0), 0u) << ls[i];
}

TEST(Cli, VerifyInjectedFaultFails) {
  const auto r = run({"verify", "--inject-fault", "--dims", "9x13x5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL B3A2C0 f32 pack=AB shape=8x12 dims=9x13x5"), std::string::npos) << r.out;
}

TEST(Cli, BenchResnetScaled) {
  const auto r = run({"bench", "--workload", "resnet50", "--scale-divisor", "6272", "--reps", "1", "--check"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 21u);
  EXPECT_EQ(ls[0].rfind("schema=1,", 0), 0u);
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_NE(ls[i].find(",true,"), std::string::npos) << ls[i];
}

TEST(Cli, BenchSquareDims) {
  const auto r = run({"bench", "--workload", "square", "--dims", "2000", "--scale-divisor", "20", "--reps", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("square:2000,100,100,100,"), std::string::npos) << r.out;
  // Unscaled the row targets the 2000-cube problem.
  const auto big = run({"bench", "--workload", "square", "--dims", "2000", "--reps", "0"});
  EXPECT_EQ(big.code, 2);
}

TEST(Cli, BenchSeedGivesSameChecksum) {
  auto checksum_of = [](const std::string& seed) {
    const auto r = run({"bench", "--workload", "dims", "--dims", "30x20x10", "--reps", "1", "--seed", seed});
    const auto row = lines(r.out).at(1);
    return row.substr(row.rfind(',') + 1);
  };
  EXPECT_EQ(checksum_of("7"), checksum_of("7"));
  EXPECT_NE(checksum_of("7"), checksum_of("8"));
}

TEST(Cli, BenchOutputFileAndVariants) {
  const auto path = tmp("pf_bench.csv");
  const auto r = run({"bench", "--workload", "dims", "--dims", "33x17x9", "--variant", "all", "--dtype", "all",
                      "--reps", "1", "--check", "--output", path.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(lines(slurp(path)).size(), 13u);
  std::filesystem::remove(path);
}

TEST(Cli, BenchParallelFlags) {
  const auto r = run({"bench", "--workload", "dims", "--dims", "64x64x64", "--parallel-loop", "ic", "--threads", "2",
                      "--reps", "1", "--check"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",ic,2,"), std::string::npos);
}

TEST(Cli, BenchUsageErrors) {
  EXPECT_EQ(run({"bench", "--workload", "imagenet"}).code, 2);
  EXPECT_EQ(run({"bench", "--variant", "X1Y2Z0"}).code, 2);
  EXPECT_EQ(run({"bench", "--workload", "dims", "--dims", "4x4x4", "--variant", "B3C2A0", "--pack", "A"}).code, 2);
  EXPECT_EQ(run({"bench", "--threads", "4"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(Cli, TuneLayerTwoTrialsAndReplay) {
  const auto rec = tmp("pf_rec.csv"), cache = tmp("pf_cache.json");
  const auto first = run({"tune", "--workload", "resnet50", "--scale-divisor", "6272", "--record", rec.string(),
                          "--cache", cache.string()});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_NE(first.out.find("resnet50:2,64,64,64,B3A2C0,f32,4,16,0,"), std::string::npos);
  EXPECT_NE(first.out.find("resnet50:2,64,64,64,B3A2C0,f32,4,28,0,"), std::string::npos);
  const auto replay = run({"tune", "--workload", "resnet50", "--scale-divisor", "6272", "--replay", rec.string(),
                           "--no-save"});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(first.out, replay.out);
  EXPECT_EQ(panelforge::load_results(cache).entries.size(), 20u);
  std::filesystem::remove(rec);
  std::filesystem::remove(cache);
}

TEST(Cli, TuneEmptyGridIsUsageError) {
  EXPECT_EQ(run({"tune", "--shapes", "", "--no-save"}).code, 2);
  EXPECT_EQ(run({"tune", "--shapes", " , ", "--no-save"}).code, 2);
}

TEST(Cli, TuneCustomShapes) {
  const auto r = run({"tune", "--workload", "dims", "--dims", "40x36x20", "--shapes", "4x8,8x4", "--no-save"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 3u);
}

TEST(Cli, ModelTableTwoRows) {
  auto l1_line = [](std::vector<std::string> args) {
    args.insert(args.begin(), "model");
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return lines(r.out).at(2);
  };
  EXPECT_EQ(l1_line({"--layer", "2", "--mr", "4", "--nr", "12"}).rfind("L1 = 4.69%", 0), 0u);
  EXPECT_EQ(l1_line({"--layer", "8", "--mr", "4", "--nr", "12"}).rfind("L1 = 9.38%", 0), 0u);
  EXPECT_EQ(l1_line({"--dims", "100352x512x128", "--mr", "4", "--nr", "16"}).rfind("L1 = 12.50%", 0), 0u);
}

TEST(Cli, ModelCsvAndCacheSpecFile) {
  const auto spec = tmp("pf_spec.cfg");
  {
    std::ofstream out(spec);
    out << panelforge::format_cache_spec(panelforge::CacheSpec::carmel());
  }
  const auto r = run({"model", "--cache-spec", spec.string(), "--layer", "2", "--mr", "4", "--nr", "12"});
  ASSERT_EQ(r.code, 0);
  const auto ls = lines(r.out);
  EXPECT_EQ(ls.at(4).rfind("schema=1,", 0), 0u);
  EXPECT_NE(ls.at(5).find(",64,64,4.69,"), std::string::npos) << ls.at(5);
  {
    std::ofstream out(spec);
    out << "l1.size_bytes = 64\nl1.ways = 1\nl1.line_bytes = 64\n"
           "l2.size_bytes = 2097152\nl2.ways = 16\nl2.line_bytes = 64\n"
           "l3.size_bytes = 4194304\nl3.ways = 16\nl3.line_bytes = 64\n";
  }
  const auto tiny = run({"model", "--cache-spec", spec.string(), "--dims", "64x64x64"});
  EXPECT_EQ(tiny.code, 1);
  EXPECT_NE(tiny.err.find("L1"), std::string::npos);
  std::filesystem::remove(spec);
}
