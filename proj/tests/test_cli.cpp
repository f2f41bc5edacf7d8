#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "meshmap/meshmap.hpp"

using namespace meshmap;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& name) { return ::testing::TempDir() + "meshmap_cli_" + name; }

Run run(const std::string& args) {
  const std::string out = tmp("stdout.txt"), err = tmp("stderr.txt");
  const std::string cmd = std::string(MESHMAP_CLI) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST(Cli, PipelineIsLossless) {
  const auto model = tmp("model.rmtf"), scene = tmp("scene.json"), maps = tmp("maps.rmtf"),
             people = tmp("people.json"), report = tmp("report.json"), csv = tmp("report.csv");
  ASSERT_EQ(run("model --out " + model).code, 0);
  ASSERT_EQ(run("synth --n 3 --seed 1 --model " + model + " --out " + scene).code, 0);
  ASSERT_EQ(run("encode --scene " + scene + " --model " + model + " --car-gamma 0 --out " + maps).code, 0);
  ASSERT_EQ(run("decode --maps " + maps + " --model " + model + " --tc 0.25 --topn 64 --out " + people).code, 0);
  const auto r = run("eval --pred " + people + " --gt " + scene + " --model " + model + " --report " + report +
                     " --csv " + csv);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = read_json_file(report);
  EXPECT_EQ(rep["n_gt"], 3);
  EXPECT_EQ(rep["n_matched"], 3);
  EXPECT_LT(rep["mpjpe_mm"].get<double>(), 1e-3);
  EXPECT_EQ(rep["ap50"].get<double>(), 1.0);
  EXPECT_NE(slurp(csv).find("all,"), std::string::npos);
}

TEST(Cli, SynthWritesToStdout) {
  const auto r = run("synth --n 2 --seed 4 --overlap severe");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(Json::parse(r.out)["people"].size(), 2u);
}

TEST(Cli, DecodeOfZeroMapsIsEmpty) {
  const auto maps = tmp("zero.rmtf");
  save_rmtf(maps, maps_to_tensors({CenterHeatmap(64, 64), MeshParamMap(64, 64)}));
  const auto r = run("decode --maps " + maps);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(Json::parse(r.out), Json::parse(R"({"people":[]})"));
}

TEST(Cli, LossPrintsBreakdown) {
  const auto scene = tmp("loss_scene.json"), maps = tmp("loss_maps.rmtf");
  ASSERT_EQ(run("synth --n 2 --seed 3 --out " + scene).code, 0);
  ASSERT_EQ(run("encode --scene " + scene + " --out " + maps).code, 0);
  const auto r = run("loss --pred " + maps + " --gt " + maps + " --no-prior");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  for (const char* k : {"center", "pose", "shape", "j3d", "paj3d", "pj2d", "prior", "total"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["people"], 2);
  EXPECT_LT(j["pose"].get<double>(), 1e-12);
}

TEST(Cli, BenchPrintsOneRowPerCount) {
  const auto r = run("bench --people 1,8,32 --repeat 20");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n_people,mean_ms,p95_ms");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3);
  const auto range = run("bench --people 1..4 --repeat 2");
  EXPECT_EQ(std::count(range.out.begin(), range.out.end(), '\n'), 5);
}

TEST(Cli, UsageErrorsExitOne) {
  auto r = run("synth --bogus");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(Json::parse(r.err).is_object());
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("synth --overlap huge").code, 1);
  EXPECT_EQ(run("eval --pred a.json").code, 1);
}

TEST(Cli, DataErrorsExitTwoWithJson) {
  auto r = run("decode --maps /nonexistent.rmtf");
  EXPECT_EQ(r.code, 2);
  const Json e = Json::parse(r.err);
  EXPECT_EQ(e["error"], "load");
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  const auto bad = tmp("bad.json");
  std::ofstream(bad) << "{not json";
  r = run("encode --scene " + bad + " --out " + tmp("x.rmtf"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(Json::parse(r.err)["error"], "parse");
}
