// Copyright 2026 The covflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "covflow/cli.hpp"

using namespace covflow;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("covflow_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kSmallPlan = R"(model = single_integrator_2d
horizon = 40
dt = 0.05
s0 = 0.2, 0.2
optimizer.max_iterations = 5
optimizer.metric_samples = 200
)";

}  // namespace

TEST_CASE("plan writes trajectory and metrics") {
  const fs::path dir = scratch_dir("plan");
  write(dir / "run.cfg", kSmallPlan);
  const std::string cfg = (dir / "run.cfg").string();
  const std::string out = (dir / "out").string();

  const Run r = cli({"plan", "--config", cfg, "--out", out, "--workers", "1"});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  const json summary = json::parse(r.out);
  CHECK(summary["iterations"] == 5);
  CHECK(std::isfinite(summary["coverage"].get<double>()));
  REQUIRE(fs::exists(dir / "out" / "trajectory.csv"));
  const json metrics = json::parse(slurp(dir / "out" / "metrics.json"));
  CHECK(metrics["command"] == "plan");
  CHECK(metrics["horizon"] == 40);
  CHECK(metrics["history"].size() == 5);
  CHECK(metrics["workers"] == 1);

  // Round trip through the metric subcommand gives the same number.
  const Run m = cli({"metric", "--config", cfg, "--trajectory", (dir / "out" / "trajectory.csv").string(),
                     "--workers", "1"});
  REQUIRE_MESSAGE(m.code == kExitOk, m.err);
  CHECK(json::parse(m.out)["coverage"].get<double>() ==
        doctest::Approx(summary["coverage"].get<double>()).epsilon(1e-12));

  SUBCASE("refuses to overwrite without --force") {
    const Run again = cli({"plan", "--config", cfg, "--out", out});
    CHECK(again.code == kExitUsage);
    CHECK(again.err.find("--force") != std::string::npos);
    CHECK(cli({"plan", "--config", cfg, "--out", out, "--force", "--workers", "1"}).code == kExitOk);
  }
  SUBCASE("seed override changes the run") {
    const Run s = cli({"plan", "--config", cfg, "--out", out, "--force", "--seed", "99"});
    REQUIRE(s.code == kExitOk);
    CHECK(json::parse(slurp(dir / "out" / "metrics.json"))["seed"] == 99);
  }
  fs::remove_all(dir);
}

TEST_CASE("worker resolution") {
  const fs::path dir = scratch_dir("workers");
  write(dir / "run.cfg", std::string(kSmallPlan) + "runtime.workers = 3\n");
  const std::string cfg = (dir / "run.cfg").string();
  const std::string out = (dir / "out").string();
  auto workers_used = [&] { return json::parse(slurp(dir / "out" / "metrics.json"))["workers"].get<int>(); };

  ::unsetenv(kWorkersEnv);
  REQUIRE(cli({"plan", "--config", cfg, "--out", out, "--force"}).code == kExitOk);
  CHECK(workers_used() == 3);
  ::setenv(kWorkersEnv, "2", 1);
  REQUIRE(cli({"plan", "--config", cfg, "--out", out, "--force"}).code == kExitOk);
  CHECK(workers_used() == 2);
  REQUIRE(cli({"plan", "--config", cfg, "--out", out, "--force", "--workers", "1"}).code == kExitOk);
  CHECK(workers_used() == 1);
  ::unsetenv(kWorkersEnv);
  fs::remove_all(dir);
}

TEST_CASE("config errors exit 2 with structured issues") {
  const fs::path dir = scratch_dir("errors");
  write(dir / "typo.cfg", "stein.bandwith = median\n");
  const Run r = cli({"plan", "--config", (dir / "typo.cfg").string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitUsage);
  const json e = json::parse(r.err);
  CHECK(e["error"] == "config");
  REQUIRE(e["issues"].size() == 1);
  CHECK(e["issues"][0]["suggestion"] == "stein.bandwidth");

  write(dir / "csv.cfg", "method = sinkhorn\nreference.type = csv\nreference.csv = absent.csv\n");
  const Run c = cli({"plan", "--config", (dir / "csv.cfg").string(), "--out", (dir / "o").string()});
  CHECK(c.code == kExitUsage);
  CHECK(json::parse(c.err)["issues"][0]["message"] == "file not found: " + (dir / "absent.csv").string());

  CHECK(cli({"plan", "--config", (dir / "none.cfg").string()}).code == kExitUsage);
  CHECK(cli({"plan"}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("plan failure exits 1") {
  const fs::path dir = scratch_dir("fail");
  write(dir / "run.cfg", std::string("model = diff_drive\nhorizon = 20\ndt = 0.05\n"
                                     "optimizer.eta = 1000000\noptimizer.init_scale = 1000000\n"
                                     "optimizer.max_iterations = 50\noptimizer.metric_samples = 100\n"));
  const Run r = cli({"plan", "--config", (dir / "run.cfg").string(), "--out", (dir / "o").string()});
  if (r.code != kExitOk) {
    CHECK(r.code == kExitFailure);
    CHECK(json::parse(r.err)["error"] == "plan");
  }
  fs::remove_all(dir);
}

TEST_CASE("metric of the reference samples is zero") {
  const fs::path dir = scratch_dir("metric");
  std::ostringstream cloud, traj;
  traj << "t,x,y,ux,uy\n";
  traj << "0,5,5,0,0\n";  // s0 is not scored
  for (int i = 0; i < 30; ++i) {
    const double x = 0.1 + 0.8 * ((i * 7) % 30) / 30.0;
    const double y = 0.1 + 0.8 * ((i * 11) % 30) / 30.0;
    cloud << x << ',' << y << '\n';
    traj << (i + 1) * 0.1 << ',' << x << ',' << y << ",0,0\n";
  }
  write(dir / "cloud.csv", cloud.str());
  write(dir / "traj.csv", traj.str());
  write(dir / "run.cfg",
        "model = single_integrator_2d\nmethod = sinkhorn\nreference.type = csv\nreference.csv = cloud.csv\n");
  const std::vector<std::string> args = {"metric", "--config", (dir / "run.cfg").string(), "--trajectory",
                                         (dir / "traj.csv").string()};
  const Run a = cli(args);
  REQUIRE_MESSAGE(a.code == kExitOk, a.err);
  const double v = json::parse(a.out)["coverage"].get<double>();
  CHECK(std::abs(v) <= 1e-6);
  CHECK(cli(args).out == a.out);

  SUBCASE("empty trajectory") {
    write(dir / "traj.csv", "");
    const Run e = cli(args);
    CHECK(e.code == kExitUsage);
    CHECK(json::parse(e.err)["message"] == "trajectory CSV is empty");
  }
  SUBCASE("malformed row names the row") {
    write(dir / "traj.csv", "t,x,y,ux,uy\n0,0.1,0.2,0,0\n0.1,0.3,oops,0,0\n");
    const Run e = cli(args);
    CHECK(e.code == kExitUsage);
    CHECK(json::parse(e.err)["message"] == "malformed trajectory CSV row 3");
  }
  SUBCASE("wrong header") {
    write(dir / "traj.csv", "t,x,y,theta,v,omega\n0,0,0,0,0,0\n");
    CHECK(cli(args).code == kExitUsage);
  }
  fs::remove_all(dir);
}

TEST_CASE("trajectory csv round trip") {
  const DynamicsModel model = model_by_name("diff_drive");
  Trajectory traj;
  traj.dt = 0.1;
  traj.states = Points::Random(4, 3);
  traj.controls = Points::Random(3, 2);
  std::stringstream ss;
  write_trajectory_csv(ss, model, traj);
  const std::string text = ss.str();
  CHECK(text.rfind("t,x,y,theta,v,omega\n", 0) == 0);
  CHECK(text.substr(text.size() - 3) == ",,\n");
  const Points back = read_trajectory_states(ss, model);
  CHECK(back == traj.states);
}

TEST_CASE("bench subcommand") {
  const fs::path dir = scratch_dir("bench");
  write(dir / "run.cfg", R"(model = single_integrator_2d
optimizer.max_iterations = 3
optimizer.metric_samples = 100
bench.horizons = 50, 100
bench.repetitions = 2
bench.warmup = false
)");
  const Run r = cli({"bench", "--config", (dir / "run.cfg").string(), "--out", (dir / "o").string(), "--plot",
                     "--workers", "1"});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(json::parse(r.out)["records"] == 4);
  CHECK(json::parse(r.out)["failed"] == 0);
  std::ifstream csv(dir / "o" / "bench.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 5);
  CHECK(slurp(dir / "o" / "time_vs_horizon.svg").find("<svg") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("executable exit codes") {
  const fs::path dir = scratch_dir("exe");
  write(dir / "typo.cfg", "horizn = 3\n");
  const std::string cmd = std::string(COVFLOW_BIN) + " plan --config " + (dir / "typo.cfg").string() +
                          " --out " + (dir / "o").string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == kExitUsage);
  fs::remove_all(dir);
}
