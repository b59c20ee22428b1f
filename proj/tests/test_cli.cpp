#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "teleop/csv.hpp"
#include "teleop/se3.hpp"

namespace fs = std::filesystem;
using namespace teleop;

namespace {

const std::string kCli = TELEOP_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("teleop_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  [[nodiscard]] std::string sub(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("gen-data is byte-identical per seed") {
  TempDir tmp;
  CHECK(run("gen-data --wavelets 3 --seed 7 --out " + tmp.sub("a")) == 0);
  CHECK(run("gen-data --wavelets 3 --seed 7 --out " + tmp.sub("b")) == 0);
  CHECK(slurp(tmp.sub("a") + "/trace.csv") == slurp(tmp.sub("b") + "/trace.csv"));
  CHECK(slurp(tmp.sub("a") + "/intent_truth.csv") == slurp(tmp.sub("b") + "/intent_truth.csv"));

  CHECK(run("gen-data --wavelets 3 --seed 8 --out " + tmp.sub("c")) == 0);
  CHECK(slurp(tmp.sub("a") + "/trace.csv") != slurp(tmp.sub("c") + "/trace.csv"));

  CHECK(first_line(tmp.sub("a") + "/trace.csv").substr(0, 13) == "t_s,jm01,jm02");
  CHECK(first_line(tmp.sub("a") + "/intent_truth.csv") ==
        "t_s,dthx_rad,dthy_rad,dthz_rad,dx_m,dy_m,dz_m");
}

TEST_CASE("intent and pca emit the documented formats") {
  TempDir tmp;
  REQUIRE(run("gen-data --wavelets 2 --seed 5 --out " + tmp.sub("data")) == 0);
  CHECK(run("intent --trace " + tmp.sub("data") + "/trace.csv --out " + tmp.sub("intent")) == 0);
  CHECK(first_line(tmp.sub("intent") + "/intent.csv") ==
        "t_s,dthx_rad,dthy_rad,dthz_rad,dx_m,dy_m,dz_m");
  CHECK(first_line(tmp.sub("intent") + "/goal_poses.csv") == "t_s,qw,qx,qy,qz,px,py,pz");

  CHECK(run("pca --trace " + tmp.sub("data") + "/trace.csv --out " + tmp.sub("pca")) == 0);
  CHECK(first_line(tmp.sub("pca") + "/pca_report.csv") ==
        "component,eigenvalue,explained_ratio,cumulative_ratio");
  const CsvTable report = read_csv(tmp.sub("pca") + "/pca_report.csv");
  CHECK(report.data.rows() == 11);
  // Ratios are a distribution.
  CHECK(report.data.col(2).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("simulate reaches the goal and writes the trajectory log") {
  TempDir tmp;
  REQUIRE(run("simulate --goal-rot-z-deg 10 --out " + tmp.sub("sim")) == 0);

  const std::string traj = tmp.sub("sim") + "/trajectory.csv";
  std::string expected_header = "t_s";
  for (int j = 1; j <= 16; ++j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",q%02d", j);
    expected_header += buf;
  }
  for (int j = 1; j <= 16; ++j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",tau%02d", j);
    expected_header += buf;
  }
  expected_header += ",qw,qx,qy,qz,px,py,pz";
  CHECK(first_line(traj) == expected_header);

  // Final row orientation error against the 10 degree goal.
  const CsvTable table = read_csv(traj);
  REQUIRE(table.data.rows() > 0);
  const Eigen::Index last = table.data.rows() - 1;
  const Eigen::Quaterniond q(table.data(last, table.column("qw")),
                             table.data(last, table.column("qx")),
                             table.data(last, table.column("qy")),
                             table.data(last, table.column("qz")));
  const Mat3 goal = rodrigues_exp<double>(Vec3(0, 0, 10.0 * M_PI / 180.0));
  const double err = rotation_log<double>(goal * q.toRotationMatrix().transpose()).norm();
  CHECK(err < 0.5 * M_PI / 180.0);
}

TEST_CASE("train then predict on held-out data reports the expected lead") {
  TempDir tmp;
  REQUIRE(run("gen-data --wavelets 10 --seed 21 --out " + tmp.sub("data")) == 0);
  REQUIRE(run("train --intent " + tmp.sub("data") + "/intent_truth.csv --axes z --epochs 80" +
              " --seed 1 --out " + tmp.sub("models")) == 0);
  CHECK(fs::exists(tmp.sub("models") + "/model_z.json"));
  CHECK(first_line(tmp.sub("models") + "/loss_history_z.csv") ==
        "epoch,train_mse_deg2,val_mse_deg2");

  REQUIRE(run("gen-data --wavelets 4 --seed 55 --out " + tmp.sub("heldout")) == 0);
  REQUIRE(run("predict --intent " + tmp.sub("heldout") + "/intent_truth.csv --models " +
              tmp.sub("models") + " --out " + tmp.sub("pred")) == 0);
  CHECK(fs::exists(tmp.sub("pred") + "/prediction.csv"));
  CHECK(first_line(tmp.sub("pred") + "/prediction.csv") == "t_emit_s,t_target_s,pred_dthz_deg");

  std::ifstream lag_in(tmp.sub("pred") + "/lag_report.json");
  REQUIRE(lag_in.good());
  std::stringstream ss;
  ss << lag_in.rdbuf();
  const std::string lag_json = ss.str();
  CHECK(lag_json.find("\"z\"") != std::string::npos);
  // Best-alignment lag of -m (10 samples), within one sample.
  const auto pos = lag_json.find("\"lag_samples\":");
  REQUIRE(pos != std::string::npos);
  const int lag = std::stoi(lag_json.substr(pos + 14));
  CHECK(lag >= -11);
  CHECK(lag <= -9);
}

TEST_CASE("exit codes distinguish usage, validation and numerical failures") {
  TempDir tmp;
  CHECK(run("no-such-subcommand") == 1);
  CHECK(run("intent --out " + tmp.sub("x")) == 1);  // missing required --trace
  CHECK(run("intent --trace /nonexistent/trace.csv --out " + tmp.sub("x")) == 2);
  CHECK(run("train --intent /nonexistent/intent.csv --out " + tmp.sub("x")) == 2);

  // Non-convergence: two outer steps cannot reach a 10 degree goal.
  std::ofstream cfg(tmp.sub("tight.json"));
  cfg << R"({"controller": {"max_steps": 2}})";
  cfg.close();
  CHECK(run("simulate --goal-rot-z-deg 10 --config " + tmp.sub("tight.json") + " --out " +
            tmp.sub("sim")) == 3);
  CHECK(fs::exists(tmp.sub("sim") + "/diagnostics.txt"));
}

TEST_CASE("config file sets parameters and flags override") {
  TempDir tmp;
  std::ofstream cfg(tmp.sub("gen.json"));
  cfg << R"({"gen": {"wavelets": 2, "amplitude_deg": 5.0}})";
  cfg.close();
  REQUIRE(run("gen-data --config " + tmp.sub("gen.json") + " --seed 3 --out " + tmp.sub("a")) == 0);
  REQUIRE(run("gen-data --config " + tmp.sub("gen.json") + " --wavelets 4 --seed 3 --out " +
              tmp.sub("b")) == 0);
  // More wavelets means a longer trace: the flag overrode the config.
  const CsvTable a = read_csv(tmp.sub("a") + "/trace.csv");
  const CsvTable b = read_csv(tmp.sub("b") + "/trace.csv");
  CHECK(b.data.rows() > a.data.rows());
}
