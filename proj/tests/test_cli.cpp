#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "ces/config.hpp"
#include "ces/io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ces_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  // Runs the binary with --out set to <dir>/out; returns the exit status.
  int run(const std::string& args) const {
    const std::string cmd = std::string(CES_BINARY) + " --out " + (dir_ / "out").string() + " " +
                            args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path file(const std::string& name, const std::string& content) const {
    ces::write_text_file(dir_ / name, content);
    return dir_ / name;
  }

  ces::Json output(const std::string& name) const {
    return ces::Json::parse(ces::read_text_file(dir_ / "out" / name));
  }

  std::string stderr_text() const { return ces::read_text_file(dir_ / "stderr.txt"); }

  fs::path dir_;
};

const char* kSinglet = R"({"dim":4,"re":[0,0,0,0, 0,0.5,-0.5,0, 0,-0.5,0.5,0, 0,0,0,0],
                           "im":[0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0]})";

}  // namespace

TEST_F(Cli, RatesTableAndManifest) {
  ASSERT_EQ(run("rates"), 0) << stderr_text();
  const ces::Json r = output("rates.json");
  EXPECT_NEAR(r["pairs_produced_per_s"].get<double>(), 369.8, 1e-9);
  const ces::Json m = output("manifest.json");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["mode"], "rates");
  EXPECT_EQ(m["outputs"].size(), 2u);
  EXPECT_NE(ces::read_text_file(dir_ / "stdout.txt").find("pairs detected / s"), std::string::npos);
}

TEST_F(Cli, MeasuresOfSinglet) {
  const fs::path state = file("singlet.json", kSinglet);
  ASSERT_EQ(run("measures " + state.string()), 0) << stderr_text();
  const ces::Json r = output("measures.json");
  EXPECT_NEAR(r["concurrence"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(r["log_negativity"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(r["chsh"]["s_max"].get<double>(), 2.0 * std::sqrt(2.0), 1e-12);
}

TEST_F(Cli, BellFromCountsFile) {
  const fs::path counts = file("counts.csv",
                               "alpha_deg,beta_deg,n_uu,n_ud,n_du,n_dd,n_discarded\n"
                               "0,22.5,10,40,40,10,0\n"
                               "0,-22.5,10,40,40,10,0\n"
                               "45,22.5,10,40,40,10,0\n"
                               "45,-22.5,40,10,10,40,0\n");
  ASSERT_EQ(run("bell " + counts.string()), 0) << stderr_text();
  EXPECT_NEAR(output("bell.json")["S"].get<double>(), 2.4, 1e-12);
}

TEST_F(Cli, SimulatedBellIsReproducible) {
  ASSERT_EQ(run("--trials 20000 --seed 7 bell"), 0) << stderr_text();
  const std::string first = ces::read_text_file(dir_ / "out" / "bell.json");
  const std::string counts = ces::read_text_file(dir_ / "out" / "counts.csv");
  fs::remove_all(dir_ / "out");
  ASSERT_EQ(run("--trials 20000 --seed 7 --threads 2 bell"), 0);
  EXPECT_EQ(ces::read_text_file(dir_ / "out" / "bell.json"), first);
  EXPECT_EQ(ces::read_text_file(dir_ / "out" / "counts.csv"), counts);
}

TEST_F(Cli, SimulateThenTomoFromFile) {
  ASSERT_EQ(run("--trials 20000 simulate"), 0) << stderr_text();
  const fs::path data = dir_ / "data.csv";
  fs::copy_file(dir_ / "out" / "tomography.csv", data);
  ASSERT_EQ(run("--method linear tomo " + data.string()), 0) << stderr_text();
  const ces::Json r = output("tomo.json");
  EXPECT_EQ(r["method"], "linear");
  EXPECT_GT(r["metrics"]["fidelity"].get<double>(), 0.8);
}

TEST_F(Cli, FitRecoversLifetime) {
  std::string csv = "dt_us,value,kind,sigma\n";
  for (double dt : {0.8, 2.0, 4.0, 6.0, 8.0, 10.0}) {
    csv += ces::format_double(dt) + "," +
           ces::format_double(0.45 * std::exp(-(dt / 5.7) * (dt / 5.7))) + ",N,\n";
  }
  ASSERT_EQ(run("fit " + file("series.csv", csv).string()), 0) << stderr_text();
  EXPECT_NEAR(output("fit.json")["tau_e_us"].get<double>(), 5.7, 1e-6);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  const fs::path bad = file("bad.json", R"({"noise":{"v0":1.5}})");
  EXPECT_EQ(run("--config " + bad.string() + " rates"), 2);
  EXPECT_NE(stderr_text().find("noise.v0"), std::string::npos) << stderr_text();
  EXPECT_EQ(run("--config " + (dir_ / "missing.json").string() + " rates"), 2);
  EXPECT_EQ(run("--method gradient tomo"), 2);
  EXPECT_EQ(run("--bootstrap 5 tomo"), 2);
  EXPECT_EQ(run("--no-such-flag rates"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, DataErrorsExitThree) {
  const fs::path csv = file("bad.csv", "alpha_deg,beta_deg,n_uu\n0,1,2\n");
  EXPECT_EQ(run("bell " + csv.string()), 3);
  EXPECT_EQ(output("manifest.json")["status"], "failed");
  const fs::path state = file("state.json", R"({"dim":4,"re":[1,0,0],"im":[]})");
  EXPECT_EQ(run("measures " + state.string()), 3);
  const fs::path nonpsd = file("nonpsd.json", R"({"dim":4,"re":[-0.1,0,0,0, 0,0.6,0,0, 0,0,0.25,0, 0,0,0,0.25],
                                                 "im":[0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0]})");
  EXPECT_EQ(run("measures " + nonpsd.string()), 3);
  EXPECT_EQ(run("fit " + (dir_ / "absent.csv").string()), 3);
}

TEST_F(Cli, NonConvergenceExitsFourWithOutputs) {
  const fs::path series = file("zero.csv", "dt_us,value,kind,sigma\n1,0,N,\n2,0,N,\n3,0,N,\n4,0,N,\n");
  EXPECT_EQ(run("fit " + series.string()), 4);
  EXPECT_EQ(output("manifest.json")["status"], "not_converged");
  EXPECT_FALSE(output("fit.json")["converged"].get<bool>());
}

TEST_F(Cli, PresetConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(CES_CONFIG_DIR)) {
    EXPECT_NO_THROW(ces::load_config(entry.path())) << entry.path();
    EXPECT_EQ(run("--config " + entry.path().string() + " rates"), 0) << entry.path();
  }
}
