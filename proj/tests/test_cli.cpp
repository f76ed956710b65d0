#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gaitreid/image.hpp"
#include "gaitreid/plot.hpp"

using namespace gaitreid;
namespace fs = std::filesystem;

#ifndef GAITREID_CLI_PATH
#define GAITREID_CLI_PATH "gaitreid"
#endif

namespace {

std::string temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("gaitreid_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GAITREID_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("synth subcommand writes the documented layout") {
  const std::string dir = temp_dir("synth");
  const int rc = run_cli("synth --out " + dir +
                         "/data --ids 3 --outfits 2 --cams 1 --tracks 1 --frames 2 "
                         "--height 64 --width 32");
  CHECK(rc == 0);
  CHECK(fs::exists(fs::path(dir) / "data" / "train" / "rgb"));
  CHECK(fs::exists(fs::path(dir) / "data" / "train" / "masks"));
  CHECK(fs::exists(fs::path(dir) / "data" / "query" / "rgb"));
  CHECK(fs::exists(fs::path(dir) / "data" / "gallery" / "rgb"));
  CHECK(fs::exists(fs::path(dir) / "data" / "manifest.json"));

  // second run without --overwrite must fail and must not clobber
  CHECK(run_cli("synth --out " + dir + "/data --ids 3 --height 64 --width 32") != 0);
  fs::remove_all(dir);
}

TEST_CASE("synth rejects zero identity counts") {
  const std::string dir = temp_dir("synth0");
  CHECK(run_cli("synth --out " + dir + "/x --ids 0") != 0);
  fs::remove_all(dir);
}

TEST_CASE("unknown subcommand and missing checkpoints fail nonzero") {
  CHECK(run_cli("frobnicate") != 0);
  const std::string dir = temp_dir("missing");
  ImageU8 mask(1, 64, 32);
  for (int y = 20; y < 50; ++y)
    for (int x = 10; x < 20; ++x) mask.at(y, x, 0) = 255;
  write_png(dir + "/mask.png", mask);
  CHECK(run_cli("predict-gait --out " + dir + "/out --input " + dir +
                "/mask.png --ckpt " + dir + "/no_ckpt") != 0);
  CHECK_FALSE(fs::exists(fs::path(dir) / "out" / "gait_strip.png"));  // no partial file
  fs::remove_all(dir);
}

TEST_CASE("help is available for every subcommand") {
  for (const char* sub : {"synth", "pretrain-gaitnet", "train-gsp", "train", "eval",
                          "predict-gait", "plot"}) {
    CHECK(run_cli(std::string(sub) + " --help") == 0);
  }
}

TEST_CASE("plot renders CMC and loss curves from csv inputs") {
  const std::string dir = temp_dir("plot");
  {
    std::ofstream cmc(dir + "/cmc.csv");
    cmc << "rank,cmc\n1,0.5\n2,0.75\n3,1.0\nmap,0.6\n";
    std::ofstream cmc2(dir + "/cmc2.csv");
    cmc2 << "rank,cmc\n1,0.25\n2,0.5\n3,0.75\n";
    std::ofstream loss(dir + "/loss.csv");
    loss << "epoch,step,l_position,l_pred,l_tri_sep,l_cla,l_tri_hm,l_mmd,l_recon,total,"
            "lr_gait,lr_reid\n";
    for (int i = 0; i < 10; ++i)
      loss << "0," << i << ",0,0,0,1,1,0,0," << (2.0 - 0.1 * i) << ",0,0.001\n";
  }
  const int rc = run_cli("plot --out " + dir + "/figs --cmc " + dir + "/cmc.csv --cmc " +
                         dir + "/cmc2.csv --loss " + dir + "/loss.csv");
  CHECK(rc == 0);
  CHECK(fs::exists(fs::path(dir) / "figs" / "cmc_plot.png"));
  CHECK(fs::exists(fs::path(dir) / "figs" / "cmc_plot.png.csv"));
  CHECK(fs::exists(fs::path(dir) / "figs" / "loss_plot.png"));
  // single-point series must not crash
  {
    std::ofstream one(dir + "/one.csv");
    one << "rank,cmc\n1,1.0\n";
  }
  CHECK(run_cli("plot --out " + dir + "/figs2 --cmc " + dir + "/one.csv") == 0);
  // empty input list is an error
  CHECK(run_cli("plot --out " + dir + "/figs3") != 0);
  fs::remove_all(dir);
}

TEST_CASE("plot rejects malformed reports") {
  const std::string dir = temp_dir("plotbad");
  {
    std::ofstream bad(dir + "/bad.csv");
    bad << "rank,cmc\nnot,numbers_at_all\n";
  }
  CHECK(run_cli("plot --out " + dir + "/figs --cmc " + dir + "/bad.csv") != 0);
  fs::remove_all(dir);
}
