#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gaitreid/config.hpp"
#include "gaitreid/dataset.hpp"
#include "gaitreid/eval.hpp"
#include "gaitreid/models.hpp"
#include "gaitreid/plot.hpp"
#include "gaitreid/preprocess.hpp"
#include "gaitreid/sha1.hpp"
#include "gaitreid/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gaitreid;

namespace {

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for hashing");
  Sha1 h;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex_digest();
}

// Directory inputs are fingerprinted by their sorted (name, size) listing.
std::string hash_input(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<std::string> entries;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (!e.is_regular_file()) continue;
      entries.push_back(fs::relative(e.path(), path).string() + ":" +
                        std::to_string(e.file_size()));
    }
    std::sort(entries.begin(), entries.end());
    Sha1 h;
    for (const auto& e : entries) h.update(e + "\n");
    return h.hex_digest();
  }
  return hash_file(path);
}

struct RunContext {
  Config cfg;
  std::string out_dir;
  std::vector<std::string> argv;
  std::map<std::string, std::string> input_hashes;

  void write_manifest(const std::string& command) const {
    fs::create_directories(out_dir);
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["seed"] = cfg.seed;
    j["config"] = json::parse(cfg.to_json_string());
    j["config_fingerprint"] = cfg.fingerprint();
    j["input_hashes"] = input_hashes;
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    out << j.dump(2) << "\n";
  }
};

Config resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
  Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
  for (const auto& kv : sets) cfg.apply_override(kv);
  cfg.validate();
  return cfg;
}

// Loads phase-2 gait checkpoints as a variant needs them.
void load_gait_stream(ModelSet& models, const Config& cfg, Variant variant,
                      const std::string& gait_dir, bool allow_mismatch) {
  const bool uses_gsp = variant == Variant::Full || variant == Variant::GspConcat;
  const bool uses_gaitnet = uses_gsp || variant == Variant::GsConcat;
  if (!uses_gaitnet) return;
  if (gait_dir.empty())
    throw std::runtime_error("variant '" + to_string(variant) +
                             "' needs --gait <dir> with phase-2 checkpoints");
  if (uses_gsp) models.load_gsp(cfg, (fs::path(gait_dir) / "gsp").string(), allow_mismatch);
  models.load_gaitnet(cfg, (fs::path(gait_dir) / "gaitnet").string(), allow_mismatch);
}

int cmd_synth(const SynthParams& params, const std::string& out, bool overwrite,
              RunContext& ctx) {
  DatasetBundle data = generate_synthetic_dataset(params);
  write_dataset(data, out, overwrite);
  ctx.write_manifest("synth");
  std::cout << "wrote " << data.total_samples() << " samples under " << out << "\n";
  return 0;
}

int cmd_pretrain_gaitnet(RunContext& ctx, const std::string& data_dir) {
  DatasetIndex train = ingest_directory((fs::path(data_dir) / "train").string());
  Rng rng(derive_seed(ctx.cfg.seed, "init/gaitnet"));
  auto net = ModelSet::make_gaitnet(ctx.cfg, rng);
  LossLog log;
  run_phase1(train, ctx.cfg, *net, &log, ctx.out_dir);
  log.write_csv((fs::path(ctx.out_dir) / "phase1_loss.csv").string());
  ctx.write_manifest("pretrain-gaitnet");
  std::cout << "phase 1 done; checkpoint in " << ctx.out_dir << "/gaitnet\n";
  return 0;
}

int cmd_train_gsp(RunContext& ctx, const std::string& data_dir, const std::string& gaitnet_dir,
                  bool allow_mismatch) {
  DatasetIndex train = ingest_directory((fs::path(data_dir) / "train").string());
  ModelSet models;
  models.load_gaitnet(ctx.cfg, gaitnet_dir, allow_mismatch);
  Rng rng(derive_seed(ctx.cfg.seed, "init/gsp"));
  auto gsp = ModelSet::make_gsp(ctx.cfg, rng);
  LossLog log_a, log_b;
  run_phase2(train, ctx.cfg, *gsp, *models.gaitnet, &log_a, &log_b, ctx.out_dir);
  log_a.write_csv((fs::path(ctx.out_dir) / "phase2a_loss.csv").string());
  log_b.write_csv((fs::path(ctx.out_dir) / "phase2b_loss.csv").string());
  ctx.write_manifest("train-gsp");
  std::cout << "phase 2 done; checkpoints in " << ctx.out_dir << "\n";
  return 0;
}

int cmd_train(RunContext& ctx, const std::string& data_dir, const std::string& gait_dir,
              bool allow_mismatch) {
  const Variant variant = parse_variant(ctx.cfg.variant);
  DatasetIndex train = ingest_directory((fs::path(data_dir) / "train").string());
  ModelSet models;
  load_gait_stream(models, ctx.cfg, variant, gait_dir, allow_mismatch);
  const int num_classes = static_cast<int>(train.identity_list().size());
  Rng reid_rng(derive_seed(ctx.cfg.seed, "init/reid"));
  models.reid = ModelSet::make_reid(ctx.cfg, num_classes, reid_rng);
  if (variant == Variant::Full) {
    Rng sc_rng(derive_seed(ctx.cfg.seed, "init/sc"));
    models.sc = ModelSet::make_sc(ctx.cfg, sc_rng);
  }
  LossLog log;
  Phase3Nets nets{models.gsp.get(), models.gaitnet.get(), models.reid.get(), models.sc.get()};
  run_phase3(train, ctx.cfg, variant, nets, &log, ctx.out_dir);
  log.write_csv((fs::path(ctx.out_dir) / "phase3_loss.csv").string());
  ctx.write_manifest("train");
  std::cout << "phase 3 (" << to_string(variant) << ") done; checkpoints in " << ctx.out_dir
            << "\n";
  return 0;
}

int cmd_eval(RunContext& ctx, const std::string& data_dir, const std::string& ckpt_dir,
             bool allow_mismatch) {
  const Protocol protocol = parse_protocol(ctx.cfg.protocol);
  const InferenceMode mode = parse_inference_mode(ctx.cfg.inference_mode);
  DatasetIndex query = ingest_directory((fs::path(data_dir) / "query").string());
  DatasetIndex gallery = ingest_directory((fs::path(data_dir) / "gallery").string());

  ModelSet models;
  const bool needs_reid = mode != InferenceMode::GaitOnly;
  const bool needs_gait = mode == InferenceMode::GaitOnly || mode == InferenceMode::EmbeddedSum ||
                          mode == InferenceMode::ReconSum || mode == InferenceMode::ConcatRG;
  const bool needs_sc = mode == InferenceMode::EmbeddedSum || mode == InferenceMode::ReconSum ||
                        mode == InferenceMode::ReconR;
  if (needs_reid) models.load_reid(ctx.cfg, (fs::path(ckpt_dir) / "reid").string(), allow_mismatch);
  if (needs_gait) {
    // checkpoints from the no-prediction concat variant carry no gsp; the
    // evaluator then duplicates the input silhouette instead
    if (fs::exists(fs::path(ckpt_dir) / "gsp" / "manifest.json"))
      models.load_gsp(ctx.cfg, (fs::path(ckpt_dir) / "gsp").string(), allow_mismatch);
    models.load_gaitnet(ctx.cfg, (fs::path(ckpt_dir) / "gaitnet").string(), allow_mismatch);
  }
  if (needs_sc) models.load_sc(ctx.cfg, (fs::path(ckpt_dir) / "sc").string(), allow_mismatch);

  EvalReport report = evaluate(query, gallery, models, protocol, mode, ctx.cfg);
  report.write(ctx.out_dir);
  ctx.write_manifest("eval");
  std::cout << report.text();
  return 0;
}

int cmd_predict_gait(RunContext& ctx, const std::string& input, const std::string& ckpt_dir,
                     const std::string& out_png, bool allow_mismatch) {
  ModelSet models;
  models.load_gsp(ctx.cfg, ckpt_dir, allow_mismatch);
  ImageU8 img = read_png(input);
  Tensor mask2d;
  if (img.channels == 1) {
    mask2d = Tensor({img.h, img.w});
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) mask2d.at2(y, x) = img.at(y, x, 0) / 255.0;
  } else {
    // crude foreground rule for rgb inputs: any lit pixel counts
    mask2d = Tensor({img.h, img.w});
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        const double lum = (0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                            0.114 * img.at(y, x, 2)) /
                           255.0;
        mask2d.at2(y, x) = lum > 0.1 ? 1.0 : 0.0;
      }
  }
  Tensor sil = preprocess_mask(mask2d);
  Tensor batch({1, 1, kGaitFrame, kGaitFrame});
  std::copy(sil.data(), sil.data() + sil.numel(), batch.data());
  GspNet::Out out = models.gsp->forward(batch, false);

  const int n = out.pred.dim(1);
  Tensor strip({kGaitFrame, kGaitFrame * n});
  for (int f = 0; f < n; ++f)
    for (int y = 0; y < kGaitFrame; ++y)
      for (int x = 0; x < kGaitFrame; ++x)
        strip.at2(y, f * kGaitFrame + x) = out.pred[(static_cast<long>(f) * kGaitFrame + y) * kGaitFrame + x];
  fs::create_directories(fs::path(out_png).parent_path().empty()
                             ? "."
                             : fs::path(out_png).parent_path().string());
  write_png(out_png, to_image(strip));
  ctx.write_manifest("predict-gait");
  std::cout << "predicted position: " << out.pos_scalar[0] << "\n";
  std::cout << "wrote " << out_png << " (" << kGaitFrame * n << "x" << kGaitFrame << ")\n";
  return 0;
}

std::vector<std::pair<double, double>> read_xy_csv(const std::string& path, int xcol, int ycol) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::pair<double, double>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= std::max(xcol, ycol)) continue;
    try {
      out.emplace_back(std::stod(cells[static_cast<std::size_t>(xcol)]),
                       std::stod(cells[static_cast<std::size_t>(ycol)]));
    } catch (...) {
      continue;  // non-numeric rows (e.g. the trailing map line) are skipped
    }
  }
  if (out.empty()) throw std::runtime_error("no data rows in '" + path + "'");
  return out;
}

int cmd_plot(RunContext& ctx, const std::vector<std::string>& cmc_files,
             const std::vector<std::string>& loss_files) {
  if (cmc_files.empty() && loss_files.empty())
    throw std::runtime_error("plot: pass at least one --cmc or --loss file");
  fs::create_directories(ctx.out_dir);
  if (!cmc_files.empty()) {
    std::vector<Series> series;
    for (const auto& f : cmc_files) {
      Series s;
      s.label = fs::path(f).parent_path().filename().string();
      if (s.label.empty()) s.label = fs::path(f).stem().string();
      for (auto [x, y] : read_xy_csv(f, 0, 1)) {
        s.x.push_back(x);
        s.y.push_back(y);
      }
      series.push_back(std::move(s));
    }
    write_line_plot(series, "CMC", "rank", "rate",
                    (fs::path(ctx.out_dir) / "cmc_plot.png").string());
  }
  if (!loss_files.empty()) {
    std::vector<Series> series;
    for (const auto& f : loss_files) {
      // columns: epoch,step,7 components,total,lrs -> plot the total (col 9)
      Series s;
      s.label = fs::path(f).stem().string();
      const auto rows = read_xy_csv(f, 1, 9);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        s.x.push_back(static_cast<double>(i));
        s.y.push_back(rows[i].second);
      }
      series.push_back(std::move(s));
    }
    write_line_plot(series, "training loss", "step", "loss",
                    (fs::path(ctx.out_dir) / "loss_plot.png").string());
  }
  ctx.write_manifest("plot");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gait-regularized cloth-changing person re-identification"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, gait_dir, ckpt_dir, input_path, out_png;
  std::vector<std::string> sets, cmc_files, loss_files;
  bool overwrite = false, allow_mismatch = false;
  SynthParams synth_params;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config JSON file");
    cmd->add_option("--set", sets, "config override key=value (flag > file > default)");
    cmd->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic walking-figure dataset");
  add_common(synth);
  synth->add_option("--ids", synth_params.ids, "identity count");
  synth->add_option("--outfits", synth_params.outfits, "outfits per identity");
  synth->add_option("--cams", synth_params.cams, "camera count");
  synth->add_option("--tracks", synth_params.tracks, "tracks per (id,cam,outfit)");
  synth->add_option("--frames", synth_params.frames, "frames per track");
  synth->add_option("--height", synth_params.height, "rendered image height");
  synth->add_option("--width", synth_params.width, "rendered image width");
  synth->add_flag("--overwrite", overwrite, "replace a non-empty output directory");

  CLI::App* p1 = app.add_subcommand("pretrain-gaitnet", "phase 1: gait network pretraining");
  add_common(p1);
  p1->add_option("--data", data_dir, "dataset root (train/ split is used)")->required();

  CLI::App* p2 = app.add_subcommand("train-gsp", "phase 2: gait sequence prediction training");
  add_common(p2);
  p2->add_option("--data", data_dir, "dataset root")->required();
  p2->add_option("--gaitnet", ckpt_dir, "phase-1 gaitnet checkpoint directory")->required();
  p2->add_flag("--allow-fingerprint-mismatch", allow_mismatch,
               "load checkpoints written under a different config");

  CLI::App* p3 = app.add_subcommand("train", "phase 3: joint two-stream training");
  add_common(p3);
  p3->add_option("--data", data_dir, "dataset root")->required();
  p3->add_option("--gait", gait_dir, "phase-2 checkpoint directory (gsp/ + gaitnet/)");
  std::string variant_flag;
  p3->add_option("--variant", variant_flag,
                 "baseline|silhouette|gs-concat|gsp-concat|full (overrides config)");
  p3->add_flag("--allow-fingerprint-mismatch", allow_mismatch,
               "load checkpoints written under a different config");

  CLI::App* ev = app.add_subcommand("eval", "protocol-filtered retrieval evaluation");
  add_common(ev);
  ev->add_option("--data", data_dir, "dataset root (query/ + gallery/)")->required();
  ev->add_option("--ckpt", ckpt_dir, "checkpoint root directory")->required();
  std::string protocol_flag, mode_flag;
  ev->add_option("--protocol", protocol_flag, "standard|cloth-changing (overrides config)");
  ev->add_option("--mode", mode_flag, "inference mode (overrides config)");
  ev->add_flag("--allow-fingerprint-mismatch", allow_mismatch,
               "load checkpoints written under a different config");

  CLI::App* pg = app.add_subcommand("predict-gait", "predict a gait sequence from one mask");
  add_common(pg);
  pg->add_option("--input", input_path, "input mask (or rgb) PNG")->required();
  pg->add_option("--ckpt", ckpt_dir, "gsp checkpoint directory")->required();
  pg->add_option("--strip", out_png, "output strip path (default <out>/gait_strip.png)");
  pg->add_flag("--allow-fingerprint-mismatch", allow_mismatch,
               "load checkpoints written under a different config");

  CLI::App* pl = app.add_subcommand("plot", "render CMC and loss curves");
  add_common(pl);
  pl->add_option("--cmc", cmc_files, "cmc.csv report files");
  pl->add_option("--loss", loss_files, "loss-log CSV files");

  std::string seed_flag;
  for (CLI::App* cmd : {synth, p1, p2, p3, ev, pg, pl})
    cmd->add_option("--seed", seed_flag, "root seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunContext ctx;
    ctx.out_dir = out_dir;
    for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);
    if (!seed_flag.empty()) sets.push_back("seed=" + seed_flag);
    if (!variant_flag.empty()) sets.push_back("variant=" + variant_flag);
    if (!protocol_flag.empty()) sets.push_back("protocol=" + protocol_flag);
    if (!mode_flag.empty()) sets.push_back("inference_mode=" + mode_flag);
    ctx.cfg = resolve_config(config_path, sets);
    if (!config_path.empty()) ctx.input_hashes["config"] = hash_input(config_path);
    if (!data_dir.empty()) ctx.input_hashes["data"] = hash_input(data_dir);
    if (!gait_dir.empty()) ctx.input_hashes["gait"] = hash_input(gait_dir);
    if (!ckpt_dir.empty()) ctx.input_hashes["ckpt"] = hash_input(ckpt_dir);
    if (!input_path.empty()) ctx.input_hashes["input"] = hash_input(input_path);

    if (synth->parsed()) {
      synth_params.seed = ctx.cfg.seed;
      if (synth_params.ids < 1) throw std::runtime_error("ids must be >= 1");
      if (synth_params.outfits < 1) throw std::runtime_error("outfits must be >= 1");
      if (synth_params.cams < 1) throw std::runtime_error("cams must be >= 1");
      if (synth_params.tracks < 1) throw std::runtime_error("tracks must be >= 1");
      if (synth_params.frames < 1) throw std::runtime_error("frames must be >= 1");
      return cmd_synth(synth_params, out_dir, overwrite, ctx);
    }
    if (p1->parsed()) return cmd_pretrain_gaitnet(ctx, data_dir);
    if (p2->parsed()) return cmd_train_gsp(ctx, data_dir, ckpt_dir, allow_mismatch);
    if (p3->parsed()) return cmd_train(ctx, data_dir, gait_dir, allow_mismatch);
    if (ev->parsed()) return cmd_eval(ctx, data_dir, ckpt_dir, allow_mismatch);
    if (pg->parsed()) {
      if (out_png.empty()) out_png = (fs::path(out_dir) / "gait_strip.png").string();
      return cmd_predict_gait(ctx, input_path, ckpt_dir, out_png, allow_mismatch);
    }
    if (pl->parsed()) return cmd_plot(ctx, cmc_files, loss_files);
    throw std::runtime_error("no subcommand");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
