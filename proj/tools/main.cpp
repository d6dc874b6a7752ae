#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spatchgan/spatchgan.hpp"

namespace fs = std::filesystem;
using namespace spatchgan;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string variant;
  std::string stats;
  long long seed = -1;
  long long iters = -1;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config file (key = value lines)");
  cmd->add_option("--seed", f.seed, "override the run seed");
  cmd->add_option("--iters", f.iters, "override total_iters");
  cmd->add_option("--variant", f.variant, "discriminator variant")
      ->check(CLI::IsMember({"spatchgan", "patchgan"}));
  cmd->add_option("--stats", f.stats, "comma list of statistics, e.g. mean,max,stddev");
  cmd->add_option("--set", f.sets, "extra key=value config overrides (repeatable)");
}

// Flags take precedence over the config file.
RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  if (f.seed >= 0) config_set(cfg, "seed", std::to_string(f.seed));
  if (f.iters >= 0) config_set(cfg, "total_iters", std::to_string(f.iters));
  if (!f.variant.empty()) config_set(cfg, "variant", f.variant);
  if (!f.stats.empty()) config_set(cfg, "stats", f.stats);
  for (const std::string& kv : f.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, received '" + kv + "'");
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    config_set(cfg, key, value);
  }
  return cfg;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const CommonFlags& f, const std::vector<std::string>& inputs) {
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "run.txt");
  os << "command: " << command << "\n";
  os << "config: " << (f.config_path.empty() ? "(defaults)" : f.config_path) << "\n";
  for (const std::string& in : inputs) os << "input: " << in << "\n";
  os << "out: " << out_dir << "\n";
  if (f.seed >= 0) os << "seed: " << f.seed << "\n";
}

Tensor4<float> load_model_input(const ImageFolder& folder, size_t i, int size) {
  Image8 img;
  if (!folder.load(i, img)) return Tensor4<float>();
  return augment_none(img, size);
}

/// Builds the full trainer and restores every block, so partial or oversized
/// checkpoints fail with the offending block's name.
std::unique_ptr<Trainer<float>> restore(const RunConfig& cfg, const std::string& ckpt) {
  auto t = std::make_unique<Trainer<float>>(cfg);
  t->load_bundle(load_checkpoint(ckpt));
  return t;
}

int cmd_train(const CommonFlags& f, const std::string& out_dir, const std::string& resume,
              const std::string& source_dir, const std::string& target_dir) {
  RunConfig cfg = resolve_config(f);
  if (!source_dir.empty()) cfg.source_dir = source_dir;
  if (!target_dir.empty()) cfg.target_dir = target_dir;
  cfg.validate();
  write_run_manifest(out_dir, "train", f, {cfg.source_dir, cfg.target_dir});

  const uint64_t log_int = std::max<uint64_t>(1, cfg.eff_interval(cfg.log_interval));
  auto progress = [&](const StepReport<float>& rep) {
    if (rep.iteration % log_int == 0 || rep.iteration + 1 == cfg.eff_total_iters())
      std::printf("iter %8llu  lr %.3g  d_adv %.4f  g_adv %.4f  cyc %.4f  id %.4f\n",
                  static_cast<unsigned long long>(rep.iteration), static_cast<double>(rep.lr),
                  static_cast<double>(rep.losses.d_adv), static_cast<double>(rep.losses.g_adv),
                  static_cast<double>(rep.losses.cyc), static_cast<double>(rep.losses.id));
  };
  run_training<float>(cfg, out_dir, resume, progress);
  std::printf("done: %s\n", (fs::path(out_dir) / "ckpt-final.spgk").string().c_str());
  return 0;
}

int cmd_translate(const CommonFlags& f, const std::string& ckpt, const std::string& in_dir,
                  const std::string& out_dir, bool low_res_cycle) {
  RunConfig cfg = resolve_config(f);
  auto trainer = restore(cfg, ckpt);
  ImageFolder folder(in_dir);
  write_run_manifest(out_dir, "translate", f, {in_dir});
  if (low_res_cycle) fs::create_directories(fs::path(out_dir) / "cycle");

  int written = 0;
  for (size_t i = 0; i < folder.size(); ++i) {
    Tensor4<float> x = load_model_input(folder, i, cfg.image_size);
    if (x.size() == 0) continue;
    const fs::path rel = fs::path(folder.path(i)).lexically_relative(folder.dir());
    Tensor4<float> fake = trainer->gen().translate(x);
    const fs::path dst = fs::path(out_dir) / rel;
    fs::create_directories(dst.parent_path());
    write_image(dst.string(), tensor_to_image(fake));
    if (low_res_cycle) {
      Tensor4<float> rec = trainer->backward_gen().reconstruct_low(down8_forward(fake));
      write_image((fs::path(out_dir) / "cycle" / rel).string(), tensor_to_image(rec));
    }
    ++written;
  }
  if (written == 0) throw DataError("no decodable images in " + in_dir);
  std::printf("translated %d images to %s\n", written, out_dir.c_str());
  return 0;
}

int cmd_inspect_disc(const CommonFlags& f, const std::string& ckpt, const std::string& in_dir,
                     const std::string& out_csv, const std::string& plot_path) {
  RunConfig cfg = resolve_config(f);
  auto trainer = restore(cfg, ckpt);
  ImageFolder folder(in_dir);

  const std::vector<HeadLabel> labels = trainer->disc().head_labels();
  std::vector<std::string> names;
  std::vector<std::vector<float>> rows;
  for (size_t i = 0; i < folder.size(); ++i) {
    Tensor4<float> x = load_model_input(folder, i, cfg.image_size);
    if (x.size() == 0) continue;
    DisOutputGrid<float> grid = discriminate(trainer->disc(), x);
    names.push_back(fs::path(folder.path(i)).lexically_relative(folder.dir()).string());
    std::vector<float> row(labels.size());
    for (size_t h = 0; h < labels.size(); ++h) row[h] = grid.at(0, static_cast<int>(h));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no decodable images in " + in_dir);

  std::vector<double> means(labels.size(), 0.0);
  for (const auto& row : rows)
    for (size_t h = 0; h < row.size(); ++h) means[h] += row[h];
  for (double& m : means) m /= static_cast<double>(rows.size());

  fs::create_directories(fs::path(out_csv).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_csv).parent_path());
  std::ofstream os(out_csv);
  if (!os) throw DataError("cannot open " + out_csv);
  os << "file";
  for (const auto& l : labels) os << "," << l.str();
  os << "\n";
  char buf[64];
  for (size_t i = 0; i < rows.size(); ++i) {
    os << names[i];
    for (float v : rows[i]) {
      std::snprintf(buf, sizeof(buf), ",%.8g", static_cast<double>(v));
      os << buf;
    }
    os << "\n";
  }
  os << "mean";
  for (double m : means) {
    std::snprintf(buf, sizeof(buf), ",%.8g", m);
    os << buf;
  }
  os << "\n";

  std::printf("%-24s %s\n", "head", "mean");
  for (size_t h = 0; h < labels.size(); ++h)
    std::printf("%-24s %.6f\n", labels[h].str().c_str(), means[h]);
  if (!plot_path.empty()) {
    save_disc_plot(plot_path, labels, means);
    std::printf("plot: %s\n", plot_path.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& generated, const std::string& reference,
                 const std::string& tag, int kid_block, const std::string& out_json) {
  auto model = make_embedder(tag);
  MetricReport r = evaluate(generated, reference, *model, kid_block);
  std::printf("%s", report_to_table(r).c_str());
  if (!out_json.empty()) {
    if (!fs::path(out_json).parent_path().empty())
      fs::create_directories(fs::path(out_json).parent_path());
    std::ofstream os(out_json);
    if (!os) throw DataError("cannot open " + out_json);
    os << report_to_json(r) << "\n";
    std::printf("report: %s\n", out_json.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical-feature GAN: training, translation, and evaluation"};
  app.require_subcommand(1);

  CommonFlags tf;
  std::string t_out, t_resume, t_source, t_target;
  CLI::App* train = app.add_subcommand("train", "run unpaired translation training");
  add_common(train, tf);
  train->add_option("--out", t_out, "output directory")->required();
  train->add_option("--resume", t_resume, "checkpoint to resume from");
  train->add_option("--source-dir", t_source, "override source image directory");
  train->add_option("--target-dir", t_target, "override target image directory");

  CommonFlags xf;
  std::string x_ckpt, x_in, x_out;
  bool x_cycle = false;
  CLI::App* translate = app.add_subcommand("translate", "translate a directory of images");
  add_common(translate, xf);
  translate->add_option("--checkpoint", x_ckpt, "trained checkpoint")->required();
  translate->add_option("--in", x_in, "input image directory")->required();
  translate->add_option("--out", x_out, "output directory")->required();
  translate->add_flag("--low-res-cycle", x_cycle,
                      "also write the low-resolution cycle reconstructions");

  CommonFlags df;
  std::string d_ckpt, d_in, d_csv, d_plot;
  CLI::App* inspect = app.add_subcommand("inspect-disc", "per-head discriminator responses");
  add_common(inspect, df);
  inspect->add_option("--checkpoint", d_ckpt, "trained checkpoint")->required();
  inspect->add_option("--in", d_in, "input image directory")->required();
  inspect->add_option("--out", d_csv, "output csv path")->required();
  inspect->add_option("--plot", d_plot, "optional bar-plot png path");

  std::string e_gen, e_ref, e_tag = "toy-conv64", e_json;
  int e_block = 100;
  CLI::App* eval = app.add_subcommand("evaluate", "FID/KID between two image directories");
  eval->add_option("--generated", e_gen, "generated image directory")->required();
  eval->add_option("--reference", e_ref, "reference image directory")->required();
  eval->add_option("--embedder", e_tag, "embedding model tag");
  eval->add_option("--kid-block", e_block, "KID block size");
  eval->add_option("--out", e_json, "also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(tf, t_out, t_resume, t_source, t_target);
    if (*translate) return cmd_translate(xf, x_ckpt, x_in, x_out, x_cycle);
    if (*inspect) return cmd_inspect_disc(df, d_ckpt, d_in, d_csv, d_plot);
    if (*eval) return cmd_evaluate(e_gen, e_ref, e_tag, e_block, e_json);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}
