#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "spatchgan/trainer.hpp"

using namespace spatchgan;
using testutil::TempDir;
using testutil::random_tensor;
using testutil::write_solid_png;

namespace {

RunConfig tiny_run() {
  RunConfig cfg;
  cfg.image_size = 16;
  cfg.num_scales = 1;
  cfg.disc_base_channels = 4;
  cfg.disc_channel_cap = 8;
  cfg.gen_base_channels = 4;
  cfg.gen_residual_blocks = 1;
  cfg.gen_downsample_steps = 1;
  cfg.batch_size = 2;
  cfg.total_iters = 4;
  cfg.warmup_iters = 1;
  cfg.lr_start = 1e-3;
  cfg.lr_end = 1e-4;
  cfg.log_interval = 1;
  cfg.checkpoint_interval = 2;
  cfg.seed = 5;
  return cfg;
}

template <typename T>
std::vector<std::vector<T>> snapshot(std::vector<ParamRef<T>>& params) {
  std::vector<std::vector<T>> out;
  for (auto& p : params) out.push_back(p.param->value);
  return out;
}

// All trainable values of the three networks, in collection order.
std::vector<std::vector<float>> all_values(Trainer<float>& t) {
  std::vector<ParamRef<float>> params;
  t.gen().collect_params(params);
  t.backward_gen().collect_params(params);
  t.disc().collect_params(params);
  return snapshot(params);
}

void fill_dataset(const std::string& dir, int count, uint8_t base) {
  for (int i = 0; i < count; ++i)
    write_solid_png((std::filesystem::path(dir) / ("d" + std::to_string(i) + ".png")).string(),
                    16, 16, static_cast<uint8_t>(base + 20 * i), 128, 40);
}

bool same_report(const StepReport<float>& a, const StepReport<float>& b) {
  return a.iteration == b.iteration && a.lr == b.lr && a.losses.d_adv == b.losses.d_adv &&
         a.losses.g_adv == b.losses.g_adv && a.losses.cyc == b.losses.cyc &&
         a.losses.id == b.losses.id && a.losses.g_total == b.losses.g_total &&
         a.d_real_mean == b.d_real_mean && a.d_fake_mean == b.d_fake_mean;
}

}  // namespace

TEST_CASE("trainer rejects sizes the low-resolution cycle cannot handle") {
  RunConfig cfg = tiny_run();
  cfg.image_size = 60;
  CHECK_THROWS_AS(Trainer<float>(cfg), ConfigError);
}

TEST_CASE("train_step rejects mismatched and misconfigured batch sizes") {
  Trainer<float> t(tiny_run());
  t.init_params();
  Tensor4<float> two = random_tensor(2, 16, 16, 3, 1);
  Tensor4<float> three = random_tensor(3, 16, 16, 3, 2);
  CHECK_THROWS_AS(t.train_step(two, three), ShapeError);
  CHECK_THROWS_AS(t.train_step(three, three), ShapeError);
}

TEST_CASE("a zero learning rate leaves every parameter untouched") {
  RunConfig cfg = tiny_run();
  cfg.lr_start = 0.0;
  cfg.lr_end = 0.0;
  Trainer<float> t(cfg);
  t.init_params();
  auto before = all_values(t);
  Tensor4<float> src = random_tensor(2, 16, 16, 3, 11);
  Tensor4<float> tgt = random_tensor(2, 16, 16, 3, 12);
  StepReport<float> rep = t.train_step(src, tgt);
  CHECK(rep.lr == 0.0f);
  CHECK(all_values(t) == before);
}

TEST_CASE("one real step moves generator and discriminator weights") {
  Trainer<float> t(tiny_run());
  t.init_params();
  auto before = all_values(t);
  Tensor4<float> src = random_tensor(2, 16, 16, 3, 21);
  Tensor4<float> tgt = random_tensor(2, 16, 16, 3, 22);
  StepReport<float> rep = t.train_step(src, tgt);
  CHECK(t.iteration() == 1);
  CHECK(rep.losses.g_total > 0.0f);
  CHECK(rep.d_real_mean.size() == t.disc().head_labels().size());
  auto after = all_values(t);
  size_t moved = 0;
  for (size_t i = 0; i < before.size(); ++i)
    if (before[i] != after[i]) ++moved;
  // every network contributes parameters; expect most of them to move
  CHECK(moved > before.size() / 2);
}

TEST_CASE("two trainers with one config replay identical steps") {
  Trainer<float> a(tiny_run());
  Trainer<float> b(tiny_run());
  a.init_params();
  b.init_params();
  for (int i = 0; i < 3; ++i) {
    Tensor4<float> src = random_tensor(2, 16, 16, 3, 100 + i);
    Tensor4<float> tgt = random_tensor(2, 16, 16, 3, 200 + i);
    StepReport<float> ra = a.train_step(src, tgt);
    StepReport<float> rb = b.train_step(src, tgt);
    CHECK(same_report(ra, rb));
  }
  CHECK(all_values(a) == all_values(b));
}

TEST_CASE("checkpoint round trip: same outputs, same continuation") {
  Trainer<float> t(tiny_run());
  t.init_params();
  for (int i = 0; i < 2; ++i)
    t.train_step(random_tensor(2, 16, 16, 3, 300 + i), random_tensor(2, 16, 16, 3, 400 + i));

  CheckpointBundle bundle = t.make_checkpoint();
  CHECK(bundle.iteration == 2);

  Trainer<float> r(tiny_run());
  r.load_bundle(bundle);
  CHECK(r.iteration() == 2);
  CHECK(all_values(r) == all_values(t));

  Tensor4<float> probe = random_tensor(1, 16, 16, 3, 500);
  CHECK(t.gen().translate(probe).v == r.gen().translate(probe).v);

  // Training resumed from the bundle tracks the uninterrupted run bitwise.
  for (int i = 0; i < 3; ++i) {
    Tensor4<float> src = random_tensor(2, 16, 16, 3, 600 + i);
    Tensor4<float> tgt = random_tensor(2, 16, 16, 3, 700 + i);
    StepReport<float> rt = t.train_step(src, tgt);
    StepReport<float> rr = r.train_step(src, tgt);
    CHECK(same_report(rt, rr));
  }
  CHECK(all_values(r) == all_values(t));
}

TEST_CASE("full run writes the expected artifacts") {
  TempDir src("src"), tgt("tgt"), out("run");
  fill_dataset(src.path(), 3, 10);
  fill_dataset(tgt.path(), 3, 120);
  RunConfig cfg = tiny_run();
  cfg.source_dir = src.path();
  cfg.target_dir = tgt.path();

  int steps_seen = 0;
  run_training<float>(cfg, out.path(), "",
                      [&](const StepReport<float>&) { ++steps_seen; });
  CHECK(steps_seen == 4);

  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(out.path()) / "config.txt"));
  CHECK(fs::exists(fs::path(out.path()) / "ckpt-0.spgk"));
  CHECK(fs::exists(fs::path(out.path()) / "ckpt-2.spgk"));
  CHECK(fs::exists(fs::path(out.path()) / "ckpt-4.spgk"));
  CHECK(fs::exists(fs::path(out.path()) / "ckpt-final.spgk"));

  std::ifstream metrics(fs::path(out.path()) / "metrics.csv");
  std::string line;
  REQUIRE(std::getline(metrics, line));
  CHECK(line.find("iteration,lr,d_adv,g_adv,cyc,id,g_total") == 0);
  int rows = 0;
  while (std::getline(metrics, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);

  // The snapshot reparses to the same configuration.
  RunConfig reparsed = parse_config(
      [&] {
        std::ifstream is(fs::path(out.path()) / "config.txt");
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
      }());
  CHECK(config_hash(reparsed) == config_hash(cfg));
}

TEST_CASE("resume continues the metrics log without rewriting it") {
  TempDir src("src"), tgt("tgt"), out("run");
  fill_dataset(src.path(), 3, 10);
  fill_dataset(tgt.path(), 3, 120);
  RunConfig cfg = tiny_run();
  cfg.source_dir = src.path();
  cfg.target_dir = tgt.path();

  CheckpointBundle full = run_training<float>(cfg, out.path());

  // Second directory: run to the midpoint checkpoint, then resume.
  TempDir out2("run");
  RunConfig half = cfg;
  half.total_iters = 2;
  run_training<float>(half, out2.path());
  std::vector<StepReport<float>> tail;
  CheckpointBundle resumed = run_training<float>(
      cfg, out2.path(), (std::filesystem::path(out2.path()) / "ckpt-final.spgk").string(),
      [&](const StepReport<float>& r) { tail.push_back(r); });

  REQUIRE(tail.size() == 2);
  CHECK(tail.front().iteration == 2);
  CHECK(tail.back().iteration == 3);
  REQUIRE(full.blocks.size() == resumed.blocks.size());
  for (size_t i = 0; i < full.blocks.size(); ++i) {
    CHECK(full.blocks[i].first == resumed.blocks[i].first);
    CHECK(full.blocks[i].second == resumed.blocks[i].second);
  }

  std::ifstream metrics(std::filesystem::path(out2.path()) / "metrics.csv");
  std::string line;
  int header_count = 0, rows = 0;
  while (std::getline(metrics, line)) {
    if (line.find("iteration,") == 0) ++header_count;
    else if (!line.empty()) ++rows;
  }
  CHECK(header_count == 1);
  CHECK(rows == 4);
}

TEST_CASE("periodic evaluation and samples appear when enabled") {
  TempDir src("src"), tgt("tgt"), out("run");
  fill_dataset(src.path(), 3, 10);
  fill_dataset(tgt.path(), 3, 120);
  RunConfig cfg = tiny_run();
  cfg.source_dir = src.path();
  cfg.target_dir = tgt.path();
  cfg.total_iters = 2;
  cfg.warmup_iters = 0;
  cfg.eval_interval = 2;
  cfg.sample_interval = 2;
  cfg.eval_sample_count = 3;

  run_training<float>(cfg, out.path());
  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(out.path()) / "samples" / "iter2-0.png"));

  std::ifstream evals(fs::path(out.path()) / "eval.csv");
  std::string line;
  REQUIRE(std::getline(evals, line));
  CHECK(line == "iteration,fid,kid,n_generated,n_reference,embedder");
  int rows = 0;
  while (std::getline(evals, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // iteration 0 and iteration 2
}
