#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spatchgan/checkpoint.hpp"
#include "spatchgan/config.hpp"
#include "spatchgan/data.hpp"
#include "spatchgan/discriminator.hpp"
#include "spatchgan/embedder.hpp"
#include "spatchgan/generators.hpp"
#include "spatchgan/losses.hpp"
#include "spatchgan/metrics.hpp"
#include "spatchgan/optim.hpp"
#include "spatchgan/rng.hpp"

namespace spatchgan {

template <typename T>
struct StepReport {
  uint64_t iteration = 0;  // 0-based index of the step that produced this
  T lr = T(0);
  LossReport<T> losses;
  // Mean discriminator outputs per head from this step's D update.
  std::vector<T> d_real_mean;
  std::vector<T> d_fake_mean;
};

namespace detail {

template <typename T>
Tensor4<T> concat_batch(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (a.h != b.h || a.w != b.w || a.c != b.c)
    throw ShapeError("concat: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor4<T> out(a.n + b.n, a.h, a.w, a.c);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

template <typename T>
Tensor4<T> batch_slice(const Tensor4<T>& t, int from, int count) {
  Tensor4<T> out(count, t.h, t.w, t.c);
  std::copy(t.v.begin() + from * t.sample_stride(),
            t.v.begin() + (from + count) * t.sample_stride(), out.v.begin());
  return out;
}

template <typename T>
T tensor_mean(const Tensor4<T>& t) {
  T s = T(0);
  for (const T& v : t.v) s += v;
  return t.v.empty() ? T(0) : s / static_cast<T>(t.v.size());
}

}  // namespace detail

/// Owns the three networks and their optimizers, and runs the two-phase
/// update: a discriminator step on a concatenated real+fake batch, then a
/// joint G+B step from fresh forward passes. Gradients for the adversarial,
/// cycle, and identity paths accumulate before the single G step.
template <typename T>
class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg)
      : cfg_(validated(cfg)),
        g_(cfg_.generator(), cfg_.image_size, cfg_.image_size),
        b_(cfg_.generator(), cfg_.image_size / 8, cfg_.image_size / 8),
        d_(build_discriminator<T>(cfg_.discriminator(), cfg_.image_size, cfg_.image_size)),
        w_(cfg_.template loss_weights<T>()) {
    g_.collect_params(gparams_);
    b_.collect_params(gparams_);
    d_->collect_params(dparams_);
    AdamConfig<T> ac;
    ac.beta1 = static_cast<T>(cfg_.adam_beta1);
    ac.beta2 = static_cast<T>(cfg_.adam_beta2);
    ac.weight_decay = static_cast<T>(cfg_.weight_decay);
    opt_g_ = std::make_unique<Adam<T>>(gparams_, ac);
    opt_d_ = std::make_unique<Adam<T>>(dparams_, ac);
  }

  void init_params() {
    std::mt19937 rg = make_rng(cfg_.seed, {kStreamInit, 1});
    g_.init(rg);
    std::mt19937 rb = make_rng(cfg_.seed, {kStreamInit, 2});
    b_.init(rb);
    std::mt19937 rd = make_rng(cfg_.seed, {kStreamInit, 3});
    d_->init(rd);
  }

  StepReport<T> train_step(const Tensor4<T>& src, const Tensor4<T>& tgt) {
    if (src.n != tgt.n)
      throw ShapeError("train_step: source batch " + std::to_string(src.n) +
                       " != target batch " + std::to_string(tgt.n));
    if (src.n != cfg_.batch_size)
      throw ShapeError("train_step: batch " + std::to_string(src.n) + ", configured " +
                       std::to_string(cfg_.batch_size));
    StepReport<T> rep;
    rep.iteration = iter_;
    rep.lr = static_cast<T>(lr_at(iter_, cfg_));
    const int nb = src.n;
    const size_t heads = d_->head_labels().size();

    // Discriminator phase: one forward over [real; fake] advances every
    // spectral-norm estimate exactly once per update.
    for (int k = 0; k < cfg_.d_updates_per_g; ++k) {
      opt_d_->zero_grad();
      Tensor4<T> fake = g_.forward(src, false);
      Tensor4<T> both = detail::concat_batch(tgt, fake);
      std::vector<Tensor4<T>> out = d_->forward_heads(both, true);
      std::vector<Tensor4<T>> rh(heads), fh(heads);
      for (size_t h = 0; h < heads; ++h) {
        rh[h] = detail::batch_slice(out[h], 0, nb);
        fh[h] = detail::batch_slice(out[h], nb, nb);
      }
      std::vector<Tensor4<T>> gr, gf;
      rep.losses.d_adv = d_adversarial_loss_heads(rh, fh, &gr, &gf, &rep.losses.d_adv_heads);
      std::vector<Tensor4<T>> gboth(heads);
      for (size_t h = 0; h < heads; ++h) gboth[h] = detail::concat_batch(gr[h], gf[h]);
      d_->backward_heads(gboth);
      opt_d_->step(rep.lr);
      if (k == cfg_.d_updates_per_g - 1) {
        rep.d_real_mean.resize(heads);
        rep.d_fake_mean.resize(heads);
        for (size_t h = 0; h < heads; ++h) {
          rep.d_real_mean[h] = detail::tensor_mean(rh[h]);
          rep.d_fake_mean[h] = detail::tensor_mean(fh[h]);
        }
      }
    }

    // Generator phase, fresh forwards. Path one: adversarial + cycle grads
    // through the cached translation; path two: identity. Discriminator
    // parameter grads accumulate here too but are discarded by the zero at
    // the top of the next D phase.
    opt_g_->zero_grad();
    Tensor4<T> fake = g_.forward(src, true);
    std::vector<Tensor4<T>> fheads = d_->forward_heads(fake, true);
    std::vector<Tensor4<T>> gfheads;
    const T g_adv = g_adversarial_loss_heads(fheads, &gfheads, &rep.losses.g_adv_heads);
    for (auto& gh : gfheads)
      for (T& v : gh.v) v *= w_.lambda_adv;
    Tensor4<T> gfake = d_->backward_heads(gfheads);

    Tensor4<T> low_src = down8_forward(src);
    Tensor4<T> low_fake = down8_forward(fake);
    Tensor4<T> rec = b_.forward(low_fake, true);
    Tensor4<T> grec;
    const T cyc = l1_mean(low_src, rec, nullptr, &grec);
    if (w_.lambda_cyc > T(0)) {
      for (T& v : grec.v) v *= w_.lambda_cyc;
      Tensor4<T> glow = b_.backward(grec);
      Tensor4<T> gcyc = down8_backward(glow, src.h, src.w);
      for (size_t i = 0; i < gfake.v.size(); ++i) gfake.v[i] += gcyc.v[i];
    }
    g_.backward(gfake);

    Tensor4<T> idout = g_.forward(tgt, true);
    Tensor4<T> gid;
    const T id = identity_loss(tgt, idout, &gid);
    if (w_.lambda_id > T(0)) {
      for (T& v : gid.v) v *= w_.lambda_id;
      g_.backward(gid);
    }
    opt_g_->step(rep.lr);

    const LossReport<T> totals = total_generator_loss(g_adv, cyc, id, w_);
    rep.losses.g_adv = totals.g_adv;
    rep.losses.cyc = totals.cyc;
    rep.losses.id = totals.id;
    rep.losses.g_total = totals.g_total;

    for (T v : {rep.losses.d_adv, rep.losses.g_adv, rep.losses.cyc, rep.losses.id,
                rep.losses.g_total})
      if (!std::isfinite(static_cast<double>(v)))
        throw NumericsError("non-finite loss at iteration " + std::to_string(iter_) +
                            ": d_adv=" + std::to_string(static_cast<double>(rep.losses.d_adv)) +
                            " g_total=" + std::to_string(static_cast<double>(rep.losses.g_total)));

    ++iter_;
    return rep;
  }

  uint64_t iteration() const { return iter_; }
  const RunConfig& config() const { return cfg_; }
  ForwardGenerator<T>& gen() { return g_; }
  BackwardGenerator<T>& backward_gen() { return b_; }
  DiscriminatorBase<T>& disc() { return *d_; }

  CheckpointBundle make_checkpoint() {
    CheckpointBundle bundle;
    bundle.config_hash = config_hash(cfg_);
    bundle.iteration = iter_;
    for (const auto& [name, vec] : checkpoint_slots())
      bundle.add(name, std::vector<float>(vec->begin(), vec->end()));
    bundle.add("opt_g/steps", {static_cast<float>(opt_g_->steps())});
    bundle.add("opt_d/steps", {static_cast<float>(opt_d_->steps())});
    return bundle;
  }

  void load_bundle(const CheckpointBundle& bundle) {
    if (bundle.config_hash != config_hash(cfg_))
      log_warn("checkpoint was written under a different config; matching by block names");
    auto slots = checkpoint_slots();
    std::vector<std::vector<float>> staging(slots.size() + 2);
    std::vector<std::pair<std::string, std::vector<float>*>> dests;
    for (size_t i = 0; i < slots.size(); ++i) {
      staging[i].resize(slots[i].second->size());
      dests.emplace_back(slots[i].first, &staging[i]);
    }
    staging[slots.size()].resize(1);
    staging[slots.size() + 1].resize(1);
    dests.emplace_back("opt_g/steps", &staging[slots.size()]);
    dests.emplace_back("opt_d/steps", &staging[slots.size() + 1]);
    apply_blocks(bundle, dests);
    for (size_t i = 0; i < slots.size(); ++i)
      slots[i].second->assign(staging[i].begin(), staging[i].end());
    opt_g_->set_steps(static_cast<uint64_t>(staging[slots.size()][0]));
    opt_d_->set_steps(static_cast<uint64_t>(staging[slots.size() + 1][0]));
    iter_ = bundle.iteration;
  }

 private:
  // Runs before any network member is built, so bad sizes surface as config
  // errors rather than construction failures deep inside a sub-network.
  static RunConfig validated(RunConfig cfg) {
    cfg.validate();
    if (cfg.image_size % 8 != 0)
      throw ConfigError("image_size must be divisible by 8 for the 1/8-resolution cycle");
    return cfg;
  }

  std::vector<std::pair<std::string, std::vector<T>*>> checkpoint_slots() {
    std::vector<std::pair<std::string, std::vector<T>*>> slots;
    for (auto& p : gparams_) slots.emplace_back(p.name, &p.param->value);
    for (auto& p : dparams_) slots.emplace_back(p.name, &p.param->value);
    std::vector<StateRef<T>> states;
    g_.collect_state(states);
    b_.collect_state(states);
    d_->collect_state(states);
    opt_g_->collect_state(states);
    opt_d_->collect_state(states);
    for (auto& s : states) slots.emplace_back(s.name, s.value);
    return slots;
  }

  RunConfig cfg_;
  ForwardGenerator<T> g_;
  BackwardGenerator<T> b_;
  std::unique_ptr<DiscriminatorBase<T>> d_;
  LossWeights<T> w_;
  std::vector<ParamRef<T>> gparams_, dparams_;
  std::unique_ptr<Adam<T>> opt_g_, opt_d_;
  uint64_t iter_ = 0;
};

namespace detail {

inline std::string csv_label(const HeadLabel& l) {
  std::string s = l.str();
  for (char& c : s)
    if (c == '/') c = '_';
  return s;
}

template <typename T>
void write_metrics_header(std::ofstream& os, const std::vector<HeadLabel>& labels) {
  os << "iteration,lr,d_adv,g_adv,cyc,id,g_total";
  for (const auto& l : labels) os << ",d_real_" << csv_label(l);
  for (const auto& l : labels) os << ",d_fake_" << csv_label(l);
  os << "\n";
}

template <typename T>
void write_metrics_row(std::ofstream& os, const StepReport<T>& rep) {
  char buf[64];
  os << rep.iteration;
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.8g", v);
    os << buf;
  };
  put(rep.lr);
  put(rep.losses.d_adv);
  put(rep.losses.g_adv);
  put(rep.losses.cyc);
  put(rep.losses.id);
  put(rep.losses.g_total);
  for (const auto& v : rep.d_real_mean) put(v);
  for (const auto& v : rep.d_fake_mean) put(v);
  os << "\n";
  os.flush();
}

/// FID/KID of translated source images against target images, both taken
/// from the heads of the training folders without augmentation.
template <typename T>
MetricReport quick_eval(Trainer<T>& trainer, const BatchIterator& data, EmbeddingModel& model,
                        int count) {
  const auto& cfg = trainer.config();
  auto take = [&](const ImageFolder& folder, bool translate) {
    std::vector<Tensor4<float>> rows;
    for (size_t i = 0; i < folder.size() && static_cast<int>(rows.size()) < count; ++i) {
      Image8 img;
      if (!folder.load(i, img)) continue;
      Tensor4<float> t = augment_none(img, cfg.image_size);
      if (translate) {
        Tensor4<T> in(1, t.h, t.w, t.c);
        for (size_t j = 0; j < t.v.size(); ++j) in.v[j] = static_cast<T>(t.v[j]);
        Tensor4<T> out = trainer.gen().translate(in);
        for (size_t j = 0; j < t.v.size(); ++j) t.v[j] = static_cast<float>(out.v[j]);
      }
      rows.push_back(std::move(t));
    }
    if (rows.size() < 2)
      throw DataError("evaluation needs at least 2 decodable images in " + folder.dir());
    Tensor4<float> all(static_cast<int>(rows.size()), cfg.image_size, cfg.image_size, 3);
    for (size_t i = 0; i < rows.size(); ++i)
      std::copy(rows[i].v.begin(), rows[i].v.end(), all.v.begin() + i * all.sample_stride());
    return all;
  };
  Eigen::MatrixXd ea = model.embed(take(data.source(), true));
  Eigen::MatrixXd eb = model.embed(take(data.target(), false));
  MetricReport r;
  r.n_a = static_cast<int>(ea.rows());
  r.n_b = static_cast<int>(eb.rows());
  r.dim = model.dim();
  r.kid_block = std::min({100, r.n_a, r.n_b});
  r.tag = model.tag();
  r.fid = fid(fit_gaussian(ea), fit_gaussian(eb));
  r.kid = kid(ea, eb, 100);
  return r;
}

}  // namespace detail

/// Full training run: builds (or resumes) a trainer, streams deterministic
/// batches, writes the metrics log, periodic checkpoints, optional samples
/// and evaluations into out_dir, and returns the final checkpoint.
template <typename T>
CheckpointBundle run_training(const RunConfig& cfg, const std::string& out_dir,
                              const std::string& resume_path = "",
                              const std::function<void(const StepReport<T>&)>& on_step = {}) {
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(out_dir);
  {
    std::ofstream snap(fs::path(out_dir) / "config.txt");
    snap << config_to_string(cfg);
  }

  Trainer<T> trainer(cfg);
  uint64_t start = 0;
  const bool resuming = !resume_path.empty();
  if (resuming) {
    trainer.load_bundle(load_checkpoint(resume_path));
    start = trainer.iteration();
    log_info("resumed from " + resume_path + " at iteration " + std::to_string(start));
  } else {
    trainer.init_params();
    save_checkpoint(trainer.make_checkpoint(), (fs::path(out_dir) / "ckpt-0.spgk").string());
  }

  DatasetSpec spec{cfg.source_dir, cfg.target_dir, cfg.augmentation, cfg.image_size};
  BatchIterator data(spec, cfg.batch_size, cfg.seed);

  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  std::ofstream metrics(metrics_path, resuming ? std::ios::app : std::ios::trunc);
  if (!metrics) throw DataError("cannot open metrics log: " + metrics_path);
  if (!resuming) detail::write_metrics_header<T>(metrics, trainer.disc().head_labels());

  const uint64_t total = cfg.eff_total_iters();
  const uint64_t log_int = std::max<uint64_t>(1, cfg.eff_interval(cfg.log_interval));
  const uint64_t ckpt_int = cfg.eff_interval(cfg.checkpoint_interval);
  const uint64_t eval_int = cfg.eff_interval(cfg.eval_interval);
  const uint64_t sample_int = cfg.eff_interval(cfg.sample_interval);

  std::unique_ptr<EmbeddingModel> embedder;
  std::ofstream evals;
  auto run_eval = [&](uint64_t iter) {
    if (!embedder) {
      embedder = make_embedder(cfg.embedder);
      const std::string eval_path = (fs::path(out_dir) / "eval.csv").string();
      const bool fresh = !fs::exists(eval_path) || !resuming;
      evals.open(eval_path, resuming ? std::ios::app : std::ios::trunc);
      if (fresh) evals << "iteration,fid,kid,n_generated,n_reference,embedder\n";
    }
    MetricReport r = detail::quick_eval(trainer, data, *embedder, cfg.eval_sample_count);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%llu,%.8g,%.8g,%d,%d,%s\n",
                  static_cast<unsigned long long>(iter), r.fid, r.kid, r.n_a, r.n_b,
                  r.tag.c_str());
    evals << buf;
    evals.flush();
    log_info("eval at iteration " + std::to_string(iter) + ": fid=" + std::to_string(r.fid) +
             " kid=" + std::to_string(r.kid));
  };

  auto dump_samples = [&](uint64_t iter) {
    const fs::path dir = fs::path(out_dir) / "samples";
    fs::create_directories(dir);
    const ImageFolder& folder = data.source();
    int written = 0;
    for (size_t i = 0; i < folder.size() && written < 4; ++i) {
      Image8 img;
      if (!folder.load(i, img)) continue;
      Tensor4<float> t = augment_none(img, cfg.image_size);
      Tensor4<T> in(1, t.h, t.w, t.c);
      for (size_t j = 0; j < t.v.size(); ++j) in.v[j] = static_cast<T>(t.v[j]);
      Tensor4<T> out = trainer.gen().translate(in);
      write_png((dir / ("iter" + std::to_string(iter) + "-" + std::to_string(written) + ".png"))
                    .string(),
                tensor_to_image(out));
      ++written;
    }
  };

  if (eval_int > 0 && start == 0 && total > 0) run_eval(0);

  uint64_t last_eval = ~uint64_t(0);
  for (uint64_t i = start; i < total; ++i) {
    auto [sb, tb] = data.batch_at(i);
    Tensor4<T> src(sb.n, sb.h, sb.w, sb.c), tgt(tb.n, tb.h, tb.w, tb.c);
    for (size_t j = 0; j < sb.v.size(); ++j) src.v[j] = static_cast<T>(sb.v[j]);
    for (size_t j = 0; j < tb.v.size(); ++j) tgt.v[j] = static_cast<T>(tb.v[j]);
    StepReport<T> rep;
    try {
      rep = trainer.train_step(src, tgt);
    } catch (const NumericsError& e) {
      const std::string diag = (fs::path(out_dir) / "ckpt-diag.spgk").string();
      save_checkpoint(trainer.make_checkpoint(), diag);
      std::ofstream note(fs::path(out_dir) / "diagnostic.txt");
      note << e.what() << "\niteration " << i << "\ncheckpoint " << diag << "\n";
      throw;
    }
    if (i % log_int == 0 || i + 1 == total) detail::write_metrics_row(metrics, rep);
    if (on_step) on_step(rep);
    if (ckpt_int > 0 && (i + 1) % ckpt_int == 0)
      save_checkpoint(trainer.make_checkpoint(),
                      (fs::path(out_dir) / ("ckpt-" + std::to_string(i + 1) + ".spgk")).string());
    if (sample_int > 0 && (i + 1) % sample_int == 0) dump_samples(i + 1);
    if (eval_int > 0 && (i + 1) % eval_int == 0) {
      run_eval(i + 1);
      last_eval = i + 1;
    }
  }
  if (eval_int > 0 && total > start && last_eval != total) run_eval(total);

  CheckpointBundle final_bundle = trainer.make_checkpoint();
  save_checkpoint(final_bundle, (fs::path(out_dir) / "ckpt-final.spgk").string());
  return final_bundle;
}

}  // namespace spatchgan
