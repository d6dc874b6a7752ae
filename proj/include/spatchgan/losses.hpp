#pragma once

#include <cmath>
#include <type_traits>
#include <string>
#include <vector>

#include "spatchgan/discriminator.hpp"
#include "spatchgan/errors.hpp"
#include "spatchgan/generators.hpp"
#include "spatchgan/resize.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

template <typename T>
struct LossWeights {
  T lambda_adv = T(4);
  T lambda_cyc = T(20);  // task-dependent, see config
  T lambda_id = T(10);

  void validate() const {
    if (lambda_adv < T(0) || lambda_cyc < T(0) || lambda_id < T(0))
      throw ConfigError("loss weights must be non-negative");
  }
};

template <typename T>
struct LossReport {
  T d_adv = T(0);
  T g_adv = T(0);
  T cyc = T(0);
  T id = T(0);
  T g_total = T(0);
  // Per-head adversarial components, aligned with the discriminator's labels.
  std::vector<T> d_adv_heads;
  std::vector<T> g_adv_heads;
};

namespace detail {

template <typename T>
void check_same_heads(size_t real, size_t fake) {
  if (real != fake)
    throw ShapeError("adversarial loss: real grid has " + std::to_string(real) +
                     " heads, fake grid has " + std::to_string(fake));
}

}  // namespace detail

/// Least-squares discriminator objective with 0-1 coding, averaged over
/// heads: (1/H) sum_h [ mean (real_h - 1)^2 + mean fake_h^2 ]. Head tensors
/// may be scalars or patch maps; means run over batch times patches. Writes
/// dL/d(head) into greal/gfake when given, per-head components into heads.
template <typename T>
T d_adversarial_loss_heads(const std::vector<Tensor4<T>>& real,
                           const std::vector<Tensor4<T>>& fake,
                           std::type_identity_t<std::vector<Tensor4<T>>*> greal = nullptr,
                           std::type_identity_t<std::vector<Tensor4<T>>*> gfake = nullptr,
                           std::type_identity_t<std::vector<T>*> heads = nullptr) {
  detail::check_same_heads<T>(real.size(), fake.size());
  if (real.empty()) throw ShapeError("adversarial loss: no discriminator heads");
  const T hcount = static_cast<T>(real.size());
  if (greal) greal->resize(real.size());
  if (gfake) gfake->resize(fake.size());
  if (heads) heads->assign(real.size(), T(0));
  T total = T(0);
  for (size_t h = 0; h < real.size(); ++h) {
    const Tensor4<T>& r = real[h];
    const Tensor4<T>& f = fake[h];
    if (r.n != f.n)
      throw ShapeError("adversarial loss: real batch " + std::to_string(r.n) +
                       " != fake batch " + std::to_string(f.n));
    const T rk = static_cast<T>(r.v.size());
    const T fk = static_cast<T>(f.v.size());
    T lr = T(0), lf = T(0);
    for (const T& v : r.v) lr += (v - T(1)) * (v - T(1));
    for (const T& v : f.v) lf += v * v;
    lr /= rk;
    lf /= fk;
    if (heads) (*heads)[h] = lr + lf;
    total += lr + lf;
    if (greal) {
      (*greal)[h] = Tensor4<T>::zeros_like(r);
      for (size_t i = 0; i < r.v.size(); ++i)
        (*greal)[h].v[i] = T(2) * (r.v[i] - T(1)) / (rk * hcount);
    }
    if (gfake) {
      (*gfake)[h] = Tensor4<T>::zeros_like(f);
      for (size_t i = 0; i < f.v.size(); ++i) (*gfake)[h].v[i] = T(2) * f.v[i] / (fk * hcount);
    }
  }
  return total / hcount;
}

/// Least-squares generator objective: (1/H) sum_h mean (fake_h - 1)^2.
template <typename T>
T g_adversarial_loss_heads(const std::vector<Tensor4<T>>& fake,
                           std::type_identity_t<std::vector<Tensor4<T>>*> gfake = nullptr,
                           std::type_identity_t<std::vector<T>*> heads = nullptr) {
  if (fake.empty()) throw ShapeError("adversarial loss: no discriminator heads");
  const T hcount = static_cast<T>(fake.size());
  if (gfake) gfake->resize(fake.size());
  if (heads) heads->assign(fake.size(), T(0));
  T total = T(0);
  for (size_t h = 0; h < fake.size(); ++h) {
    const Tensor4<T>& f = fake[h];
    const T fk = static_cast<T>(f.v.size());
    T lf = T(0);
    for (const T& v : f.v) lf += (v - T(1)) * (v - T(1));
    lf /= fk;
    if (heads) (*heads)[h] = lf;
    total += lf;
    if (gfake) {
      (*gfake)[h] = Tensor4<T>::zeros_like(f);
      for (size_t i = 0; i < f.v.size(); ++i)
        (*gfake)[h].v[i] = T(2) * (f.v[i] - T(1)) / (fk * hcount);
    }
  }
  return total / hcount;
}

/// Grid forms of the adversarial losses, one scalar per sample and head.
template <typename T>
T d_adversarial_loss(const DisOutputGrid<T>& real, const DisOutputGrid<T>& fake) {
  detail::check_same_heads<T>(real.labels.size(), fake.labels.size());
  if (real.batch != fake.batch)
    throw ShapeError("adversarial loss: real batch " + std::to_string(real.batch) +
                     " != fake batch " + std::to_string(fake.batch));
  if (real.heads() == 0 || real.batch == 0) throw ShapeError("adversarial loss: empty grid");
  T total = T(0);
  for (int h = 0; h < real.heads(); ++h) {
    T lr = T(0), lf = T(0);
    for (int b = 0; b < real.batch; ++b) {
      lr += (real.at(b, h) - T(1)) * (real.at(b, h) - T(1));
      lf += fake.at(b, h) * fake.at(b, h);
    }
    total += lr / T(real.batch) + lf / T(fake.batch);
  }
  return total / T(real.heads());
}

template <typename T>
T g_adversarial_loss(const DisOutputGrid<T>& fake) {
  if (fake.heads() == 0 || fake.batch == 0) throw ShapeError("adversarial loss: empty grid");
  T total = T(0);
  for (int h = 0; h < fake.heads(); ++h) {
    T lf = T(0);
    for (int b = 0; b < fake.batch; ++b)
      lf += (fake.at(b, h) - T(1)) * (fake.at(b, h) - T(1));
    total += lf / T(fake.batch);
  }
  return total / T(fake.heads());
}

/// Mean absolute difference over every element; subgradient 0 at ties.
template <typename T>
T l1_mean(const Tensor4<T>& a, const Tensor4<T>& b,
          std::type_identity_t<Tensor4<T>*> ga = nullptr,
          std::type_identity_t<Tensor4<T>*> gb = nullptr) {
  if (!a.same_shape(b))
    throw ShapeError("l1: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  const T k = static_cast<T>(a.v.size());
  if (ga) *ga = Tensor4<T>::zeros_like(a);
  if (gb) *gb = Tensor4<T>::zeros_like(b);
  T total = T(0);
  for (size_t i = 0; i < a.v.size(); ++i) {
    const T d = a.v[i] - b.v[i];
    total += std::abs(d);
    const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
    if (ga) ga->v[i] = s / k;
    if (gb) gb->v[i] = -s / k;
  }
  return total / k;
}

/// Weak cycle objective with an injectable reconstructor, for testing the
/// composition in isolation: mean |u(x1) - recon(u(gx1))|.
template <typename T, typename ReconFn>
T weak_cycle_loss_with(const Tensor4<T>& x1, const Tensor4<T>& gx1, ReconFn&& recon) {
  if (!x1.same_shape(gx1))
    throw ShapeError("weak cycle: shape mismatch " + x1.shape_str() + " vs " + gx1.shape_str());
  Tensor4<T> low_src = down8_forward(x1);
  Tensor4<T> low_rec = recon(down8_forward(gx1));
  return l1_mean<T>(low_src, low_rec);
}

/// Eq-level weak cycle loss: compares the downscaled source with the
/// backward generator's reconstruction of the downscaled translation.
template <typename T>
T weak_cycle_loss(const Tensor4<T>& x1, const Tensor4<T>& gx1, BackwardGenerator<T>& b) {
  return weak_cycle_loss_with(x1, gx1,
                              [&b](const Tensor4<T>& low) { return b.forward(low, false); });
}

/// Identity objective on the target domain: mean |x2 - G(x2)|.
template <typename T>
T identity_loss(const Tensor4<T>& x2, const Tensor4<T>& gx2,
                std::type_identity_t<Tensor4<T>*> ggx2 = nullptr) {
  if (!x2.same_shape(gx2))
    throw ShapeError("identity: shape mismatch " + x2.shape_str() + " vs " + gx2.shape_str());
  return l1_mean<T>(gx2, x2, ggx2, nullptr);
}

/// Assembles the weighted generator objective; keeps components unweighted.
template <typename T>
LossReport<T> total_generator_loss(T g_adv, T cyc, T id, const LossWeights<T>& w) {
  w.validate();
  LossReport<T> r;
  r.g_adv = g_adv;
  r.cyc = cyc;
  r.id = id;
  r.g_total = w.lambda_adv * g_adv + w.lambda_cyc * cyc + w.lambda_id * id;
  return r;
}

}  // namespace spatchgan
