#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spatchgan/errors.hpp"
#include "spatchgan/param.hpp"

namespace spatchgan {

template <typename T>
struct AdamConfig {
  T beta1 = T(0.5);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  // Decoupled decay, applied only to convolution / fully-connected weights
  // (see decays()): norm gains and biases are exempt.
  T weight_decay = T(1e-4);
};

/// Adam over a fixed parameter set with decoupled weight decay. Moments are
/// exposed as named state so checkpoints can resume exactly.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, const AdamConfig<T>& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].param->value.size(), T(0));
      v_[i].assign(params_[i].param->value.size(), T(0));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.param->zero_grad();
  }

  void step(T lr) {
    ++t_;
    const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<T>& p = *params_[i].param;
      const bool decay = cfg_.weight_decay > T(0) && decays(p.kind);
      for (size_t j = 0; j < p.value.size(); ++j) {
        const T g = p.grad[j];
        m_[i][j] = cfg_.beta1 * m_[i][j] + (T(1) - cfg_.beta1) * g;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (T(1) - cfg_.beta2) * g * g;
        const T mhat = m_[i][j] / bc1;
        const T vhat = v_[i][j] / bc2;
        T upd = mhat / (std::sqrt(vhat) + cfg_.eps);
        if (decay) upd += cfg_.weight_decay * p.value[j];
        p.value[j] -= lr * upd;
      }
    }
  }

  uint64_t steps() const { return t_; }
  void set_steps(uint64_t t) { t_ = t; }

  /// Moment vectors named after their parameters.
  void collect_state(std::vector<StateRef<T>>& out) {
    for (size_t i = 0; i < params_.size(); ++i) {
      out.push_back({params_[i].name + "/adam_m", &m_[i]});
      out.push_back({params_[i].name + "/adam_v", &v_[i]});
    }
  }

  const std::vector<ParamRef<T>>& params() const { return params_; }

 private:
  std::vector<ParamRef<T>> params_;
  AdamConfig<T> cfg_;
  std::vector<std::vector<T>> m_, v_;
  uint64_t t_ = 0;
};

}  // namespace spatchgan
