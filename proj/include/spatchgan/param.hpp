#pragma once

#include <string>
#include <vector>

namespace spatchgan {

/// Parameter role, used to decide weight-decay eligibility: only convolution
/// and fully connected weights decay, never biases or normalization affines.
enum class ParamKind { ConvWeight, FcWeight, Bias, NormGain, NormBias };

inline bool decays(ParamKind k) {
  return k == ParamKind::ConvWeight || k == ParamKind::FcWeight;
}

template <typename T>
struct Param {
  std::vector<T> value;
  std::vector<T> grad;
  ParamKind kind = ParamKind::ConvWeight;

  void resize(size_t n) {
    value.assign(n, T(0));
    grad.assign(n, T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
  size_t size() const { return value.size(); }
};

/// Named view used by the optimizer and the checkpoint container.
template <typename T>
struct ParamRef {
  std::string name;
  Param<T>* param = nullptr;
};

/// Named non-parameter state (spectral-norm vectors), persisted in checkpoints
/// but never touched by the optimizer.
template <typename T>
struct StateRef {
  std::string name;
  std::vector<T>* value = nullptr;
};

}  // namespace spatchgan
