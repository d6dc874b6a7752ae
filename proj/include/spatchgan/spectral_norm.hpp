#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "spatchgan/param.hpp"
#include "spatchgan/rng.hpp"

namespace spatchgan {

/// Spectral normalization state for one weight, viewed as a matrix of shape
/// (output channels) x (everything else). Keeps the running estimates of the
/// left/right singular vectors; power_iters updates (default one) per
/// training-mode forward pass. In eval mode the stored vectors are reused, so
/// sigma is a plain differentiable function of the weight.
template <typename T>
class SpectralNorm {
 public:
  /// Sizes the state without initializing it, so checkpoint loading can
  /// target a model whose init() never ran.
  void resize(int rows, int cols) {
    rows_ = rows;
    cols_ = cols;
    u_.assign(rows, T(0));
    v_.assign(cols, T(0));
  }

  /// weight, when given, seeds v so eval-mode forwards are well defined from
  /// the start and across checkpoint round trips.
  void init(int rows, int cols, std::mt19937& rng, const std::vector<T>* weight = nullptr) {
    rows_ = rows;
    cols_ = cols;
    u_.assign(rows, T(0));
    v_.assign(cols, T(0));
    fill_normal<T>(rng, u_.data(), u_.size(), T(1));
    Eigen::Map<Vec> um(u_.data(), rows_);
    normalize(um);
    if (weight) {
      ConstW w(weight->data(), cols_, rows_);
      Eigen::Map<Vec> vm(v_.data(), cols_);
      vm = w * um;
      normalize(vm);
    }
    iters_ = 0;
  }

  /// weight is stored as [cols_, rows_] row-major, i.e. (k*k*cin) x cout for
  /// convolutions and (in) x (out) for dense layers; the spectral-norm view
  /// is its transpose. Returns sigma and writes weight / sigma to out.
  T apply(const std::vector<T>& weight, std::vector<T>& out, bool train) {
    ConstW w(weight.data(), cols_, rows_);
    Vec u = Eigen::Map<const Vec>(u_.data(), rows_);
    Vec v(cols_);
    if (train) {
      for (int it = 0; it < power_iters; ++it) {
        v = w * u;  // W^T u in the (rows x cols) view
        normalize(v);
        u = w.transpose() * v;  // W v
        normalize(u);
      }
      Eigen::Map<Vec>(u_.data(), rows_) = u;
      Eigen::Map<Vec>(v_.data(), cols_) = v;
      ++iters_;
    } else {
      v = Eigen::Map<const Vec>(v_.data(), cols_);
    }
    sigma_ = u.dot(w.transpose() * v);
    if (sigma_ < kSigmaFloor) sigma_ = kSigmaFloor;
    out.resize(weight.size());
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(out.data(), out.size()) =
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(weight.data(), weight.size()) /
        sigma_;
    return sigma_;
  }

  /// Gradient through W_hat = W / sigma with sigma = u^T W v and u, v held
  /// constant: dW = (dW_hat - <dW_hat, W_hat> u v^T) / sigma.
  void backward(const std::vector<T>& grad_what, const std::vector<T>& what,
                std::vector<T>& grad_w) const {
    const size_t n = grad_what.size();
    grad_w.resize(n);
    T inner = T(0);
    for (size_t i = 0; i < n; ++i) inner += grad_what[i] * what[i];
    // Element (i, j) of the (cols x rows) storage corresponds to u[j] v[i].
    for (int i = 0; i < cols_; ++i) {
      for (int j = 0; j < rows_; ++j) {
        const size_t idx = static_cast<size_t>(i) * rows_ + j;
        grad_w[idx] = (grad_what[idx] - inner * u_[j] * v_[i]) / sigma_;
      }
    }
  }

  T sigma() const { return sigma_; }
  uint64_t iterations() const { return iters_; }

  std::vector<T>& u() { return u_; }
  std::vector<T>& v() { return v_; }

  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) {
    out.push_back({prefix + "/sn_u", &u_});
    out.push_back({prefix + "/sn_v", &v_});
  }

  static constexpr T kSigmaFloor = T(1e-12);

  /// Power-iteration updates per training-mode forward.
  int power_iters = 1;

 private:
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using ConstW = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  template <typename Derived>
  static void normalize(Eigen::MatrixBase<Derived>& x) {
    T norm = x.norm();
    if (norm < T(1e-12)) norm = T(1e-12);
    x /= norm;
  }

  int rows_ = 0, cols_ = 0;
  std::vector<T> u_, v_;
  T sigma_ = T(1);
  uint64_t iters_ = 0;
};

}  // namespace spatchgan
