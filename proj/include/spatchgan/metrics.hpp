#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "spatchgan/data.hpp"
#include "spatchgan/embedder.hpp"
#include "spatchgan/errors.hpp"
#include "spatchgan/log.hpp"

namespace spatchgan {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric, unbiased (n-1)
  int count = 0;
};

/// Sample mean and unbiased covariance of row-stacked embeddings.
inline GaussianStats fit_gaussian(const Eigen::MatrixXd& emb) {
  const int n = static_cast<int>(emb.rows());
  if (n < 2) throw DataError("fit_gaussian: need at least 2 samples, received " +
                             std::to_string(n));
  GaussianStats g;
  g.count = n;
  g.mean = emb.colwise().mean();
  Eigen::MatrixXd centered = emb.rowwise() - g.mean.transpose();
  g.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  g.cov = ((g.cov + g.cov.transpose()) / 2.0).eval();
  return g;
}

namespace detail {

/// Symmetric PSD square root; eigenvalues below zero (numerical noise) clamp
/// to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericsError("eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = ev[i] > 0 ? std::sqrt(ev[i]) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Frechet distance between Gaussians:
/// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2)). The cross term
/// tr((Sa^(1/2) Sb Sa^(1/2))^(1/2)) equals the nuclear norm of
/// Sb^(1/2) Sa^(1/2); summing singular values directly avoids taking
/// eigenvalue square roots near zero, which matters for the rank-deficient
/// covariances small sample sets produce.
inline double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size())
    throw ShapeError("fid: dimension mismatch " + std::to_string(a.mean.size()) + " vs " +
                     std::to_string(b.mean.size()));
  const double mean_term = (a.mean - b.mean).squaredNorm();
  Eigen::MatrixXd ra = detail::psd_sqrt(a.cov);
  Eigen::MatrixXd rb = detail::psd_sqrt(b.cov);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rb * ra);
  const double cross = svd.singularValues().sum();
  return mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
}

/// Unbiased squared MMD with the polynomial kernel k(x,y) = (x.y/d + 1)^3,
/// using only off-diagonal terms in all three sums so identical multisets
/// give exactly zero. Equal-sized consecutive blocks are averaged; if either
/// side has fewer rows than the block size, a single smaller block is used
/// with a warning.
inline double kid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int block_size = 100) {
  if (a.cols() != b.cols())
    throw ShapeError("kid: dimension mismatch " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(b.rows());
  if (m < 2 || n < 2) throw DataError("kid: need at least 2 samples per side");
  int block = std::min({block_size, m, n});
  if (block < block_size)
    log_warn("kid: fewer samples than block size " + std::to_string(block_size) +
             ", using one block of " + std::to_string(block));
  const double d = static_cast<double>(a.cols());
  const int blocks = std::min(m, n) / block;
  double acc = 0.0;
  for (int bi = 0; bi < blocks; ++bi) {
    const auto x = a.middleRows(bi * block, block);
    const auto y = b.middleRows(bi * block, block);
    Eigen::MatrixXd kxx = ((x * x.transpose()) / d).array() + 1.0;
    Eigen::MatrixXd kyy = ((y * y.transpose()) / d).array() + 1.0;
    Eigen::MatrixXd kxy = ((x * y.transpose()) / d).array() + 1.0;
    kxx = kxx.array().cube();
    kyy = kyy.array().cube();
    kxy = kxy.array().cube();
    const double k = static_cast<double>(block);
    const double sxx = kxx.sum() - kxx.trace();
    const double syy = kyy.sum() - kyy.trace();
    const double sxy = kxy.sum() - kxy.trace();
    acc += (sxx + syy - 2.0 * sxy) / (k * (k - 1.0));
  }
  return acc / blocks;
}

struct MetricReport {
  double fid = 0.0;
  double kid = 0.0;
  int n_a = 0;
  int n_b = 0;
  int dim = 0;
  int kid_block = 0;
  std::string tag;
};

/// Embeds every decodable image of a directory; images are resized by the
/// embedder, values mapped to [-1, 1].
inline Eigen::MatrixXd embed_directory(const std::string& dir, EmbeddingModel& model,
                                       int max_images = 0) {
  ImageFolder folder(dir);
  std::vector<Eigen::VectorXd> rows;
  for (size_t i = 0; i < folder.size(); ++i) {
    if (max_images > 0 && static_cast<int>(rows.size()) >= max_images) break;
    Image8 img;
    if (!folder.load(i, img)) continue;
    Tensor4<float> t = image_to_float(img);
    to_unit_range(t);
    Eigen::MatrixXd e = model.embed(t);
    rows.push_back(e.row(0));
  }
  if (rows.size() < 2)
    throw DataError("need at least 2 decodable images in " + dir + ", found " +
                    std::to_string(rows.size()));
  Eigen::MatrixXd out(static_cast<int>(rows.size()), model.dim());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = rows[i];
  return out;
}

inline MetricReport evaluate(const std::string& generated_dir, const std::string& reference_dir,
                             EmbeddingModel& model, int kid_block = 100) {
  Eigen::MatrixXd ea = embed_directory(generated_dir, model);
  Eigen::MatrixXd eb = embed_directory(reference_dir, model);
  MetricReport r;
  r.n_a = static_cast<int>(ea.rows());
  r.n_b = static_cast<int>(eb.rows());
  r.dim = model.dim();
  r.kid_block = std::min({kid_block, r.n_a, r.n_b});
  r.tag = model.tag();
  r.fid = fid(fit_gaussian(ea), fit_gaussian(eb));
  r.kid = kid(ea, eb, kid_block);
  return r;
}

/// Fixed-order human-readable table.
inline std::string report_to_table(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric      value\n"
                "fid         %.6f\n"
                "kid         %.8f\n"
                "n_generated %d\n"
                "n_reference %d\n"
                "embedder    %s\n"
                "dim         %d\n"
                "kid_block   %d\n",
                r.fid, r.kid, r.n_a, r.n_b, r.tag.c_str(), r.dim, r.kid_block);
  return buf;
}

/// Structured single-record form (JSON object, one per file).
inline std::string report_to_json(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\n"
                "  \"fid\": %.10g,\n"
                "  \"kid\": %.10g,\n"
                "  \"n_generated\": %d,\n"
                "  \"n_reference\": %d,\n"
                "  \"embedder\": \"%s\",\n"
                "  \"dim\": %d,\n"
                "  \"kid_block\": %d\n"
                "}\n",
                r.fid, r.kid, r.n_a, r.n_b, r.tag.c_str(), r.dim, r.kid_block);
  return buf;
}

}  // namespace spatchgan
