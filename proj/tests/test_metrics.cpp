#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "spatchgan/embedder.hpp"
#include "spatchgan/metrics.hpp"

using namespace spatchgan;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using testutil::TempDir;
using testutil::write_solid_png;

namespace {

Eigen::MatrixXd random_rows(int n, int d, uint32_t seed, double spread = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, spread);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = dist(rng);
  return m;
}

double poly_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double d = static_cast<double>(x.size());
  return std::pow(x.dot(y) / d + 1.0, 3.0);
}

// Direct O(n^2) evaluation of the off-diagonal unbiased MMD^2 estimate,
// independent of the blocked production path.
double kid_bruteforce(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(b.rows());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) sxx += poly_kernel(a.row(i), a.row(j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) syy += poly_kernel(b.row(i), b.row(j));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) sxy += poly_kernel(a.row(i), b.row(j));
  const double k = m;  // production path uses one block of min(m, n)
  return (sxx + syy - 2.0 * sxy) / (k * (k - 1.0));
}

}  // namespace

TEST_CASE("gaussian fit: sample mean and unbiased covariance") {
  Eigen::MatrixXd emb(3, 2);
  emb << 1.0, 2.0, 3.0, 4.0, 5.0, 12.0;
  GaussianStats g = fit_gaussian(emb);
  CHECK(g.count == 3);
  CHECK_THAT(g.mean[0], WithinAbs(3.0, 1e-14));
  CHECK_THAT(g.mean[1], WithinAbs(6.0, 1e-14));
  // centered columns: {-2,0,2}, {-4,-2,6}; divide by n-1 = 2
  CHECK_THAT(g.cov(0, 0), WithinAbs(4.0, 1e-14));
  CHECK_THAT(g.cov(1, 1), WithinAbs(28.0, 1e-14));
  CHECK_THAT(g.cov(0, 1), WithinAbs(10.0, 1e-14));
  CHECK(g.cov(0, 1) == g.cov(1, 0));

  Eigen::MatrixXd one(1, 4);
  one.setZero();
  CHECK_THROWS_AS(fit_gaussian(one), DataError);
}

TEST_CASE("frechet distance: identical stats give zero") {
  GaussianStats g = fit_gaussian(random_rows(40, 6, 11));
  CHECK_THAT(fid(g, g), WithinAbs(0.0, 1e-6));
}

TEST_CASE("frechet distance: symmetric in its arguments") {
  GaussianStats a = fit_gaussian(random_rows(30, 5, 21));
  GaussianStats b = fit_gaussian(random_rows(35, 5, 22, 1.7));
  CHECK_THAT(fid(a, b), WithinAbs(fid(b, a), 1e-8));
  CHECK(fid(a, b) > 0.0);
}

TEST_CASE("frechet distance: diagonal closed form") {
  // For diagonal covariances the trace term reduces to
  // sum_i (sqrt(va_i) - sqrt(vb_i))^2.
  GaussianStats a, b;
  a.mean = Eigen::VectorXd::Zero(3);
  b.mean = Eigen::VectorXd::Zero(3);
  a.mean << 1.0, -2.0, 0.5;
  b.mean << 0.0, 1.0, 0.5;
  Eigen::VectorXd va(3), vb(3);
  va << 4.0, 1.0, 0.25;
  vb << 1.0, 9.0, 0.25;
  a.cov = va.asDiagonal();
  b.cov = vb.asDiagonal();
  a.count = b.count = 100;
  double expected = (a.mean - b.mean).squaredNorm();
  for (int i = 0; i < 3; ++i) {
    const double d = std::sqrt(va[i]) - std::sqrt(vb[i]);
    expected += d * d;
  }
  CHECK_THAT(fid(a, b), WithinAbs(expected, 1e-6));
}

TEST_CASE("frechet distance: dimension mismatch throws") {
  GaussianStats a = fit_gaussian(random_rows(10, 3, 1));
  GaussianStats b = fit_gaussian(random_rows(10, 4, 2));
  CHECK_THROWS_AS(fid(a, b), ShapeError);
}

TEST_CASE("kernel distance: identical multisets give exactly zero") {
  Eigen::MatrixXd a = random_rows(15, 8, 33);
  CHECK(kid(a, a, 100) == 0.0);
  Eigen::MatrixXd big = random_rows(128, 4, 34);
  CHECK(kid(big, big, 32) == 0.0);  // several blocks, still exact
}

TEST_CASE("kernel distance: matches a direct O(n^2) evaluation") {
  for (uint32_t seed : {101u, 102u, 103u}) {
    Eigen::MatrixXd a = random_rows(18, 5, seed);
    Eigen::MatrixXd b = random_rows(18, 5, seed + 1000, 1.4);
    CHECK_THAT(kid(a, b, 100), WithinAbs(kid_bruteforce(a, b), 1e-10));
  }
}

TEST_CASE("kernel distance: symmetric for equal sample counts") {
  Eigen::MatrixXd a = random_rows(20, 4, 7);
  Eigen::MatrixXd b = random_rows(20, 4, 8);
  CHECK_THAT(kid(a, b, 100), WithinAbs(kid(b, a, 100), 1e-12));
}

TEST_CASE("kernel distance: three-point hand value") {
  // Two 1-d point masses with d = 1, kernel (xy + 1)^3.
  Eigen::MatrixXd a(3, 1), b(3, 1);
  a << 1.0, 1.0, 1.0;
  b << 0.0, 0.0, 0.0;
  // kxx = (1+1)^3 = 8, kyy = 1, kxy = 1 for every pair.
  // off-diagonal sums: sxx = 6*8, syy = 6*1, sxy = 6*1 (i != j only)
  // estimate = (48 + 6 - 12) / (3*2) = 7
  CHECK_THAT(kid(a, b, 3), WithinAbs(7.0, 1e-12));
}

TEST_CASE("kernel distance: small sides fall back to one reduced block") {
  Eigen::MatrixXd a = random_rows(6, 3, 51);
  Eigen::MatrixXd b = random_rows(9, 3, 52);
  // block shrinks to 6; the value equals a brute force over the first 6 rows
  Eigen::MatrixXd b6 = b.topRows(6);
  CHECK_THAT(kid(a, b, 100), WithinAbs(kid_bruteforce(a, b6), 1e-10));
  Eigen::MatrixXd tiny(1, 3);
  tiny.setZero();
  CHECK_THROWS_AS(kid(tiny, b, 100), DataError);
}

TEST_CASE("directory evaluation: a folder against itself scores zero") {
  TempDir dir("metrics");
  std::mt19937 rng(9);
  for (int i = 0; i < 6; ++i)
    write_solid_png(dir.file("s" + std::to_string(i) + ".png"), 32, 32,
                    static_cast<uint8_t>(rng() % 256), static_cast<uint8_t>(rng() % 256),
                    static_cast<uint8_t>(rng() % 256));
  auto model = make_embedder("toy-conv64");
  MetricReport r = evaluate(dir.path(), dir.path(), *model);
  CHECK(std::abs(r.fid) < 1e-6);
  CHECK(std::abs(r.kid) < 1e-6);
  CHECK(r.n_a == 6);
  CHECK(r.n_b == 6);
  CHECK(r.kid_block == 6);
  CHECK(r.tag == model->tag());
}

TEST_CASE("embedder registry: deterministic output, unknown tags rejected") {
  auto m1 = make_embedder("toy-conv64");
  auto m2 = make_embedder("toy-conv64");
  CHECK(m1->tag() == m2->tag());
  CHECK(m1->dim() == 64);
  Tensor4<float> img = testutil::random_tensor<float>(2, 40, 40, 3, 77);
  Eigen::MatrixXd e1 = m1->embed(img);
  Eigen::MatrixXd e2 = m2->embed(img);
  CHECK(e1.rows() == 2);
  CHECK(e1.cols() == 64);
  CHECK(e1 == e2);
  CHECK_THROWS_WITH(make_embedder("inception-v3"), ContainsSubstring("toy-conv64"));
}

TEST_CASE("report rendering: fixed key order in table and json") {
  MetricReport r;
  r.fid = 12.5;
  r.kid = 0.03125;
  r.n_a = 10;
  r.n_b = 20;
  r.dim = 64;
  r.kid_block = 10;
  r.tag = "toy-conv64-abc";
  const std::string table = report_to_table(r);
  CHECK(table.find("fid") < table.find("kid"));
  CHECK(table.find("kid") < table.find("n_generated"));
  CHECK_THAT(table, ContainsSubstring("12.5"));
  CHECK_THAT(table, ContainsSubstring("toy-conv64-abc"));
  const std::string json = report_to_json(r);
  CHECK_THAT(json, ContainsSubstring("\"fid\": 12.5"));
  CHECK_THAT(json, ContainsSubstring("\"kid\": 0.03125"));
  CHECK_THAT(json, ContainsSubstring("\"n_generated\": 10"));
  CHECK_THAT(json, ContainsSubstring("\"embedder\": \"toy-conv64-abc\""));
}
