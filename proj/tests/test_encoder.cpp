#include <cmath>

#include "dgib/encoder.hpp"
#include "dgib/rng.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

Mlp2 random_mlp(int in, int hidden, int out, Rng& rng) {
  Mlp2 m;
  auto fill = [&rng](Eigen::Index r, Eigen::Index c) {
    Mat x(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) x(i, j) = rng.uniform(-0.5, 0.5);
    return x;
  };
  m.w1 = fill(in, hidden);
  m.b1 = fill(1, hidden);
  m.w2 = fill(hidden, out);
  m.b2 = fill(1, out);
  return m;
}

GinBlock random_gin(int in, int hidden, int out, Rng& rng) {
  GinBlock b;
  b.l1.eps = Mat::Zero(1, 1);
  b.l1.mlp = random_mlp(in, hidden, out, rng);
  b.l2.eps = Mat::Zero(1, 1);
  b.l2.mlp = random_mlp(out, hidden, out, rng);
  return b;
}

EncoderParams random_encoder(int channels, int d0, int hidden, int d4, int d3, Rng& rng) {
  EncoderParams p;
  for (int c = 0; c < channels; ++c) p.gins.push_back(random_gin(d0, hidden, d4, rng));
  Mat w(channels * d4, 2 * d3);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-0.5, 0.5);
  p.readout_w = w;
  p.readout_b = Mat::Zero(1, 2 * d3);
  return p;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("aggregation with no edges and eps 0 returns the features") {
    Mat m = Mat::Zero(3, 3);
    Mat h = Mat::Random(3, 4);
    CHECK(gin_aggregate(m, h, 0.0) == h);
  }

  TEST_CASE("hand sum on a 2-node exchange") {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    Mat h(2, 1);
    h << 1, 2;
    Mat agg = gin_aggregate(m, h, 0.0);
    CHECK(agg(0, 0) == 3.0);
    CHECK(agg(1, 0) == 3.0);
  }

  TEST_CASE("aggregation and full block are permutation-equivariant") {
    Rng rng(21);
    Mat m(4, 4);
    m << 0, 2, 0, 1, 2, 0, 1, 0, 0, 1, 0, 3, 1, 0, 3, 0;
    Mat h = Mat::Random(4, 5);
    GinBlock gin = random_gin(5, 6, 3, rng);

    std::vector<int> perm = {2, 0, 3, 1};
    Mat pm(4, 4), ph(4, 5);
    for (int i = 0; i < 4; ++i) {
      ph.row(perm[static_cast<std::size_t>(i)]) = h.row(i);
      for (int j = 0; j < 4; ++j)
        pm(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = m(i, j);
    }
    Mat out = gin_forward(m, h, gin);
    Mat pout = gin_forward(pm, ph, gin);
    for (int i = 0; i < 4; ++i) {
      CHECK(pout.row(perm[static_cast<std::size_t>(i)]).isApprox(out.row(i), 1e-12));
    }
  }

  TEST_CASE("encode output dimensions, d3 = 6") {
    Rng rng(22);
    int d3 = 6;
    auto params = random_encoder(13, 4, 8, 5, d3, rng);
    std::vector<Mat> channels(13, Mat::Zero(3, 3));
    Mat x = Mat::Random(3, 4);
    auto g = encode(channels, x, params);
    CHECK(g.mu.size() == d3);
    CHECK(g.sigma.size() == d3);
    CHECK((g.sigma.array() > 0.0).all());
  }

  TEST_CASE("all-zero projection gives mu 0 and sigma softplus(0)") {
    Rng rng(23);
    auto params = random_encoder(2, 3, 4, 3, 4, rng);
    params.readout_w.setZero();
    params.readout_b.setZero();
    std::vector<Mat> channels(2, Mat::Zero(3, 3));
    Mat x = Mat::Random(3, 3);
    auto g = encode(channels, x, params);
    CHECK(g.mu.isZero(0.0));
    for (int i = 0; i < g.sigma.size(); ++i) {
      CHECK(g.sigma[i] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("node permutation leaves (mu, sigma) unchanged") {
    Rng rng(24);
    auto params = random_encoder(3, 4, 6, 4, 5, rng);
    Mat x = Mat::Random(5, 4);
    std::vector<Mat> channels;
    for (int c = 0; c < 3; ++c) {
      Mat m = Mat::Random(5, 5).cwiseAbs();
      m = ((m + m.transpose()) / 2).eval();
      m.diagonal().setZero();
      channels.push_back(m);
    }
    auto g = encode(channels, x, params);

    std::vector<int> perm = {4, 2, 0, 3, 1};
    Mat px(5, 4);
    std::vector<Mat> pchannels(3, Mat(5, 5));
    for (int i = 0; i < 5; ++i) {
      px.row(perm[static_cast<std::size_t>(i)]) = x.row(i);
      for (int j = 0; j < 5; ++j)
        for (int c = 0; c < 3; ++c)
          pchannels[static_cast<std::size_t>(c)](perm[static_cast<std::size_t>(i)],
                                                 perm[static_cast<std::size_t>(j)]) =
              channels[static_cast<std::size_t>(c)](i, j);
    }
    auto pg = encode(pchannels, px, params);
    CHECK(pg.mu.isApprox(g.mu, 1e-12));
    CHECK(pg.sigma.isApprox(g.sigma, 1e-12));
  }

  TEST_CASE("single-node pooling is valid") {
    Rng rng(25);
    auto params = random_encoder(1, 3, 4, 3, 2, rng);
    std::vector<Mat> channels = {Mat::Zero(1, 1)};
    Mat x = Mat::Random(1, 3);
    auto g = encode(channels, x, params);
    CHECK(g.mu.size() == 2);
  }

  TEST_CASE("reparameterize: eta = 0 returns mu, vanishing sigma converges to mu") {
    GaussianEmbedding g;
    g.mu = Vec::Constant(3, 1.5);
    g.sigma = Vec::Constant(3, 0.4);
    CHECK(reparameterize_with(g, Vec::Zero(3)) == g.mu);

    g.sigma = Vec::Constant(3, 1e-18);
    Vec eta = Vec::Constant(3, 2.0);
    CHECK((reparameterize_with(g, eta) - g.mu).norm() < 1e-8);
  }

  TEST_CASE("sample mean of many draws approaches mu (Monte-Carlo oracle)") {
    GaussianEmbedding g;
    g.mu = Vec::Constant(2, 0.7);
    g.sigma = Vec::Constant(2, 0.25);
    Rng rng(313);
    int n = 100000;
    Vec acc = Vec::Zero(2);
    for (int i = 0; i < n; ++i) acc += reparameterize(g, rng);
    acc /= static_cast<double>(n);
    double bound = 3.0 * std::sqrt(0.25) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(acc[0] - 0.7) < bound);
    CHECK(std::abs(acc[1] - 0.7) < bound);
  }

  TEST_CASE("nonpositive variance is rejected") {
    GaussianEmbedding g;
    g.mu = Vec::Zero(2);
    g.sigma = Vec::Constant(2, -0.1);
    CHECK_THROWS_AS(reparameterize_with(g, Vec::Zero(2)), Error);
  }
}
