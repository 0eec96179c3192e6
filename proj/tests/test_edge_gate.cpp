#include <cmath>

#include "dgib/edge_gate.hpp"
#include "dgib/rng.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

EnclosingGraph one_edge_graph() {
  EnclosingGraph eg;
  eg.u = 0;
  eg.v = 1;
  eg.nodes = {0, 1};
  eg.edges = {{0, 0, 1}};
  return eg;
}

}  // namespace

TEST_SUITE("edge-gate") {
  TEST_CASE("zero weights give probability one half") {
    auto eg = one_edge_graph();
    Mat x = Mat::Random(2, 3);
    Mat e = Mat::Random(1, 2);
    GatePair params{Mat::Zero(3, 4), Mat::Zero(2, 4)};
    Vec b = score_edges(eg, x, e, params);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("hand-evaluated 1-dimensional score") {
    // d0=d1=d2=1, W1=[1], W2=[1], X_i=1, X_j=2, E_r=0:
    // raw = 2 * tanh(1), squashed by the logistic function
    auto eg = one_edge_graph();
    Mat x(2, 1);
    x << 1.0, 2.0;
    Mat e(1, 1);
    e << 0.0;
    GatePair params{Mat::Ones(1, 1), Mat::Ones(1, 1)};
    Vec raw = score_edges_raw(eg, x, e, params);
    double expected_raw = 2.0 * std::tanh(1.0);
    CHECK(raw[0] == doctest::Approx(expected_raw).epsilon(1e-12));
    CHECK(raw[0] == doctest::Approx(1.5232).epsilon(1e-4));
    Vec b = score_edges(eg, x, e, params);
    CHECK(b[0] == doctest::Approx(1.0 / (1.0 + std::exp(-expected_raw))).epsilon(1e-12));
    CHECK(b[0] == doctest::Approx(0.8211).epsilon(1e-4));
  }

  TEST_CASE("dimension mismatch is a shape error") {
    auto eg = one_edge_graph();
    Mat x = Mat::Random(2, 3);
    Mat e = Mat::Random(1, 2);
    GatePair bad{Mat::Zero(5, 4), Mat::Zero(2, 4)};
    CHECK_THROWS_AS(score_edges(eg, x, e, bad), Error);
  }

  TEST_CASE("relaxation is the identity at eps=0.5, tau=1") {
    Vec b(3);
    b << 0.2, 0.5, 0.77;
    Vec eps = Vec::Constant(3, 0.5);
    Vec a = relax_sample(b, eps, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }

  TEST_CASE("relaxation hard limit and numeric guard") {
    Vec b(1);
    b << 0.9;
    Vec eps = Vec::Constant(1, 0.5);
    CHECK(relax_sample(b, eps, 1e-4)[0] == doctest::Approx(1.0).epsilon(1e-9));

    Vec degenerate(2);
    degenerate << 0.0, 1.0;  // clamped before the logit
    Vec a = relax_sample(degenerate, Vec::Constant(2, 0.3), 1.0);
    CHECK(std::isfinite(a[0]));
    CHECK(std::isfinite(a[1]));
    CHECK(a[0] < a[1]);
  }

  TEST_CASE("relaxation is strictly increasing in B for fixed noise") {
    Vec eps = Vec::Constant(1, 0.62);
    double prev = -1.0;
    for (double b = 0.05; b < 1.0; b += 0.05) {
      Vec bv = Vec::Constant(1, b);
      double a = relax_sample(bv, eps, 0.8)[0];
      CHECK(a > prev);
      prev = a;
    }
  }

  TEST_CASE("relaxation derivative matches central differences") {
    Vec eps = Vec::Constant(1, 0.37);
    double tau = 0.9;
    for (double b : {0.2, 0.5, 0.8}) {
      double h = 1e-6;
      Vec up = Vec::Constant(1, b + h), down = Vec::Constant(1, b - h);
      double numeric = (relax_sample(up, eps, tau)[0] - relax_sample(down, eps, tau)[0]) / (2 * h);
      Vec at = Vec::Constant(1, b);
      double a = relax_sample(at, eps, tau)[0];
      double analytic = a * (1 - a) / (tau * b * (1 - b));
      CHECK(std::abs(numeric - analytic) / std::max(std::abs(analytic), 1e-9) < 1e-6);
    }
  }

  TEST_CASE("relaxation per rng seed is deterministic") {
    Vec b(4);
    b << 0.1, 0.4, 0.6, 0.9;
    Rng r1(123), r2(123);
    CHECK(relax_sample(b, 1.0, r1) == relax_sample(b, 1.0, r2));
  }

  TEST_CASE("median hardening keeps strictly-above-median edges") {
    Vec w(4);
    w << 0.1, 0.2, 0.6, 0.9;
    auto hard = hard_threshold(w);
    CHECK(hard.threshold == doctest::Approx(0.4));
    CHECK(hard.kept_edges == std::vector<int>{2, 3});
  }

  TEST_CASE("all-equal weights harden to an empty explanation") {
    Vec w = Vec::Constant(5, 0.3);
    auto hard = hard_threshold(w);
    CHECK(hard.kept_edges.empty());
  }

  TEST_CASE("empty support hardens to an empty explanation without error") {
    Vec w(0);
    auto hard = hard_threshold(w);
    CHECK(hard.kept_edges.empty());
  }

  TEST_CASE("custom thresholds follow the strict-inequality rule") {
    Vec w(3);
    w << 0.58, 0.7, 0.8;
    auto first = hard_threshold(w, 0.58);
    CHECK(first.kept_edges == std::vector<int>{1, 2});
    auto second = hard_threshold(w, 0.76);
    CHECK(second.kept_edges == std::vector<int>{2});
  }
}
