#include <cmath>
#include <random>

#include "decsaddle/compression.hpp"
#include "doctest.h"

using namespace decsaddle;

TEST_CASE("quantizer maps zero to zero") {
  Engine rng(1);
  CHECK(quantize_inf<double>(Eigen::VectorXd::Zero(5), 4, rng).isZero(0));
}

TEST_CASE("quantizer hand example with zero dither") {
  Eigen::Vector2d x(1.0, -2.0);
  const auto q = quantize_inf<double>(x, 2, Eigen::Vector2d::Zero());
  CHECK(q(0) == 1.0);
  CHECK(q(1) == -2.0);
}

TEST_CASE("quantizer output lies on the level grid") {
  Engine rng(5);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(20);
  for (Index i = 0; i < 20; ++i) x(i) = normal(rng);
  const double scale = x.lpNorm<Eigen::Infinity>();
  for (int bits : {1, 2, 4, 8}) {
    const double step = scale / std::ldexp(1.0, bits - 1);
    const auto q = quantize_inf<double>(x, bits, rng);
    for (Index i = 0; i < 20; ++i) {
      const double level = q(i) / step;
      CHECK(std::abs(level - std::round(level)) < 1e-9);
      CHECK(std::abs(q(i)) <= scale + step + 1e-12);
      CHECK((q(i) == 0 || (q(i) > 0) == (x(i) > 0)));
    }
  }
}

TEST_CASE("quantizer is unbiased") {
  Engine rng(9);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(6);
  for (Index i = 0; i < 6; ++i) x(i) = normal(rng);
  const int draws = 20000;
  for (int bits : {2, 4}) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(6);
    for (int t = 0; t < draws; ++t) sum += quantize_inf<double>(x, bits, rng);
    const Eigen::VectorXd mean = sum / draws;
    // Each coordinate is a two-point variable whose spread is at most one level.
    const double step = x.lpNorm<Eigen::Infinity>() / std::ldexp(1.0, bits - 1);
    const double sigma = 0.5 * step / std::sqrt(double(draws));
    CHECK((mean - x).cwiseAbs().maxCoeff() <= 4 * sigma);
  }
}

TEST_CASE("identity compressor has zero delta and is exact") {
  const auto c = Compressor<double>::identity();
  Engine rng(2);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(7, -1, 2);
  CHECK(c(x, rng) == x);
  CHECK(c.delta() == 0.0);
  CHECK(estimate_delta(c, 7, 1000, rng) == 0.0);
  CHECK(c.payload_bits(10) == 320u);
}

TEST_CASE("quantizer payload bits") {
  CHECK(Compressor<double>::quantize(4, 0.1).payload_bits(10) == 50u);
}

TEST_CASE("quantizer with delta above one is rejected") {
  CHECK_THROWS_AS(Compressor<double>::quantize(2, 1.5), InfeasibleParameters);
  CHECK_THROWS_AS(Compressor<double>::quantize(2, 0.0), InfeasibleParameters);
  CHECK_THROWS(Compressor<double>::quantize(0, 0.5));
}

TEST_CASE("delta estimate at high bit depth is negligible") {
  Engine rng(4);
  CHECK(estimate_delta<double>(32, 10, 1000, rng) <= 1e-6);
}

TEST_CASE("delta estimate for two bits in four dimensions") {
  Engine rng(4);
  const double d = estimate_delta<double>(2, 4, 10000, rng);
  CHECK(d > 0.0);
  CHECK(d <= 1.0);
  CHECK_NOTHROW(quantizer_with_estimated_delta<double>(2, 4, 10000, rng));
}

TEST_CASE("delta estimate needs enough trials") {
  Engine rng(4);
  CHECK_THROWS(estimate_delta<double>(4, 4, 999, rng));
}

TEST_CASE("delta estimate bounds the variance of fresh directions") {
  Engine rng(21);
  const double delta = estimate_delta<double>(4, 10, 10000, rng);
  const auto c = Compressor<double>::quantize(4, delta);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd x(10);
    for (Index i = 0; i < 10; ++i) x(i) = normal(rng);
    CHECK(relative_compression_error(c, x, 10000, rng) <= delta * 1.05);
  }
}

TEST_CASE("COMM with identity on ring of three") {
  const auto g = build_ring(3);
  auto state = CommState<double>::from_reference(g, Eigen::MatrixXd::Zero(1, 3));
  Eigen::MatrixXd nu(1, 3);
  nu << 3, 0, 0;
  const auto out = comm_step(nu, state, 0.5, g, Compressor<double>::identity(), SeedTree(1));
  CHECK(out.nu_hat == nu);
  CHECK((out.nu_hat_w.array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(state.H(0) == 1.5);
  CHECK(state.H(1) == 0.0);
  CHECK(state.H(2) == 0.0);
  CHECK((state.Hw.array() - 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("COMM with no drift sends nothing") {
  const auto g = build_ring(4);
  Eigen::MatrixXd h(2, 4);
  h << 1, 2, 3, 4, -1, 0.5, 0.25, 2;
  auto state = CommState<double>::from_reference(g, h);
  const auto before = state;
  const auto out = comm_step(h, state, 0.3, g, Compressor<double>::quantize(3, 0.5), SeedTree(8));
  CHECK(out.nu_hat == before.H);
  CHECK(out.nu_hat_w == before.Hw);
  CHECK((state.H - before.H).cwiseAbs().maxCoeff() <= 1e-15 * before.H.cwiseAbs().maxCoeff());
}

TEST_CASE("COMM identity gives the exact mixture") {
  const auto g = build_torus(3, 3);
  Engine rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd h(4, 9), nu(4, 9);
  for (Index i = 0; i < h.size(); ++i) {
    h(i) = normal(rng);
    nu(i) = normal(rng);
  }
  auto state = CommState<double>::from_reference(g, h);
  const auto out = comm_step(nu, state, 0.5, g, Compressor<double>::identity(), SeedTree(0));
  CHECK(out.nu_hat == nu);
  CHECK(out.nu_hat_w == mix(g, nu));
}

TEST_CASE("COMM rejects alpha outside its window") {
  const auto g = build_ring(3);
  auto state = CommState<double>::from_reference(g, Eigen::MatrixXd::Zero(1, 3));
  const Eigen::MatrixXd nu = Eigen::MatrixXd::Ones(1, 3);
  const auto q = Compressor<double>::quantize(4, 0.25);
  CHECK_THROWS_AS(comm_step(nu, state, 0.0, g, q, SeedTree(0)), InfeasibleParameters);
  CHECK_THROWS_AS(comm_step(nu, state, 0.8, g, q, SeedTree(0)), InfeasibleParameters);
  CHECK_NOTHROW(comm_step(nu, state, 0.79, g, q, SeedTree(0)));
}

TEST_CASE("COMM keeps Hw equal to the mixed references") {
  const auto g = build_ring(5);
  const auto q = Compressor<double>::quantize(4, 0.2);
  Engine rng(17);
  std::normal_distribution<double> normal;
  auto state = CommState<double>::from_reference(g, Eigen::MatrixXd::Zero(3, 5));
  for (int t = 0; t < 1000; ++t) {
    Eigen::MatrixXd nu(3, 5);
    for (Index i = 0; i < nu.size(); ++i) nu(i) = normal(rng);
    comm_step(nu, state, 0.5, g, q, SeedTree(99).child(static_cast<std::uint64_t>(t)));
    const Eigen::MatrixXd expected = mix(g, state.H);
    CHECK((state.Hw - expected).norm() <= 1e-9 * (1 + expected.norm()));
  }
}

TEST_CASE("COMM randomness depends only on the stream tree") {
  const auto g = build_ring(4);
  const auto q = Compressor<double>::quantize(2, 0.5);
  Eigen::MatrixXd nu = Eigen::MatrixXd::Random(3, 4);
  auto a = CommState<double>::from_reference(g, Eigen::MatrixXd::Zero(3, 4));
  auto b = a;
  const auto oa = comm_step(nu, a, 0.5, g, q, SeedTree(5).child(2));
  const auto ob = comm_step(nu, b, 0.5, g, q, SeedTree(5).child(2));
  CHECK(oa.nu_hat == ob.nu_hat);
  CHECK(a.H == b.H);
}
