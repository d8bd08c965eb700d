#include <gtest/gtest.h>

#include <cmath>

#include "nete/evt.hpp"
#include "nete/samplers.hpp"

namespace {

double tail_index(const nete::Matrix& u) {
  const nete::Vector norms = nete::l1_norms(u);
  return nete::adaptive_hill(std::span<const double>(norms.data(), norms.size())).gamma_hat;
}

TEST(MatrixA, EntriesInRange) {
  nete::Rng rng(1);
  const nete::Matrix one = nete::sample_matrix_A(1, 1, rng);
  EXPECT_GE(one(0, 0), 1.0);
  EXPECT_LE(one(0, 0), 2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nete::Rng r(seed);
    const nete::Matrix a = nete::sample_matrix_A(10, 50, r);
    EXPECT_GE(a.minCoeff(), 1.0);
    EXPECT_LE(a.maxCoeff(), 2.0);
    EXPECT_GE(a.mean(), 1.45);
    EXPECT_LE(a.mean(), 1.55);
  }
  EXPECT_THROW(nete::sample_matrix_A(0, 3, rng), nete::DomainError);
}

TEST(MatrixA, Deterministic) {
  nete::Rng a(99);
  nete::Rng b(99);
  EXPECT_EQ(nete::sample_matrix_A(4, 7, a), nete::sample_matrix_A(4, 7, b));
}

TEST(LinearPareto, MarginalCdf) {
  nete::Rng rng(2024);
  const nete::LinearParetoSpec spec{2.0, nete::Matrix::Ones(1, 1)};
  const nete::Matrix u = nete::sample_linear_pareto(100000, spec, rng);
  for (double x : {1.0, 3.0}) {
    const double tail = (u.array() > x).cast<double>().mean();
    EXPECT_NEAR(tail, std::pow(1.0 + x, -2.0), 0.01) << "x=" << x;
  }
}

TEST(LinearPareto, EmptyAndPositive) {
  nete::Rng rng(3);
  const nete::LinearParetoSpec spec{1.5, nete::sample_matrix_A(5, 30, rng)};
  const nete::Matrix empty = nete::sample_linear_pareto(0, spec, rng);
  EXPECT_EQ(empty.rows(), 0);
  EXPECT_EQ(empty.cols(), 5);
  const nete::Matrix u = nete::sample_linear_pareto(2000, spec, rng);
  EXPECT_GT(u.minCoeff(), 0.0);
}

TEST(LinearPareto, Deterministic) {
  nete::Rng seed_rng(4);
  const nete::LinearParetoSpec spec{2.5, nete::sample_matrix_A(3, 8, seed_rng)};
  nete::Rng a(17);
  nete::Rng b(17);
  EXPECT_EQ(nete::sample_linear_pareto(500, spec, a), nete::sample_linear_pareto(500, spec, b));
}

TEST(LinearPareto, TailIndexRecovery) {
  nete::Rng rng(5);
  const nete::LinearParetoSpec spec{1.5, nete::sample_matrix_A(5, 30, rng)};
  EXPECT_NEAR(tail_index(nete::sample_linear_pareto(100000, spec, rng)), 1.0 / 1.5, 0.15);
}

TEST(Mixture, TailIndexRecovery) {
  nete::Rng rng(6);
  EXPECT_NEAR(tail_index(nete::sample_pareto_mixture(100000, nete::MixtureSpec{1.5, 5}, rng)), 1.0 / 1.5, 0.15);
}

TEST(Mixture, EmptyPositiveDeterministic) {
  nete::Rng rng(7);
  EXPECT_EQ(nete::sample_pareto_mixture(0, nete::MixtureSpec{2.0, 3}, rng).rows(), 0);
  nete::Rng a(8);
  nete::Rng b(8);
  const nete::Matrix ua = nete::sample_pareto_mixture(1000, nete::MixtureSpec{2.0, 3}, a);
  EXPECT_EQ(ua, nete::sample_pareto_mixture(1000, nete::MixtureSpec{2.0, 3}, b));
  EXPECT_GT(ua.minCoeff(), 0.0);
}

TEST(Mixture, RejectsBadSpec) {
  nete::Rng rng(9);
  EXPECT_THROW(nete::sample_pareto_mixture(10, nete::MixtureSpec{-1.0, 3}, rng), nete::DomainError);
  EXPECT_THROW(nete::sample_pareto_mixture(10, nete::MixtureSpec{2.0, 0}, rng), nete::DomainError);
}

TEST(Norms, AnglesSumToOne) {
  nete::Rng rng(10);
  const nete::Matrix u = nete::sample_pareto_mixture(200, nete::MixtureSpec{2.0, 4}, rng);
  const nete::Matrix s = nete::l1_angles(u);
  const nete::Vector nrm = nete::l1_norms(u);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-12);
    EXPECT_NEAR(nrm(i), u.row(i).sum(), 1e-12);
  }
}

TEST(Rng, SplitStreamsDifferAndRepeat) {
  nete::Rng root(42);
  nete::Rng s0 = root.split(0);
  nete::Rng s0b = root.split(0);
  nete::Rng s1 = root.split(1);
  const auto a = s0();
  EXPECT_EQ(a, s0b());
  EXPECT_NE(a, s1());
  for (int i = 0; i < 1000; ++i) {
    const double u = root.uniform_open();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
