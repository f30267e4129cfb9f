#include <gtest/gtest.h>

#include <cmath>

#include "ghdo/aghdo.hpp"
#include "ghdo/gram_hadamard.hpp"
#include "ghdo/oracle.hpp"
#include "test_util.hpp"

using namespace ghdo;
using namespace ghdo::testing;

namespace {

/// Unnormalized raw-table evaluation of the AGHDO element, written directly
/// from the definition for tabulated amplitudes.
cplx direct_element(const TabulatedAmplitudes& t, std::span<const Spin> s, std::span<const Spin> e) {
  const int n = t.sites(), r = t.local_rank();
  cplx prod = 1.0;
  for (int h = 0; h < n; ++h) {
    const auto ps = config_to_index(s.first(h)), pe = config_to_index(e.first(h));
    double ns = 0, ne = 0;
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < r; ++a) {
        ns += std::norm(t.at(h, ps, x, a));
        ne += std::norm(t.at(h, pe, x, a));
      }
    cplx sum{};
    for (int a = 0; a < r; ++a)
      sum += t.at(h, ps, spin_slot(s[h]), a) * std::conj(t.at(h, pe, spin_slot(e[h]), a));
    prod *= sum / std::sqrt(ns * ne);
  }
  return prod;
}

void expect_density(const DenseMatrix& rho, double tol) {
  EXPECT_LE(hermiticity_error(rho), tol);
  EXPECT_NEAR(rho.trace().real(), 1.0, tol);
  EXPECT_NEAR(rho.trace().imag(), 0.0, tol);
  EXPECT_GE(min_eigenvalue_hermitian(hermitize(rho)), -tol);
}

}  // namespace

TEST(Aghdo, TabulatedElementMatchesDefinition) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto m = random_tabulated(3, 2, seed);
    const auto& t = dynamic_cast<const TabulatedAmplitudes&>(m.amplitudes());
    for (const auto& s : all_configs(3))
      for (const auto& e : all_configs(3))
        EXPECT_NEAR(std::abs(m.element(s, e) - direct_element(t, s, e)), 0.0, 1e-14);
  }
}

TEST(Aghdo, RandomNetworkIsDensityOperator) {
  for (int n = 1; n <= 4; ++n)
    for (int r : {1, 2, 3}) {
      const auto m = random_network(n, r, 100 + n * 10 + r);
      expect_density(dense_from_model(m), 1e-12);
    }
}

TEST(Aghdo, HermitianElementwise) {
  const auto m = random_network(4, 2, 17);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const auto s = index_to_config(rng() % 16, 4), e = index_to_config(rng() % 16, 4);
    EXPECT_EQ(m.element(s, e), std::conj(m.element(e, s)));
  }
}

TEST(Aghdo, DiagonalIsProductOfConditionals) {
  const auto m = random_network(3, 2, 5);
  double total = 0.0;
  for (const auto& s : all_configs(3)) {
    double prod = 1.0;
    for (int h = 0; h < 3; ++h) {
      const auto c = m.conditionals(std::span<const Spin>(s).first(h));
      EXPECT_NEAR(c[0] + c[1], 1.0, 1e-12);
      prod *= c[spin_slot(s[h])];
    }
    EXPECT_NEAR(m.diagonal(s), prod, 1e-14);
    const cplx el = m.element(s, s);
    EXPECT_NEAR(el.real(), prod, 1e-14);
    EXPECT_EQ(el.imag(), 0.0);
    total += m.diagonal(s);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Aghdo, RankOneIsPureState) {
  const auto m = random_network(3, 1, 8);
  const DenseMatrix rho = dense_from_model(m);
  EXPECT_LE(max_abs(rho * rho - rho), 1e-12);
  EXPECT_EQ(numerical_rank(rho), 1);
}

TEST(Aghdo, CauchySchwarz) {
  const auto m = random_network(4, 3, 12);
  for (const auto& s : all_configs(4))
    for (const auto& e : all_configs(4))
      EXPECT_LE(std::norm(m.element(s, e)), m.diagonal(s) * m.diagonal(e) * (1 + 1e-12));
}

TEST(Aghdo, IncrementalEvaluationMatchesFull) {
  const auto m = random_network(5, 2, 31);
  const Configuration c{1, -1, 1, 1, -1};
  const auto base = m.evaluate(c);
  for (int i = 0; i < 5; ++i) {
    auto c2 = c;
    c2[i] = Spin(-c2[i]);
    const auto f = m.flipped(base, i);
    const auto full = m.evaluate(c2);
    const auto via = m.evaluate_from(base, c2);
    for (std::size_t k = 0; k < full.state.phi.values().size(); ++k) {
      EXPECT_EQ(f.state.phi.values()[k], full.state.phi.values()[k]);
      EXPECT_EQ(via.state.phi.values()[k], full.state.phi.values()[k]);
    }
    EXPECT_EQ(m.element(f, base), m.element(c2, c));
  }
}

TEST(Aghdo, LogElementMatchesElement) {
  const auto m = random_network(3, 2, 41);
  for (const auto& s : all_configs(3))
    for (const auto& e : all_configs(3)) {
      const cplx v = m.element(s, e);
      const cplx l = m.log_element(s, e);
      EXPECT_NEAR(std::abs(std::exp(l) - v), 0.0, 1e-14);
    }
}

TEST(Aghdo, LogElementOfZeroThrows) {
  const auto m = from_classical(std::vector<double>{0.5, 0.0, 0.0, 0.5});
  EXPECT_THROW(m.log_element(Configuration{-1, -1}, Configuration{1, 1}), DegenerateAmplitude);
  EXPECT_THROW(m.log_derivatives(Configuration{-1, -1}, Configuration{1, 1}), DegenerateAmplitude);
}

namespace {

void check_gradient(const AghdoModel& m, const Configuration& s, const Configuration& e) {
  const auto o = m.log_derivatives(s, e);
  const auto p = std::vector<double>(m.parameters().begin(), m.parameters().end());
  const double eps = 1e-5;
  std::vector<cplx> fd(p.size());
  AghdoModel work = m;
  const cplx l0 = m.log_element(s, e);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto q = p;
    q[k] = p[k] + eps;
    work.set_parameters(q);
    cplx lp = work.log_element(s, e);
    q[k] = p[k] - eps;
    work.set_parameters(q);
    cplx lm = work.log_element(s, e);
    // keep the imaginary parts on the branch of l0
    const double two_pi = 2 * M_PI;
    lp.imag(lp.imag() - two_pi * std::round((lp.imag() - l0.imag()) / two_pi));
    lm.imag(lm.imag() - two_pi * std::round((lm.imag() - l0.imag()) / two_pi));
    fd[k] = (lp - lm) / (2 * eps);
  }
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    diff = std::max(diff, std::abs(o[k] - fd[k]));
    scale = std::max(scale, std::abs(fd[k]));
  }
  EXPECT_LE(diff / scale, 1e-6);
}

}  // namespace

TEST(LogDerivatives, NetworkMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 3;
    const auto m = random_network(n, 1 + trial % 3, 300 + trial, 0.5);
    const auto s = index_to_config(rng() % (1u << n), n), e = index_to_config(rng() % (1u << n), n);
    check_gradient(m, s, e);
  }
}

TEST(LogDerivatives, TabulatedMatchesFiniteDifferences) {
  const auto m = random_tabulated(3, 2, 9);
  check_gradient(m, {1, -1, 1}, {-1, -1, 1});
  check_gradient(m, {1, 1, 1}, {1, 1, 1});
}

TEST(LogDerivatives, DiagonalOfClassicalHasRealDerivatives) {
  std::mt19937_64 rng(3);
  const auto m = from_classical(random_distribution(3, rng));
  for (const auto& s : all_configs(3)) {
    const auto o = m.log_derivatives(s, s);
    for (const auto& v : o) EXPECT_EQ(v.imag(), 0.0);
  }
}

TEST(FromClassical, HandTable) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto m = from_classical(p);
  EXPECT_NEAR(m.conditionals(Configuration{})[1], 0.7, 1e-14);
  EXPECT_NEAR(m.conditionals(Configuration{-1})[1], 2.0 / 3.0, 1e-14);
  for (std::uint64_t i = 0; i < 4; ++i) EXPECT_NEAR(m.diagonal(index_to_config(i, 2)), p[i], 1e-15);
}

TEST(FromClassical, UniformAndPointMass) {
  const auto u = from_classical(std::vector<double>(8, 0.125));
  EXPECT_LE(max_abs(dense_from_model(u) - DenseMatrix::Identity(8, 8) / 8.0), 1e-15);
  for (int h = 0; h < 3; ++h) EXPECT_NEAR(u.conditionals(Configuration(h, Spin{1}))[0], 0.5, 1e-15);

  std::vector<double> p(8, 0.0);
  p[5] = 1.0;
  DenseMatrix expect = DenseMatrix::Zero(8, 8);
  expect(5, 5) = 1.0;
  EXPECT_LE(max_abs(dense_from_model(from_classical(p)) - expect), 1e-15);
}

TEST(FromClassical, RandomIsExact) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const auto p = random_distribution(3, rng);
    const DenseMatrix rho = dense_from_model(from_classical(p));
    DenseMatrix expect = DenseMatrix::Zero(8, 8);
    for (int i = 0; i < 8; ++i) expect(i, i) = p[i];
    EXPECT_LE(max_abs(rho - expect), 1e-14);
  }
}

TEST(FromClassical, RejectsInvalid) {
  EXPECT_THROW(from_classical(std::vector<double>{0.5, 0.6}), InputError);
  EXPECT_THROW(from_classical(std::vector<double>{1.5, -0.5}), InputError);
  EXPECT_THROW(from_classical(std::vector<double>{0.3, 0.3, 0.4}), InputError);
}

TEST(FromDense, Reconstructs) {
  std::mt19937_64 rng(20);
  for (int n : {1, 2, 3})
    for (int cols : {1, 2, 8}) {
      const DenseMatrix rho = random_density(1 << n, cols, rng);
      const auto m = from_dense(rho);
      EXPECT_EQ(m.local_rank(), 1 << n);
      EXPECT_LE(max_abs(dense_from_model(m) - rho), 1e-10);
    }
}

TEST(FromDense, PureBasisAndMaximallyMixed) {
  DenseMatrix basis = DenseMatrix::Zero(4, 4);
  basis(2, 2) = 1.0;
  const DenseMatrix r1 = dense_from_model(from_dense(basis));
  EXPECT_LE(max_abs(r1 - basis), 1e-12);
  EXPECT_EQ(numerical_rank(r1), 1);
  const DenseMatrix mixed = DenseMatrix::Identity(8, 8) / 8.0;
  EXPECT_LE(max_abs(dense_from_model(from_dense(mixed)) - mixed), 1e-12);
}

TEST(FromDense, RejectsInvalid) {
  DenseMatrix bad = DenseMatrix::Identity(4, 4) / 2.0;
  EXPECT_THROW(from_dense(bad), InputError);
  DenseMatrix neg = DenseMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(from_dense(neg), InputError);
  DenseMatrix nonherm = DenseMatrix::Identity(2, 2) / 2.0;
  nonherm(0, 1) = 0.1;
  EXPECT_THROW(from_dense(nonherm), InputError);
  EXPECT_THROW(from_dense(DenseMatrix::Identity(3, 3) / 3.0), InputError);
}

TEST(Ghdo, MaximallyMixed) {
  for (int n = 1; n <= 3; ++n) {
    const auto m = maximally_mixed(n);
    const int d = 1 << n;
    EXPECT_LE(max_abs(dense_from_model(m) - DenseMatrix::Identity(d, d) / double(d)), 1e-15);
  }
  const auto m = maximally_mixed(3);
  EXPECT_NEAR(std::abs(ghdo_element(m, Configuration{1, -1, 1}, Configuration{1, -1, 1}) - 0.125), 0.0, 1e-15);
  EXPECT_EQ(ghdo_element(m, Configuration{1, -1, 1}, Configuration{1, 1, 1}), cplx{});
}

TEST(Ghdo, PureStateFromSingleFactor) {
  std::mt19937_64 rng(1);
  DenseMatrix c = DenseMatrix::Random(8, 1);
  const auto m = GhdoModel::from_tables(3, {c});
  const DenseMatrix rho = dense_from_model(m);
  EXPECT_LE(max_abs(rho - c * c.adjoint()), 1e-14);
}

TEST(Ghdo, MatchesDenseGramHadamardOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  auto rand_table = [&](int rows, int cols) {
    DenseMatrix t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = cplx(g(rng), g(rng));
    return t;
  };
  const DenseMatrix a = rand_table(4, 2), b = rand_table(4, 2);
  const DenseMatrix oracle = (a * a.adjoint()).cwiseProduct(b * b.adjoint());
  EXPECT_LE(max_abs(dense_from_model(GhdoModel::from_tables(2, {a, b})) - oracle), 1e-12);
}

TEST(Ghdo, RankBound) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int n = 2; n <= 4; ++n)
    for (int k = 1; k <= 2; ++k)
      for (int r = 1; r <= 2; ++r) {
        std::vector<DenseMatrix> tabs;
        for (int f = 0; f < k; ++f) {
          DenseMatrix t(1 << n, r);
          for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = cplx(g(rng), g(rng));
          tabs.push_back(t);
        }
        const DenseMatrix rho = dense_from_model(GhdoModel::from_tables(n, tabs));
        EXPECT_LE(numerical_rank(rho), static_cast<int>(std::pow(r, k)));
        EXPECT_GE(min_eigenvalue_hermitian(hermitize(rho)), -1e-10 * rho.cwiseAbs().maxCoeff());
      }
}
