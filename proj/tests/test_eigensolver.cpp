#include <doctest.h>

#include <cmath>

#include "support/dense_jacobi.hpp"
#include "support/test_helpers.hpp"
#include "wl/eigensolver.hpp"
#include "wl/landscape.hpp"
#include "wl/operators.hpp"
#include "wl/rng.hpp"

using namespace wl;
using wl_test::close;

namespace {

SparseOperator free_path(int n) {
  SparseOperator op;
  op.kind = OperatorKind::Witten;
  op.eps = 1.0;
  op.dim = 1;
  op.diag = Vector::Constant(n, 2.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i + 1 < n; ++i) {
    trip.emplace_back(i, i + 1, -1.0);
    trip.emplace_back(i + 1, i, -1.0);
  }
  op.offdiag.resize(n, n);
  op.offdiag.setFromTriplets(trip.begin(), trip.end());
  return op;
}

std::vector<CriticalPoint> minima_of(const Potential& p, double hw) {
  const auto pts =
      find_critical_points(p, Vector::Zero(p.dim), Vector::Constant(p.dim, hw));
  std::vector<CriticalPoint> minima;
  for (const auto& cp : pts)
    if (cp.index == 0) minima.push_back(cp);
  return minima;
}

}  // namespace

TEST_CASE("matvec: linear, column read-off, shape checked") {
  const SparseOperator op = free_path(3);
  Vector v(3);
  v << 0.0, 1.0, 0.0;
  const Vector out = op.apply(v);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(2.0));
  CHECK(out[2] == doctest::Approx(-1.0));

  CounterRng rng(3, 0);
  Vector a(3), b(3);
  for (int i = 0; i < 3; ++i) {
    a[i] = rng.next_unit();
    b[i] = rng.next_unit();
  }
  const Vector lhs = op.apply(2.0 * a + 3.0 * b);
  const Vector rhs = 2.0 * op.apply(a) + 3.0 * op.apply(b);
  CHECK((lhs - rhs).norm() <= 1e-13 * rhs.norm());

  CHECK_THROWS_AS(op.apply(Vector::Zero(5)), ShapeMismatch);
}

TEST_CASE("lowest_eigenpairs: Dirichlet path closed form, n=10") {
  const SparseOperator op = free_path(10);
  const SpectrumResult spec = lowest_eigenpairs(op, 3);
  CHECK(spec.eigenvalues[0] ==
        doctest::Approx(2.0 - 2.0 * std::cos(M_PI / 11.0)).epsilon(1e-12));
  CHECK(spec.eigenvalues[0] == doctest::Approx(0.081014).epsilon(1e-5));
  CHECK(spec.eigenvalues[1] ==
        doctest::Approx(2.0 - 2.0 * std::cos(2.0 * M_PI / 11.0)).epsilon(1e-12));
}

TEST_CASE("lowest_eigenpairs: k = n returns the full spectrum") {
  const SparseOperator op = free_path(5);
  const SpectrumResult spec = lowest_eigenpairs(op, 5);
  for (int k = 1; k <= 5; ++k)
    CHECK(spec.eigenvalues[static_cast<std::size_t>(k - 1)] ==
          doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / 6.0)).epsilon(1e-12));
}

TEST_CASE("lowest_eigenpairs: double well at eps = 0.1 (frozen 40-digit fixture)") {
  // Reference values from an independent 40-digit eigensolve of the same
  // double-precision matrix (box [-2.5, 2.5], 101 sites).
  const Potential p = builtin_potential("double_well_1d");
  const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
  const SparseOperator op = assemble_witten(p, box);
  const SpectrumResult spec = lowest_eigenpairs(op, 4);

  CHECK(std::abs(spec.eigenvalues[0]) <= 1e-10);
  CHECK(close(spec.eigenvalues[1], 8.202888494930512e-06, 1e-10));
  CHECK(close(spec.eigenvalues[2], 0.3756093042527608, 1e-10));
  CHECK(close(spec.eigenvalues[3], 0.5741371788126179, 1e-10));

  // scale prediction from the Eyring-Kramers constants
  const double predicted = 0.1 * (4.0 * std::sqrt(2.0) / M_PI) * std::exp(-10.0);
  CHECK(predicted == doctest::Approx(8.175e-6).epsilon(1e-3));
  CHECK(spec.eigenvalues[1] / predicted == doctest::Approx(1.0).epsilon(0.5 * std::sqrt(0.1)));

  // certified inverse residuals and orthonormal eigenvectors
  for (double r : spec.inverse_residuals) CHECK(r <= spec.tol);
  const Matrix gram =
      spec.eigenvectors.transpose() * spec.eigenvectors - Matrix::Identity(4, 4);
  CHECK(gram.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("lowest_eigenpairs: dense-oracle equivalence across assembled operators") {
  struct Case {
    Potential p;
    int dim;
    double eps;
    double hw;
  };
  std::vector<Case> cases;
  cases.push_back({builtin_potential("double_well_1d"), 1, 0.1, 2.5});
  cases.push_back({builtin_potential("single_well_1d"), 1, 0.1, 2.5});
  cases.push_back({builtin_potential("triple_well_1d"), 1, 0.1, 1.6});
  cases.push_back({builtin_potential("double_well_aniso_2d", 2.0), 2, 0.35, 2.45});

  for (const auto& c : cases) {
    const LatticeBox box(c.dim, c.eps, Vector::Zero(c.dim), Vector::Constant(c.dim, c.hw));
    REQUIRE(box.size() <= 500);
    const SparseOperator op = assemble_witten(c.p, box);
    const SpectrumResult spec = lowest_eigenpairs(op, 6);
    const Eigen::VectorXd dense = wl_test::jacobi_eigenvalues(Matrix(op.matrix()));
    for (int j = 0; j < 6; ++j) {
      // relative 1e-9 with an absolute floor for the near-zero ground state
      CHECK(close(spec.eigenvalues[static_cast<std::size_t>(j)], dense[j], 1e-9, 1e-12));
    }
  }
}

TEST_CASE("lowest_eigenpairs: deflation removes the ground state") {
  const Potential p = builtin_potential("double_well_1d");
  const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
  const SparseOperator op = assemble_witten(p, box);
  Vector w = ground_state_weight(p, box, 0.1);
  w.normalize();
  const SpectrumResult spec = lowest_eigenpairs(op, 2, 1e-10, {w});
  CHECK(close(spec.eigenvalues[0], 8.202888494930512e-06, 1e-8));
  CHECK(close(spec.eigenvalues[1], 0.3756093042527608, 1e-8));
}

TEST_CASE("count_small_eigenvalues across the three landscapes") {
  SUBCASE("double well: two small eigenvalues at eps = 0.1") {
    const Potential p = builtin_potential("double_well_1d");
    const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
    const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 4);
    const double threshold = small_cluster_threshold(minima_of(p, 2.5), 0.1);
    CHECK(threshold == doctest::Approx(0.1).epsilon(1e-6));
    const GapReport gap = count_small_eigenvalues(spec, threshold, 8.174859503510346e-06);
    CHECK(gap.n_small == 2);
    CHECK(gap.separated);
    CHECK(gap.ratio_to_prediction == doctest::Approx(1.0).epsilon(0.2));
  }
  SUBCASE("single well: one small eigenvalue") {
    const Potential p = builtin_potential("single_well_1d");
    const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
    const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 3);
    const double threshold = small_cluster_threshold(minima_of(p, 2.0), 0.1);
    const GapReport gap = count_small_eigenvalues(spec, threshold);
    CHECK(gap.n_small == 1);
    CHECK(std::abs(gap.lambda_small) <= 1e-10);
  }
  SUBCASE("triple well: three small eigenvalues at eps = 0.08") {
    const Potential p = builtin_potential("triple_well_1d");
    const LatticeBox box(1, 0.08, Vector::Zero(1), Vector::Constant(1, 2.0));
    const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 5);
    const double threshold = small_cluster_threshold(minima_of(p, 1.6), 0.08);
    const GapReport gap = count_small_eigenvalues(spec, threshold);
    CHECK(gap.n_small == 3);
  }
  SUBCASE("ambiguous split raises NotSeparated") {
    const Potential p = builtin_potential("double_well_1d");
    const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
    const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 4);
    CHECK_THROWS_AS(count_small_eigenvalues(spec, spec.eigenvalues[2] * 1.05),
                    NotSeparated);
  }
}

TEST_CASE("multiplicity-1 zero mode on a minimally validated box") {
  // Box sized so that f on the boundary exceeds h* by the configured margin
  // only: then 1e-10 * max diagonal falls between lambda_1 and lambda_2.
  const Potential p = builtin_potential("double_well_1d");
  const double eps = 0.1;
  const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 1.7));
  const SparseOperator op = assemble_witten(p, box);
  const SpectrumResult spec = lowest_eigenpairs(op, 3);
  const double floor = 1e-10 * op.max_abs_diag();
  int below = 0;
  for (double ev : spec.eigenvalues)
    if (ev < floor) ++below;
  CHECK(below == 1);

  // ground eigenvector is sign-constant (inverse GST preserves signs)
  const Vector v = spec.eigenvectors.col(0);
  const double vmax = v.cwiseAbs().maxCoeff();
  int pos = 0, neg = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] > 1e-12 * vmax) ++pos;
    if (v[i] < -1e-12 * vmax) ++neg;
  }
  CHECK((pos == 0 || neg == 0));
}

TEST_CASE("harmonic_reference: predictions and numerics") {
  SUBCASE("M = 1 in d = 1: lambda0 = 1, lambda1 = 3") {
    Matrix M(1, 1);
    M << 1.0;
    const LatticeBox box(1, 0.05, Vector::Zero(1), Vector::Constant(1, 3.0));
    const HarmonicReference ref = harmonic_reference(M, 0.05, box);
    CHECK(ref.lambda0_pred == doctest::Approx(1.0));
    CHECK(ref.lambda1_pred == doctest::Approx(3.0));
    CHECK(std::abs(ref.lambda0_num / 0.05 - 1.0) <= std::pow(0.05, 0.2));
    CHECK(std::abs(ref.lambda1_num / 0.05 - 3.0) <= std::pow(0.05, 0.2));
  }
  SUBCASE("M = diag(1,4): lambda0 = 3, lambda1 = 5") {
    Matrix M = Matrix::Zero(2, 2);
    M(0, 0) = 1.0;
    M(1, 1) = 4.0;
    const LatticeBox box(2, 0.1, Vector::Zero(2), Vector::Constant(2, 3.0));
    const HarmonicReference ref = harmonic_reference(M, 0.1, box);
    CHECK(ref.lambda0_pred == doctest::Approx(3.0));
    CHECK(ref.lambda1_pred == doctest::Approx(5.0));
    CHECK(std::abs(ref.lambda0_num / 0.1 - 3.0) <= 3.0 * std::pow(0.1, 0.2));
  }
  SUBCASE("eps sweep obeys the eps^(1/5) band for M = 1") {
    Matrix M(1, 1);
    M << 1.0;
    for (double eps : {0.1, 0.05, 0.02}) {
      const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 3.0));
      const HarmonicReference ref = harmonic_reference(M, eps, box);
      CHECK(std::abs(ref.lambda0_num / eps - 1.0) <= std::pow(eps, 0.2));
    }
  }
  SUBCASE("non-positive M rejected") {
    Matrix M(1, 1);
    M << -1.0;
    const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 3.0));
    CHECK_THROWS_AS(harmonic_reference(M, 0.1, box), InvalidInput);
  }
}

TEST_CASE("exponential_rate_fit") {
  SUBCASE("recovers its own model exactly") {
    std::vector<std::pair<double, double>> sweep;
    for (double eps : {0.2, 0.1, 0.05})
      sweep.emplace_back(eps, eps * 2.0 * std::exp(-0.7 / eps));
    const RateFit fit = exponential_rate_fit(sweep);
    CHECK(fit.E_fit == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(fit.A_fit == doctest::Approx(2.0).epsilon(1e-10));
    for (double r : fit.residuals) CHECK(std::abs(r) <= 1e-10);
  }
  SUBCASE("degenerate designs are rejected") {
    std::vector<std::pair<double, double>> same = {{0.1, 1e-4}, {0.1, 1.1e-4}, {0.1, 1e-4}};
    CHECK_THROWS_AS(exponential_rate_fit(same), DegenerateFit);
    std::vector<std::pair<double, double>> two = {{0.2, 1e-3}, {0.1, 1e-4}};
    CHECK_THROWS_AS(exponential_rate_fit(two), InvalidInput);
  }
  SUBCASE("double-well sweep lands near the EK constants") {
    const Potential p = builtin_potential("double_well_1d");
    std::vector<std::pair<double, double>> sweep;
    for (double eps : {0.2, 0.15, 0.1, 0.07, 0.05}) {
      const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
      const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 2);
      sweep.emplace_back(eps, spec.eigenvalues[1]);
    }
    const RateFit fit = exponential_rate_fit(sweep);
    CHECK(std::abs(fit.E_fit - 1.0) <= 0.05);
    CHECK(std::abs(fit.A_fit - 1.800632) <= 0.25 * 1.800632);
  }
}

TEST_CASE("exponential smallness: no super-exponential drift across the sweep") {
  const Potential p = builtin_potential("double_well_1d");
  for (double eps : {0.2, 0.15, 0.1, 0.07, 0.05}) {
    const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
    const SpectrumResult spec = lowest_eigenpairs(assemble_witten(p, box), 2);
    const double drift = std::log(spec.eigenvalues[1]) + 1.0 / eps - std::log(eps);
    CHECK(std::abs(drift) <= 2.0);  // = ln A + ln(1 + R(eps))
  }
}
