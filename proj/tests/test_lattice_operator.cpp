#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/dense_jacobi.hpp"
#include "support/test_helpers.hpp"
#include "wl/landscape.hpp"
#include "wl/operators.hpp"
#include "wl/rng.hpp"

using namespace wl;
using wl_test::close;
using wl_test::random_interior_vector;

namespace {

Vector pt1(double x) {
  Vector v(1);
  v << x;
  return v;
}

Potential constant_potential(double value) {
  return make_polynomial("const", 1, {{{0}, value}});
}

Potential free_2d() {
  return make_polynomial("free2", 2, {{{0, 0}, 0.0}});
}

double rho_weighted_dot(const LatticeBox& box, const Potential& p, double eps,
                        const Vector& u, const Vector& v) {
  double s = 0.0;
  for (Index i = 0; i < box.size(); ++i)
    s += u[i] * v[i] * std::exp(-p.eval(box.site(i)) / eps);
  return box.cell_measure() * s;
}

}  // namespace

TEST_CASE("build_box: site enumeration") {
  const LatticeBox a(1, 0.5, Vector::Zero(1), Vector::Constant(1, 1.0));
  REQUIRE(a.size() == 5);
  for (Index i = 0; i < 5; ++i)
    CHECK(a.site(i)[0] == doctest::Approx(-1.0 + 0.5 * static_cast<double>(i)));

  const LatticeBox b(2, 1.0, Vector::Zero(2), Vector::Constant(2, 1.0));
  CHECK(b.size() == 9);

  const LatticeBox c(1, 0.05, Vector::Zero(1), Vector::Constant(1, 2.5));
  CHECK(c.size() == 101);

  CHECK_THROWS_AS(LatticeBox(2, 1e-4, Vector::Zero(2), Vector::Constant(2, 200.0)),
                  TooLarge);
}

TEST_CASE("build_box: index maps and neighbors are consistent") {
  const LatticeBox box(2, 0.5, Vector::Zero(2), Vector::Constant(2, 1.0));
  for (Index i = 0; i < box.size(); ++i) {
    CHECK(box.index_of(box.offset(i)) == i);
    for (int axis = 0; axis < 2; ++axis) {
      const Index j = box.neighbor(i, axis, +1);
      if (j >= 0) {
        const Vector diff = box.site(j) - box.site(i);
        CHECK(diff[axis] == doctest::Approx(0.5));
        CHECK(diff[1 - axis] == doctest::Approx(0.0));
      } else {
        CHECK(box.is_boundary(i));
      }
    }
  }
}

TEST_CASE("potential_term: closed-form values") {
  const double eps = 0.1;
  SUBCASE("constant landscape gives V == 0") {
    const Potential p = constant_potential(3.7);
    for (double x : {-1.0, 0.0, 0.33})
      CHECK(potential_term(p, pt1(x), eps) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("linear landscape f = 2x gives 2(cosh 1 - 1)") {
    const Potential p = make_polynomial("lin", 1, {{{1}, 2.0}});
    const double expected = 2.0 * (std::cosh(1.0) - 1.0);
    CHECK(potential_term(p, pt1(0.4), 1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(1.0861612).epsilon(1e-7));
  }
  SUBCASE("quadratic well at the origin") {
    const Potential p = builtin_potential("single_well_1d");
    const double v = potential_term(p, pt1(0.0), 0.1);
    CHECK(v == doctest::Approx(2.0 * std::expm1(-0.025)).epsilon(1e-14));
    CHECK(v == doctest::Approx(-0.049380176).epsilon(1e-7));
  }
  SUBCASE("V >= -2d pointwise") {
    const Potential p = builtin_potential("double_well_1d");
    for (double eps2 : {0.2, 0.1, 0.05}) {
      const LatticeBox box(1, eps2, Vector::Zero(1), Vector::Constant(1, 2.5));
      for (Index i = 0; i < box.size(); ++i)
        CHECK(potential_term(p, box.site(i), eps2) >= -2.0);
    }
  }
  SUBCASE("overflow clamp is reported") {
    // steep linear slope: grad_eps f = 4000 -> exponent 2000 beyond the clamp
    const Potential p = make_polynomial("steep", 1, {{{1}, 4000.0}});
    Warnings w;
    potential_term(p, pt1(0.0), 1.0, &w);
    CHECK(!w.empty());
  }
  SUBCASE("ground-state weight underflow is flagged and inverted safely") {
    // f = 400 x^2 at eps = 0.1: f/2eps = 2000 x^2 underflows away from 0
    const Potential p = make_polynomial("steep_well", 1, {{{2}, 400.0}});
    const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 1.0));
    Warnings wf;
    const Vector w = ground_state_weight(p, box, 0.1, &wf);
    CHECK(!wf.empty());
    CHECK(w[0] == 0.0);  // x = -1
    Warnings wi;
    const Vector inv = ground_state_transform(p, box, 0.1, Vector::Ones(box.size()),
                                              GstDirection::Inverse, &wi);
    CHECK(!wi.empty());
    CHECK(inv[0] == 0.0);
  }
}

TEST_CASE("assemble_witten: free field is the Dirichlet path Laplacian") {
  // hand-built n = 10 path matches the closed form 2 - 2cos(k pi / 11)
  SparseOperator path;
  path.kind = OperatorKind::Witten;
  path.eps = 1.0;
  path.dim = 1;
  path.diag = Vector::Constant(10, 2.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i + 1 < 10; ++i) {
    trip.emplace_back(i, i + 1, -1.0);
    trip.emplace_back(i + 1, i, -1.0);
  }
  path.offdiag.resize(10, 10);
  path.offdiag.setFromTriplets(trip.begin(), trip.end());

  const Eigen::VectorXd evals = wl_test::jacobi_eigenvalues(Matrix(path.matrix()));
  for (int k = 1; k <= 10; ++k)
    CHECK(evals[k - 1] ==
          doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / 11.0)).epsilon(1e-12));
  CHECK(evals[0] == doctest::Approx(0.081014).epsilon(1e-5));

  // box-assembled free operator has the same structure
  const Potential zero = constant_potential(0.0);
  const LatticeBox box(1, 1.0, Vector::Zero(1), Vector::Constant(1, 4.0));
  const SparseOperator op = assemble_witten(zero, box);
  CHECK(op.diag.isApproxToConstant(2.0, 1e-15));
  const Eigen::VectorXd free_evals = wl_test::jacobi_eigenvalues(Matrix(op.matrix()));
  for (int k = 1; k <= 9; ++k)
    CHECK(free_evals[k - 1] ==
          doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / 10.0)).epsilon(1e-12));
}

TEST_CASE("assemble_witten: matvec on a site indicator reads off the stencil") {
  const Potential p = builtin_potential("double_well_aniso_2d", 2.0);
  const LatticeBox box(2, 0.25, Vector::Zero(2), Vector::Constant(2, 1.5));
  const SparseOperator op = assemble_witten(p, box);
  IntVector k(2);
  k << 1, -2;
  const Index i = box.index_of(k);
  REQUIRE(i >= 0);
  Vector e = Vector::Zero(box.size());
  e[i] = 1.0;
  const Vector col = op.apply(e);
  CHECK(col[i] ==
        doctest::Approx(potential_term(p, box.site(i), 0.25) + 4.0).epsilon(1e-14));
  for (int axis = 0; axis < 2; ++axis)
    for (int dir = -1; dir <= 1; dir += 2) {
      const Index j = box.neighbor(i, axis, dir);
      REQUIRE(j >= 0);
      CHECK(col[j] == doctest::Approx(-1.0));
    }
  CHECK(col.cwiseAbs().sum() == doctest::Approx(std::abs(col[i]) + 4.0));
}

TEST_CASE("assemble_witten: exp(-f/2eps) is annihilated up to boundary defects") {
  const Potential p = builtin_potential("double_well_1d");
  const double eps = 0.1;  // boundary f-value 27.56 exceeds min f by >> 40 eps
  const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
  const SparseOperator op = assemble_witten(p, box);
  Vector w = ground_state_weight(p, box, eps);
  // interior-supported truncation
  for (Index i = 0; i < box.size(); ++i)
    if (box.is_boundary(i)) w[i] = 0.0;
  const double q = lattice_dot(box, op.apply(w), w);
  CHECK(std::abs(q) <= 1e-12 * lattice_dot(box, w, w));
}

TEST_CASE("assemble_neg_generator: free rates reduce to the free Witten matrix") {
  const Potential zero = constant_potential(0.0);
  const LatticeBox box(1, 0.25, Vector::Zero(1), Vector::Constant(1, 1.0));
  const SparseOperator gen = assemble_neg_generator(zero, box);
  const SparseOperator wit = assemble_witten(zero, box);
  CHECK((gen.diag - wit.diag).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((Matrix(gen.offdiag) - Matrix(wit.offdiag)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
}

TEST_CASE("assemble_neg_generator: detailed balance on 1000 random edges") {
  const Potential p = builtin_potential("double_well_1d");
  const double eps = 0.1;
  const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
  CounterRng rng(42, 0);
  for (int t = 0; t < 1000; ++t) {
    const Index i = static_cast<Index>(rng.next_unit() * static_cast<double>(box.size()));
    const Index j = box.neighbor(std::min(i, box.size() - 1), 0, rng.next_unit() < 0.5 ? -1 : 1);
    if (j < 0) continue;
    const double fx = p.eval(box.site(std::min(i, box.size() - 1)));
    const double fy = p.eval(box.site(j));
    const double lhs = std::exp(-fx / eps) * std::exp(-(fy - fx) / (2.0 * eps)) / eps;
    const double rhs = std::exp(-fy / eps) * std::exp(-(fx - fy) / (2.0 * eps)) / eps;
    CHECK(close(lhs, rhs, 1e-12));
  }
}

TEST_CASE("assemble_neg_generator: interior row sums vanish (constants killed)") {
  const Potential p = builtin_potential("double_well_1d");
  const LatticeBox box(1, 0.2, Vector::Zero(1), Vector::Constant(1, 2.0));
  const SparseOperator gen = assemble_neg_generator(p, box);
  const Vector ones = Vector::Ones(box.size());
  const Vector out = gen.apply(ones);
  for (Index i = 0; i < box.size(); ++i) {
    if (box.is_boundary(i)) continue;
    CHECK(std::abs(out[i]) <= 1e-13 * gen.diag[i]);
  }
}

TEST_CASE("ground_state_transform: pointwise weight, inverse, and form identity") {
  const Potential p = builtin_potential("double_well_1d");
  const double eps = 0.1;
  const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));

  SUBCASE("psi == 1 maps to the weight itself") {
    const Vector ones = Vector::Ones(box.size());
    const Vector fwd = ground_state_transform(p, box, eps, ones, GstDirection::Forward);
    const Vector w = ground_state_weight(p, box, eps);
    CHECK((fwd - w).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }

  SUBCASE("forward then inverse is the identity where the weight is resolvable") {
    CounterRng rng(7, 0);
    Vector psi(box.size());
    for (Index i = 0; i < box.size(); ++i) psi[i] = 2.0 * rng.next_unit() - 1.0;
    const Vector round = ground_state_transform(
        p, box, eps, ground_state_transform(p, box, eps, psi, GstDirection::Forward),
        GstDirection::Inverse);
    for (Index i = 0; i < box.size(); ++i)
      CHECK(close(round[i], psi[i], 1e-13));
  }

  SUBCASE("rho-weighted generator form equals the flat Witten form") {
    const SparseOperator gen = assemble_neg_generator(p, box);
    const SparseOperator wit = assemble_witten(p, box);
    CounterRng rng(11, 0);
    for (int t = 0; t < 20; ++t) {
      Vector phi(box.size());
      for (Index i = 0; i < box.size(); ++i) phi[i] = 2.0 * rng.next_unit() - 1.0;
      const double lhs = rho_weighted_dot(box, p, eps, gen.apply(phi), phi);
      const Vector fwd = ground_state_transform(p, box, eps, phi, GstDirection::Forward);
      const double rhs = lattice_dot(box, wit.apply(fwd), fwd);
      CHECK(close(lhs, rhs, 1e-10));
    }
  }
}

TEST_CASE("unitary equivalence: spectra of H and symmetrized -eps L agree") {
  const Potential p = builtin_potential("double_well_1d");
  for (double eps : {0.2, 0.1}) {
    const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
    const SparseOperator wit = assemble_witten(p, box);
    const SparseOperator gen = assemble_neg_generator(p, box);
    const SparseMatrix sym = symmetrized_generator(gen, p, box);
    const Eigen::VectorXd ew = wl_test::jacobi_eigenvalues(Matrix(wit.matrix()));
    const Eigen::VectorXd eg = wl_test::jacobi_eigenvalues(Matrix(sym));
    REQUIRE(ew.size() == eg.size());
    for (Index i = 0; i < ew.size(); ++i)
      CHECK(close(ew[i], eg[i], 1e-10, 1e-12));
  }
}

TEST_CASE("weighted_gradient_form: quadratic-form identity") {
  const Potential p = builtin_potential("double_well_1d");
  const double eps = 0.1;
  const LatticeBox box(1, eps, Vector::Zero(1), Vector::Constant(1, 2.5));
  const SparseOperator op = assemble_witten(p, box);

  SUBCASE("interior-truncated ground state gives zero") {
    Vector w = ground_state_weight(p, box, eps);
    for (Index i = 0; i < box.size(); ++i)
      if (box.is_boundary(i)) w[i] = 0.0;
    CHECK(weighted_gradient_form(p, box, eps, w) <= 1e-12 * lattice_dot(box, w, w));
  }

  SUBCASE("random interior vectors match <H psi, psi>") {
    CounterRng rng(5, 0);
    for (int t = 0; t < 25; ++t) {
      const Vector psi = random_interior_vector(box, rng);
      const double lhs = weighted_gradient_form(p, box, eps, psi);
      const double rhs = lattice_dot(box, op.apply(psi), psi);
      CHECK(close(lhs, rhs, 1e-10));
      CHECK(lhs >= 0.0);
    }
  }

  SUBCASE("free 3-site path with psi = (0,1,0) gives 2") {
    const Potential zero = constant_potential(0.0);
    const LatticeBox small(1, 1.0, Vector::Zero(1), Vector::Constant(1, 1.0));
    Vector psi(3);
    psi << 0.0, 1.0, 0.0;
    CHECK(weighted_gradient_form(zero, small, 1.0, psi) == doctest::Approx(2.0));
    const SparseOperator free_op = assemble_witten(zero, small);
    CHECK(lattice_dot(small, free_op.apply(psi), psi) == doctest::Approx(2.0));
  }
}

TEST_CASE("operator symmetry and nonnegativity invariants") {
  const Potential p1 = builtin_potential("double_well_1d");
  const Potential p2 = builtin_potential("double_well_aniso_2d", 2.0);
  const LatticeBox box1(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
  const LatticeBox box2(2, 0.2, Vector::Zero(2), Vector::Constant(2, 2.5));
  struct Case {
    const LatticeBox* box;
    SparseOperator op;
  };
  std::vector<Case> cases;
  cases.push_back({&box1, assemble_witten(p1, box1)});
  cases.push_back({&box2, assemble_witten(p2, box2)});
  cases.push_back({&box1, assemble_neg_generator(p1, box1)});

  CounterRng rng(21, 0);
  for (auto& c : cases) {
    const double norm1 = c.op.max_abs_diag() + 2.0 * c.op.dim;  // cheap ||A||_1 bound
    for (int t = 0; t < 100; ++t) {
      Vector u(c.op.size()), v(c.op.size());
      for (Index i = 0; i < c.op.size(); ++i) {
        u[i] = 2.0 * rng.next_unit() - 1.0;
        v[i] = 2.0 * rng.next_unit() - 1.0;
      }
      if (c.op.kind == OperatorKind::Witten) {
        const double a = lattice_dot(*c.box, c.op.apply(u), v);
        const double b = lattice_dot(*c.box, u, c.op.apply(v));
        CHECK(std::abs(a - b) <= 1e-12 * norm1 * u.norm() * v.norm());
      }
    }
    if (c.op.kind == OperatorKind::Witten) {
      for (int t = 0; t < 100; ++t) {
        const Vector psi = random_interior_vector(*c.box, rng);
        const double rq = lattice_dot(*c.box, c.op.apply(psi), psi);
        CHECK(rq >= -1e-12 * norm1 * lattice_dot(*c.box, psi, psi));
      }
    }
  }
}

TEST_CASE("V_eps stays uniformly positive away from the critical points") {
  // Desk-scale eps sits in the asymptotic regime only once the gradient floor
  // clears the -(eps/2) Lap f dip near |x| ~ 1.2; at floor 0.5 positivity sets
  // in around eps <= 0.01. Calibrated on a 0.002-step scan of the region:
  // min V = 0.936 at floor 3.5 over eps in {0.2, 0.1, 0.05}.
  const Potential p = builtin_potential("double_well_1d");
  auto min_V = [&](double eps, double floor_a, double scan_step) {
    double best = std::numeric_limits<double>::infinity();
    Vector x(1);
    for (x[0] = -2.5; x[0] <= 2.5; x[0] += scan_step) {
      if (p.grad(x).norm() >= floor_a)
        best = std::min(best, potential_term(p, x, eps));
    }
    return best;
  };
  for (double eps : {0.2, 0.1, 0.05}) {
    CHECK(min_V(eps, 3.5, 0.002) >= 0.5);  // frozen: fine-grid min 0.936
    CHECK(min_V(eps, 3.5, eps) >= 0.5);    // lattice sites form a subset
  }
  for (double eps : {0.01, 0.005})
    CHECK(min_V(eps, 0.5, 0.002) > 0.0);
}

TEST_CASE("V_eps local behavior near critical points") {
  const Potential p = builtin_potential("double_well_1d");
  const double C = 60.0;  // frozen calibration: measured max ratio 41.2
  for (double z : {0.0, 1.0, -1.0}) {
    const Matrix H = p.hess(pt1(z));
    const double trace = H(0, 0);
    for (double eps : {0.2, 0.1, 0.05}) {
      for (double dx = -0.3; dx <= 0.3; dx += eps / 2.0) {
        const double x = z + dx;
        const double U = 0.25 * H(0, 0) * H(0, 0) * dx * dx;
        const double lhs =
            std::abs(potential_term(p, pt1(x), eps) - U + 0.5 * eps * trace);
        const double bound =
            C * (std::abs(dx * dx * dx) + eps * std::abs(dx) + eps * eps);
        CHECK(lhs <= bound);
      }
    }
  }
}

TEST_CASE("IMS defect") {
  const Potential p = builtin_potential("double_well_1d");
  const LatticeBox box(1, 0.1, Vector::Zero(1), Vector::Constant(1, 2.5));
  CounterRng rng(9, 0);
  Vector psi(box.size());
  for (Index i = 0; i < box.size(); ++i) psi[i] = 2.0 * rng.next_unit() - 1.0;

  SUBCASE("trivial partition has zero defect") {
    QuadraticPartition triv;
    triv.members.push_back([](const Vector&) { return 1.0; });
    triv.hess_sup = 0.0;
    validate_partition(box, triv);
    CHECK(ims_defect(box, triv, psi) == doctest::Approx(0.0));
  }

  SUBCASE("two-piece partition obeys the Hessian-controlled bound") {
    const QuadraticPartition part = two_piece_partition_1d(-0.5, 0.5);
    validate_partition(box, part);
    const double defect = ims_defect(box, part, psi);
    const double norm = lattice_norm(box, psi);
    CHECK(defect <= 2.0 * part.hess_sup * norm);
    CHECK(defect > 0.0);
  }

  SUBCASE("zero vector gives zero defect") {
    const QuadraticPartition part = two_piece_partition_1d(-0.5, 0.5);
    CHECK(ims_defect(box, part, Vector::Zero(box.size())) == doctest::Approx(0.0));
  }
}

TEST_CASE("coordinate dump is sorted and 17-digit") {
  const Potential zero = constant_potential(0.0);
  const LatticeBox box(1, 1.0, Vector::Zero(1), Vector::Constant(1, 1.0));
  const SparseOperator op = assemble_witten(zero, box);
  std::ostringstream os;
  op.dump_coordinate(os);
  const std::string text = os.str();
  CHECK(text == "0 0 2\n0 1 -1\n1 0 -1\n1 1 2\n1 2 -1\n2 1 -1\n2 2 2\n");
}
