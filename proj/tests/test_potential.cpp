#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "wl/errors.hpp"
#include "wl/potential.hpp"
#include "wl/rng.hpp"

using namespace wl;

namespace {
Vector pt1(double x) {
  Vector v(1);
  v << x;
  return v;
}
Vector pt2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}
}  // namespace

TEST_CASE("builtin potentials evaluate correctly") {
  const Potential dw = builtin_potential("double_well_1d");
  CHECK(dw.eval(pt1(0.0)) == doctest::Approx(1.0));
  CHECK(dw.eval(pt1(1.0)) == doctest::Approx(0.0));
  CHECK(dw.eval(pt1(-1.0)) == doctest::Approx(0.0));
  CHECK(dw.grad(pt1(0.5))[0] == doctest::Approx(4 * 0.125 - 4 * 0.5));
  CHECK(dw.hess(pt1(1.0))(0, 0) == doctest::Approx(8.0));

  const Potential aniso = builtin_potential("double_well_aniso_2d", 2.0);
  CHECK(aniso.eval(pt2(1.0, 0.0)) == doctest::Approx(0.0));
  CHECK(aniso.eval(pt2(0.0, 1.0)) == doctest::Approx(3.0));
  CHECK(aniso.hess(pt2(0.0, 0.0))(0, 0) == doctest::Approx(-4.0));
  CHECK(aniso.hess(pt2(0.0, 0.0))(1, 1) == doctest::Approx(4.0));

  // 3 x^2 (x^2-1)^2: minima at 0, +-1, saddles at +-1/sqrt(3)
  const Potential tw = builtin_potential("triple_well_1d");
  CHECK(tw.eval(pt1(0.0)) == doctest::Approx(0.0));
  CHECK(tw.eval(pt1(1.0)) == doctest::Approx(0.0));
  const double s = 1.0 / std::sqrt(3.0);
  CHECK(tw.grad(pt1(s))[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tw.eval(pt1(s)) == doctest::Approx(4.0 / 9.0));
  CHECK(tw.hess(pt1(s))(0, 0) == doctest::Approx(-8.0));

  CHECK_THROWS_AS(builtin_potential("no_such_potential"), ConfigError);
}

TEST_CASE("derivatives are finite-difference consistent at 100 random points") {
  for (const auto& name : builtin_potential_names()) {
    const Potential p = builtin_potential(name);
    const auto check = check_derivatives(p, 2.0, 100);
    CHECK(check.grad_defect <= 1e-6);
    CHECK(check.hess_defect <= 1e-6);
  }
}

TEST_CASE("H1F box check: gradient stays away from zero on the boundary") {
  const Potential p = builtin_potential("double_well_1d");
  const double g = min_boundary_gradient(p, Vector::Zero(1), Vector::Constant(1, 2.5));
  CHECK(g > 1.0);  // f'(2.5) = 52.5
  const Potential q = builtin_potential("double_well_aniso_2d");
  CHECK(min_boundary_gradient(q, Vector::Zero(2), Vector::Constant(2, 2.5)) > 0.5);
}

TEST_CASE("potential JSON round trip") {
  const Potential p = builtin_potential("triple_well_1d");
  const nlohmann::json j = potential_to_json(p);
  const Potential q = potential_from_json(j);
  for (double x : {-1.3, -0.4, 0.0, 0.7, 2.1}) {
    CHECK(q.eval(pt1(x)) == doctest::Approx(p.eval(pt1(x))).epsilon(1e-15));
    CHECK(q.grad(pt1(x))[0] == doctest::Approx(p.grad(pt1(x))[0]).epsilon(1e-15));
  }
}

TEST_CASE("registry file matches the built-in tables") {
  // data/potentials.json ships the same coefficient tables the registry embeds
  std::ifstream in("../../data/potentials.json");
  if (!in.good()) in = std::ifstream("data/potentials.json");
  if (!in.good()) return;  // running outside the source tree
  nlohmann::json registry;
  in >> registry;
  for (const auto& entry : registry["potentials"]) {
    const Potential from_file = potential_from_json(entry);
    const double c = entry.contains("params") ? entry["params"]["c"].get<double>() : 2.0;
    const Potential builtin = builtin_potential(entry["name"].get<std::string>(), c);
    CounterRng rng(17, 0);
    for (int t = 0; t < 32; ++t) {
      Vector x(builtin.dim);
      for (int i = 0; i < builtin.dim; ++i) x[i] = 4.0 * rng.next_unit() - 2.0;
      CHECK(from_file.eval(x) == doctest::Approx(builtin.eval(x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("polynomial potential from explicit multi-index table") {
  // f(x, y) = x^2 y + 3 y^2
  const nlohmann::json j = {{"kind", "polynomial"},
                            {"name", "mixed"},
                            {"dim", 2},
                            {"coeffs", {{{2, 1}, 1.0}, {{0, 2}, 3.0}}}};
  const Potential p = potential_from_json(j);
  CHECK(p.eval(pt2(2.0, 1.5)) == doctest::Approx(4.0 * 1.5 + 3.0 * 2.25));
  CHECK(p.grad(pt2(2.0, 1.5))[0] == doctest::Approx(2.0 * 2.0 * 1.5));
  CHECK(p.grad(pt2(2.0, 1.5))[1] == doctest::Approx(4.0 + 9.0));
  CHECK(p.hess(pt2(2.0, 1.5))(0, 1) == doctest::Approx(4.0));
  CHECK(p.hess(pt2(2.0, 1.5))(1, 1) == doctest::Approx(6.0));
}
