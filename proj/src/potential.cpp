#include "wl/potential.hpp"

#include <cmath>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "wl/errors.hpp"
#include "wl/rng.hpp"

namespace wl {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double term_eval(const PolyTerm& t, const Vector& x) {
  double r = t.coeff;
  for (int i = 0; i < static_cast<int>(t.expo.size()); ++i) r *= ipow(x[i], t.expo[i]);
  return r;
}

}  // namespace

Potential make_polynomial(const std::string& name, int dim, std::vector<PolyTerm> terms) {
  if (dim <= 0) throw InvalidInput("polynomial potential: dim must be positive");
  for (const auto& t : terms) {
    if (static_cast<int>(t.expo.size()) != dim)
      throw InvalidInput("polynomial potential: multi-index length != dim");
    for (int e : t.expo)
      if (e < 0) throw InvalidInput("polynomial potential: negative exponent");
  }

  Potential p;
  p.name = name;
  p.dim = dim;
  p.provenance_kind = "polynomial";
  p.terms = terms;

  p.eval = [terms](const Vector& x) {
    double s = 0.0;
    for (const auto& t : terms) s += term_eval(t, x);
    return s;
  };
  p.grad = [terms, dim](const Vector& x) {
    Vector g = Vector::Zero(dim);
    for (const auto& t : terms) {
      for (int j = 0; j < dim; ++j) {
        if (t.expo[j] == 0) continue;
        double v = t.coeff * t.expo[j] * ipow(x[j], t.expo[j] - 1);
        for (int i = 0; i < dim; ++i)
          if (i != j) v *= ipow(x[i], t.expo[i]);
        g[j] += v;
      }
    }
    return g;
  };
  p.hess = [terms, dim](const Vector& x) {
    Matrix h = Matrix::Zero(dim, dim);
    for (const auto& t : terms) {
      for (int j = 0; j < dim; ++j) {
        if (t.expo[j] == 0) continue;
        for (int k = j; k < dim; ++k) {
          double v;
          if (k == j) {
            if (t.expo[j] < 2) continue;
            v = t.coeff * t.expo[j] * (t.expo[j] - 1) * ipow(x[j], t.expo[j] - 2);
            for (int i = 0; i < dim; ++i)
              if (i != j) v *= ipow(x[i], t.expo[i]);
          } else {
            if (t.expo[k] == 0) continue;
            v = t.coeff * t.expo[j] * t.expo[k] * ipow(x[j], t.expo[j] - 1) *
                ipow(x[k], t.expo[k] - 1);
            for (int i = 0; i < dim; ++i)
              if (i != j && i != k) v *= ipow(x[i], t.expo[i]);
          }
          h(j, k) += v;
          if (k != j) h(k, j) += v;
        }
      }
    }
    return h;
  };
  return p;
}

Potential builtin_potential(const std::string& name, double param) {
  Potential p;
  if (name == "double_well_1d") {
    // (x^2 - 1)^2
    p = make_polynomial(name, 1, {{{4}, 1.0}, {{2}, -2.0}, {{0}, 1.0}});
  } else if (name == "single_well_1d") {
    // x^2 / 2
    p = make_polynomial(name, 1, {{{2}, 0.5}});
  } else if (name == "triple_well_1d") {
    // 3 x^2 (x^2 - 1)^2: minima at 0, +-1 (all at level 0), saddles at +-1/sqrt(3).
    p = make_polynomial(name, 1, {{{6}, 3.0}, {{4}, -6.0}, {{2}, 3.0}});
  } else if (name == "double_well_aniso_2d") {
    // (x^2 - 1)^2 + c y^2
    p = make_polynomial(name, 2,
                        {{{4, 0}, 1.0}, {{2, 0}, -2.0}, {{0, 0}, 1.0}, {{0, 2}, param}});
  } else {
    throw ConfigError("unknown builtin potential: " + name);
  }
  p.provenance_kind = "builtin";
  return p;
}

std::vector<std::string> builtin_potential_names() {
  return {"double_well_1d", "double_well_aniso_2d", "triple_well_1d", "single_well_1d"};
}

Potential potential_from_json(const nlohmann::json& j) {
  if (!j.contains("kind")) throw ConfigError("potential: missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "builtin") {
    const std::string name = j.at("name").get<std::string>();
    double param = 2.0;
    if (j.contains("params") && j["params"].contains("c"))
      param = j["params"]["c"].get<double>();
    return builtin_potential(name, param);
  }
  if (kind == "polynomial") {
    const int dim = j.at("dim").get<int>();
    std::vector<PolyTerm> terms;
    for (const auto& entry : j.at("coeffs")) {
      PolyTerm t;
      t.expo = entry.at(0).get<std::vector<int>>();
      t.coeff = entry.at(1).get<double>();
      terms.push_back(std::move(t));
    }
    return make_polynomial(j.value("name", std::string("polynomial")), dim, terms);
  }
  throw ConfigError("potential: kind must be 'builtin' or 'polynomial'");
}

nlohmann::json potential_to_json(const Potential& p) {
  nlohmann::json j;
  j["name"] = p.name;
  j["dim"] = p.dim;
  j["kind"] = p.provenance_kind;
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& t : p.terms) coeffs.push_back({t.expo, t.coeff});
  j["coeffs"] = coeffs;
  return j;
}

DerivativeCheck check_derivatives(const Potential& p, double range, int n_points,
                                  std::uint64_t seed) {
  const double h = 1e-5;
  CounterRng rng(seed, 0);
  DerivativeCheck out;
  for (int n = 0; n < n_points; ++n) {
    Vector x(p.dim);
    for (int i = 0; i < p.dim; ++i) x[i] = range * (2.0 * rng.next_unit() - 1.0);
    const Vector g = p.grad(x);
    const Matrix H = p.hess(x);
    const double gscale = 1.0 + g.norm();
    for (int j = 0; j < p.dim; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (p.eval(xp) - p.eval(xm)) / (2.0 * h);
      out.grad_defect = std::max(out.grad_defect, std::abs(g[j] - fd) / gscale);
      const Vector gfd = (p.grad(xp) - p.grad(xm)) / (2.0 * h);
      const double hscale = 1.0 + H.col(j).norm();
      out.hess_defect =
          std::max(out.hess_defect, (H.col(j) - gfd).cwiseAbs().maxCoeff() / hscale);
    }
  }
  return out;
}

double min_boundary_gradient(const Potential& p, const Vector& center,
                             const Vector& half_widths, int samples_per_axis) {
  double best = std::numeric_limits<double>::infinity();
  CounterRng rng(11, 0);
  const int d = p.dim;
  for (int axis = 0; axis < d; ++axis) {
    for (int side = -1; side <= 1; side += 2) {
      for (int s = 0; s < samples_per_axis; ++s) {
        Vector x(d);
        for (int i = 0; i < d; ++i)
          x[i] = center[i] + half_widths[i] * (2.0 * rng.next_unit() - 1.0);
        x[axis] = center[axis] + side * half_widths[axis];
        best = std::min(best, p.grad(x).norm());
      }
    }
  }
  return best;
}

}  // namespace wl
