#include "wl/laplace.hpp"

#include <cmath>

#include "wl/rng.hpp"

namespace wl {

namespace {

// Calibrated once on d=1, Q=1 (moments m <= 2) and frozen; the acceptance
// checks guard with max(bound, 1e-12 * value) so looseness is harmless.
constexpr double kCorrectionPrefactor = 10.0;

double lambda_min(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  return es.eigenvalues().minCoeff();
}

/// Enumerates lattice sites eps*k within the ball |x - x0| <= radius and sums
/// weight(x).
struct BallSum {
  double total = 0.0;
};

template <typename Weight>
BallSum sum_over_ball(int d, double eps, const Vector& x0, double radius, Weight weight) {
  IntVector kmin(d), kmax(d), k(d);
  for (int i = 0; i < d; ++i) {
    kmin[i] = static_cast<int>(std::ceil((x0[i] - radius) / eps - 1e-12));
    kmax[i] = static_cast<int>(std::floor((x0[i] + radius) / eps + 1e-12));
    k[i] = kmin[i];
  }
  BallSum out;
  Vector x(d);
  while (true) {
    for (int i = 0; i < d; ++i) x[i] = eps * k[i];
    const double r = (x - x0).norm();
    if (r <= radius) out.total += weight(x, r);
    int axis = d - 1;
    while (axis >= 0) {
      if (++k[axis] <= kmax[axis]) break;
      k[axis] = kmin[axis];
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

/// Certifies that the mass beyond the ball is below 1e-16 of the head: rings
/// of width eps outside the radius are bounded through q(y) >= lambda_min
/// |y|^2 / 2 and a crude count of lattice sites per ring.
void certify_tail(const BallSum& sums, const Matrix& Q, double radius, double eps,
                  int m) {
  if (sums.total <= 0.0)
    throw RadiusTooSmall("gaussian_sum_direct: no lattice mass inside the ball");
  const int d = static_cast<int>(Q.rows());
  const double lmin = lambda_min(Q);
  double tail = 0.0;
  for (int j = 0; j < 2000; ++j) {
    const double r = radius + j * eps;
    const double w = std::pow(r + eps, 2 * m) * std::exp(-0.5 * lmin * r * r / eps);
    double count = 2.0 * d;
    for (int a = 0; a < d - 1; ++a) count *= 2.0 * (r / eps + 2.0);
    tail += count * w;
    if (count * w < 1e-280) break;
    if (j == 1999)
      throw RadiusTooSmall("gaussian_sum_direct: tail series did not close");
  }
  if (tail > 1e-16 * sums.total)
    throw RadiusTooSmall("gaussian_sum_direct: tail beyond radius not below 1e-16");
}

}  // namespace

void GaussianSumSpec::validate() const {
  if (Q.rows() != Q.cols() || Q.rows() < 1)
    throw InvalidInput("GaussianSumSpec: Q must be square");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * Q.cwiseAbs().maxCoeff())
    throw InvalidInput("GaussianSumSpec: Q must be symmetric");
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("GaussianSumSpec: Q must be positive definite");
  if (x0.size() != Q.rows()) throw InvalidInput("GaussianSumSpec: x0 length mismatch");
  if (m < 0) throw InvalidInput("GaussianSumSpec: m must be nonnegative");
  if (eps <= 0.0) throw InvalidInput("GaussianSumSpec: eps must be positive");
}

double default_sum_radius(const GaussianSumSpec& spec) {
  return 12.0 * std::sqrt(spec.eps / lambda_min(spec.Q));
}

double gaussian_sum_direct(const GaussianSumSpec& spec, double radius) {
  spec.validate();
  if (radius <= 0.0) throw InvalidInput("gaussian_sum_direct: radius must be positive");
  const int d = spec.dim();
  const auto sums = sum_over_ball(
      d, spec.eps, spec.x0, radius, [&](const Vector& x, double r) {
        const Vector y = x - spec.x0;
        const double q = 0.5 * y.dot(spec.Q * y);
        return std::pow(r, 2 * spec.m) * std::exp(-q / spec.eps);
      });
  certify_tail(sums, spec.Q, radius, spec.eps, spec.m);
  return std::pow(spec.eps, 0.5 * d) * sums.total;
}

double gaussian_moment_integral(const Matrix& Q, int m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  const Vector q = es.eigenvalues();
  const int d = static_cast<int>(q.size());
  const double base = std::sqrt(std::pow(2.0 * M_PI, d) / q.prod());
  if (m == 0) return base;

  // sum over compositions a of m into d parts of
  //   m!/prod(a_i!) * prod (2a_i - 1)!! / q_i^{a_i}
  auto dfact = [](int n) {  // (2n-1)!!
    double r = 1.0;
    for (int t = 2 * n - 1; t >= 1; t -= 2) r *= t;
    return r;
  };
  auto fact = [](int n) {
    double r = 1.0;
    for (int t = 2; t <= n; ++t) r *= t;
    return r;
  };
  double total = 0.0;
  std::vector<int> a(d, 0);
  std::function<void(int, int)> rec = [&](int axis, int rest) {
    if (axis == d - 1) {
      a[axis] = rest;
      double term = fact(m);
      for (int i = 0; i < d; ++i)
        term *= dfact(a[i]) / (fact(a[i]) * std::pow(q[i], a[i]));
      total += term;
      return;
    }
    for (int v = 0; v <= rest; ++v) {
      a[axis] = v;
      rec(axis + 1, rest - v);
    }
  };
  rec(0, m);
  return base * total;
}

PoissonLeading gaussian_sum_poisson(const GaussianSumSpec& spec) {
  spec.validate();
  PoissonLeading out;
  out.leading = std::pow(spec.eps, spec.m) * gaussian_moment_integral(spec.Q, spec.m);
  const double gamma = 0.25 * lambda_min(spec.Q);
  out.correction_bound = kCorrectionPrefactor * std::exp(-gamma / spec.eps);
  return out;
}

OddMomentReport odd_moment_bound(const GaussianSumSpec& spec, int m_odd) {
  spec.validate();
  if (m_odd < 1 || m_odd % 2 == 0)
    throw InvalidInput("odd_moment_bound: exponent must be odd and positive");
  const int d = spec.dim();
  const double radius = default_sum_radius(spec) * (1.0 + 0.5 * m_odd);
  const auto value_sums = sum_over_ball(
      d, spec.eps, spec.x0, radius, [&](const Vector& x, double r) {
        const Vector y = x - spec.x0;
        return std::pow(r, m_odd) * std::exp(-0.5 * y.dot(spec.Q * y) / spec.eps);
      });
  OddMomentReport out;
  out.value = std::pow(spec.eps, 0.5 * d) * value_sums.total;

  GaussianSumSpec even = spec;
  even.m = m_odd;  // |.|^{2 m_odd}
  const double s_2m = gaussian_sum_direct(even, radius);
  even.m = 0;
  const double s_0 = gaussian_sum_direct(even, radius);
  out.bound = std::sqrt(s_2m) * std::sqrt(s_0);
  return out;
}

void PhaseSpec::validate() const {
  if (x0.size() < 1) throw InvalidInput("PhaseSpec: empty center");
  if (delta <= 0.0) throw InvalidInput("PhaseSpec: delta must be positive");
  if (smoothness_k != 3 && smoothness_k != 4)
    throw InvalidInput("PhaseSpec: smoothness_k must be 3 or 4");
  if (std::abs(phi(x0)) > 1e-12)
    throw InvalidInput("PhaseSpec: phi(x0) must vanish");
  Eigen::LLT<Matrix> llt(hess0);
  if (hess0.rows() != x0.size() || llt.info() != Eigen::Success)
    throw InvalidInput("PhaseSpec: Hess phi(x0) must be positive definite");
  CounterRng rng(3, 0);
  const int d = dim();
  for (int s = 0; s < 256; ++s) {
    Vector u(d);
    for (int i = 0; i < d; ++i) u[i] = 2.0 * rng.next_unit() - 1.0;
    if (u.norm() < 1e-8) continue;
    u.normalize();
    const double r = delta * (0.2 + 0.8 * rng.next_unit());
    if (phi(x0 + r * u) <= 0.0)
      throw PhasePositivityViolated("PhaseSpec: phi <= 0 on the sampled ball shell");
  }
}

LaplaceGeneralReport laplace_sum_general(const PhaseSpec& phase, int m, double eps) {
  phase.validate();
  if (m < 0) throw InvalidInput("laplace_sum_general: m must be nonnegative");
  if (eps <= 0.0) throw InvalidInput("laplace_sum_general: eps must be positive");
  const int d = phase.dim();

  const auto sums = sum_over_ball(
      d, eps, phase.x0, phase.delta, [&](const Vector& x, double r) {
        const double value = phase.phi(x);
        if (value <= 0.0 && r > 0.25 * eps)
          throw PhasePositivityViolated(
              "laplace_sum_general: phi <= 0 at a lattice site away from x0");
        return std::pow(r, 2 * m) * std::exp(-value / eps);
      });

  LaplaceGeneralReport out;
  out.value = std::pow(eps, 0.5 * d) * sums.total;
  out.leading = std::pow(eps, m) * gaussian_moment_integral(phase.hess0, m);
  out.rel_error = out.value / out.leading - 1.0;
  return out;
}

}  // namespace wl
