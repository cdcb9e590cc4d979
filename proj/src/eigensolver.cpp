#include "wl/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "wl/errors.hpp"
#include "wl/rng.hpp"

namespace wl {

namespace {

void orthogonalize(Vector& w, const Matrix& basis, Index cols) {
  if (cols == 0) return;
  const auto v = basis.leftCols(cols);
  w -= v * (v.transpose() * w);
  w -= v * (v.transpose() * w);  // second pass keeps loss of orthogonality at eps level
}

void orthogonalize(Vector& w, const std::vector<Vector>& vs) {
  for (int pass = 0; pass < 2 && !vs.empty(); ++pass)
    for (const auto& v : vs) w -= v * v.dot(w);
}

}  // namespace

SpectrumResult lowest_eigenpairs(const SparseOperator& op, int k, double tol,
                                 const std::vector<Vector>& deflate,
                                 std::uint64_t seed) {
  const Index n = op.size();
  const int n_deflate = static_cast<int>(deflate.size());
  if (k < 1 || k > n - n_deflate)
    throw InvalidInput("lowest_eigenpairs: k out of range");
  if (tol <= 0.0) throw InvalidInput("lowest_eigenpairs: tol must be positive");
  for (const auto& v : deflate)
    if (v.size() != n) throw ShapeMismatch("lowest_eigenpairs: deflation vector length");

  std::vector<Vector> defl;
  for (auto v : deflate) {
    orthogonalize(v, defl);
    const double nv = v.norm();
    if (nv > 1e-12) defl.push_back(v / nv);
  }

  // A + delta I stays SPD with a pivot floor while keeping the inverted
  // spectrum well scaled; the true ground state is recovered as 1/theta - delta.
  double delta = 1e-8 * std::max(op.eps, 1e-8);
  SparseMatrix a = op.matrix();
  SparseMatrix ident(n, n);
  ident.setIdentity();
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  for (int attempt = 0;; ++attempt) {
    solver.compute(a + delta * ident);
    if (solver.info() == Eigen::Success && solver.vectorD().minCoeff() > 0.0) break;
    if (attempt >= 6)
      throw NoConvergence("lowest_eigenpairs: LDLT factorization failed");
    delta *= 100.0;
  }

  const int max_dim =
      static_cast<int>(std::min<Index>(n - n_deflate, std::max(8 * k + 40, 120)));
  Matrix basis(n, max_dim + 1);
  std::vector<double> alpha, beta;

  CounterRng rng(seed, 0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = 2.0 * rng.next_unit() - 1.0;
  orthogonalize(v, defl);
  v.normalize();
  basis.col(0) = v;

  Matrix ritz_vectors;
  std::vector<double> theta, inv_resid;
  int m = 0;
  bool converged = false;

  auto extract = [&](int dim) {
    Matrix t = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < dim) {
        t(i, i + 1) = beta[i];
        t(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    // Largest k Ritz values of the inverted operator = smallest of A.
    theta.assign(k, 0.0);
    inv_resid.assign(k, 0.0);
    Matrix s(dim, k);
    const double beta_last =
        (static_cast<int>(beta.size()) >= dim) ? beta[dim - 1] : 0.0;
    for (int j = 0; j < k; ++j) {
      const int col = dim - 1 - j;
      theta[j] = es.eigenvalues()[col];
      s.col(j) = es.eigenvectors().col(col);
      inv_resid[j] = std::abs(beta_last * s(dim - 1, j)) / std::max(std::abs(theta[j]), 1e-300);
    }
    ritz_vectors = basis.leftCols(dim) * s;
    return *std::max_element(inv_resid.begin(), inv_resid.end());
  };

  while (m < max_dim) {
    Vector w = solver.solve(basis.col(m));
    orthogonalize(w, defl);
    const double a_m = basis.col(m).dot(w);
    alpha.push_back(a_m);
    w -= a_m * basis.col(m);
    if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
    orthogonalize(w, basis, m + 1);
    const double b_m = w.norm();
    ++m;
    if (b_m < 1e-14) {
      // Invariant subspace: either enough directions or restart with fresh noise.
      beta.push_back(0.0);
      if (m >= k && extract(m) <= tol) {
        converged = true;
        break;
      }
      if (static_cast<Index>(m) >= n - n_deflate) break;
      Vector fresh(n);
      for (Index i = 0; i < n; ++i) fresh[i] = 2.0 * rng.next_unit() - 1.0;
      orthogonalize(fresh, defl);
      orthogonalize(fresh, basis, m);
      const double nf = fresh.norm();
      if (nf < 1e-12) break;  // space exhausted
      basis.col(m) = fresh / nf;
      continue;
    }
    beta.push_back(b_m);
    basis.col(m) = w / b_m;

    if (m >= k && (m % 8 == 0 || m == max_dim)) {
      if (extract(m) <= tol) {
        converged = true;
        break;
      }
    }
  }

  if (m < k)
    throw NoConvergence("lowest_eigenpairs: Krylov space exhausted before k directions");
  if (!converged && extract(m) > tol) {
    int n_ok = 0;
    for (double r : inv_resid)
      if (r <= tol) ++n_ok;
    throw NoConvergence("lowest_eigenpairs: " + std::to_string(n_ok) + " of " +
                        std::to_string(k) + " pairs converged after " +
                        std::to_string(m) + " iterations");
  }

  SpectrumResult result;
  result.iterations = m;
  result.eps = op.eps;
  result.tol = tol;
  result.shift = delta;
  result.eigenvectors.resize(n, k);
  result.eigenvalues.resize(k);
  result.residuals.resize(k);
  result.inverse_residuals.resize(k);

  // One inverse-iteration pass per Ritz vector scrubs the contamination the
  // Lanczos basis picks up in the large-eigenvalue subspace, then the A-side
  // Rayleigh quotient resolves mid-spectrum pairs at their own scale. The
  // inverted-map value 1/theta - delta stays sharper for exponentially small
  // eigenvalues, where A-side arithmetic bottoms out near eps_mach.
  const double theta_max = std::abs(theta[0]);
  std::vector<double> lambda_inv(k);
  for (int j = 0; j < k; ++j) lambda_inv[j] = 1.0 / theta[j] - delta;
  for (int j = 0; j < k; ++j) {
    Vector z = solver.solve(ritz_vectors.col(j));
    orthogonalize(z, defl);
    for (int i = 0; i < j; ++i) {
      const auto zi = result.eigenvectors.col(i);
      z -= zi * zi.dot(z);
    }
    z.normalize();
    result.eigenvectors.col(j) = z;

    const Vector az = op.apply(z);
    const double rq = z.dot(az);
    const double a_residual = (az - rq * z).norm();

    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i)
      if (i != j) gap = std::min(gap, std::abs(lambda_inv[i] - rq));
    gap = std::max(gap, 0.1 * std::abs(rq) + 1e-300);

    const Vector zabs = z.cwiseAbs();
    const double abs_scale =
        zabs.dot(op.diag.cwiseAbs().cwiseProduct(zabs) + op.offdiag.cwiseAbs() * zabs);
    const double err_rq = 2e-16 * abs_scale + a_residual * a_residual / gap;
    const double err_inv = inv_resid[j] * (std::abs(lambda_inv[j]) + delta) +
                           2e-15 * theta_max / (theta[j] * theta[j]);

    const double lambda = (err_inv < err_rq) ? lambda_inv[j] : rq;
    result.eigenvalues[j] = lambda;
    result.residuals[j] = (az - lambda * z).norm();
    result.inverse_residuals[j] = inv_resid[j];
  }

  // theta descending <=> lambda ascending already, but enforce exact ordering.
  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](int a_i, int b_i) {
    return result.eigenvalues[a_i] < result.eigenvalues[b_i];
  });
  SpectrumResult sorted = result;
  for (int i = 0; i < k; ++i) {
    sorted.eigenvalues[i] = result.eigenvalues[perm[i]];
    sorted.residuals[i] = result.residuals[perm[i]];
    sorted.inverse_residuals[i] = result.inverse_residuals[perm[i]];
    sorted.eigenvectors.col(i) = result.eigenvectors.col(perm[i]);
  }
  return sorted;
}

double small_cluster_threshold(const std::vector<CriticalPoint>& minima, double eps) {
  if (minima.empty()) throw InvalidInput("small_cluster_threshold: no minima");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : minima) {
    if (m.index != 0) throw InvalidInput("small_cluster_threshold: non-minimum passed");
    double s = 0.0;
    for (Index j = 0; j < m.hessian_eigenvalues.size(); ++j)
      s += std::sqrt(0.5 * m.hessian_eigenvalues[j]);
    best = std::min(best, s);
  }
  return 0.5 * eps * best;
}

GapReport count_small_eigenvalues(const SpectrumResult& spectrum, double threshold,
                                  double predicted_gap) {
  const auto& ev = spectrum.eigenvalues;
  if (ev.size() < 2)
    throw InvalidInput("count_small_eigenvalues: need at least two eigenvalues");
  GapReport report;
  report.threshold = threshold;
  for (double lambda : ev) {
    if (std::abs(lambda - threshold) <= 0.1 * threshold)
      throw NotSeparated("count_small_eigenvalues: eigenvalue " + std::to_string(lambda) +
                         " within 10% of threshold " + std::to_string(threshold));
    if (lambda <= threshold) ++report.n_small;
  }
  if (report.n_small == 0 || report.n_small >= static_cast<int>(ev.size()))
    throw NotSeparated("count_small_eigenvalues: split not visible among computed pairs");
  report.lambda_small = ev[report.n_small - 1];
  report.lambda_next = ev[report.n_small];
  report.separated = true;
  if (predicted_gap > 0.0 && ev.size() >= 2)
    report.ratio_to_prediction = ev[1] / predicted_gap;
  return report;
}

HarmonicReference harmonic_reference(const Matrix& M, double eps, const LatticeBox& box,
                                     double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw InvalidInput("harmonic_reference: M must be positive definite");
  HarmonicReference ref;
  double min_sqrt = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double s = std::sqrt(es.eigenvalues()[j]);
    ref.lambda0_pred += s;
    min_sqrt = std::min(min_sqrt, s);
  }
  ref.lambda1_pred = ref.lambda0_pred + 2.0 * min_sqrt;

  const Vector c = box.center();
  auto U = [&](const Vector& x) {
    const Vector y = x - c;
    return y.dot(M * y);
  };
  const SparseOperator op = assemble_schrodinger(box, U, eps);
  const SpectrumResult spec = lowest_eigenpairs(op, 2, tol);
  ref.lambda0_num = spec.eigenvalues[0];
  ref.lambda1_num = spec.eigenvalues[1];
  return ref;
}

RateFit exponential_rate_fit(const std::vector<std::pair<double, double>>& sweep) {
  if (sweep.size() < 3)
    throw InvalidInput("exponential_rate_fit: need at least 3 sweep points");
  double inv_min = std::numeric_limits<double>::infinity();
  double inv_max = 0.0, inv_mean = 0.0;
  for (const auto& [eps, lambda] : sweep) {
    if (eps <= 0.0 || lambda <= 0.0)
      throw InvalidInput("exponential_rate_fit: eps and lambda2 must be positive");
    inv_min = std::min(inv_min, 1.0 / eps);
    inv_max = std::max(inv_max, 1.0 / eps);
    inv_mean += 1.0 / eps;
  }
  inv_mean /= static_cast<double>(sweep.size());
  if ((inv_max - inv_min) < 0.2 * inv_mean)
    throw DegenerateFit("exponential_rate_fit: 1/eps column spread below 20%");

  const Index n = static_cast<Index>(sweep.size());
  Matrix design(n, 2);
  Vector rhs(n);
  for (Index i = 0; i < n; ++i) {
    const auto& [eps, lambda] = sweep[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = -1.0 / eps;
    rhs[i] = std::log(lambda) - std::log(eps);
  }
  const Vector coef = design.colPivHouseholderQr().solve(rhs);
  RateFit fit;
  fit.A_fit = std::exp(coef[0]);
  fit.E_fit = coef[1];
  const Vector res = design * coef - rhs;
  for (Index i = 0; i < n; ++i) fit.residuals.push_back(res[i]);
  return fit;
}

}  // namespace wl
