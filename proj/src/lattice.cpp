#include "wl/lattice.hpp"

#include <algorithm>
#include <string>

namespace wl {

LatticeBox::LatticeBox(int dim, double eps, Vector center, Vector half_widths,
                       Index max_sites)
    : dim_(dim), eps_(eps), center_(std::move(center)), half_widths_(std::move(half_widths)) {
  if (dim_ <= 0) throw InvalidInput("LatticeBox: dim must be positive");
  if (eps_ <= 0.0) throw InvalidInput("LatticeBox: eps must be positive");
  if (center_.size() != dim_ || half_widths_.size() != dim_)
    throw InvalidInput("LatticeBox: center/half_widths length != dim");
  if (half_widths_.minCoeff() <= 0.0)
    throw InvalidInput("LatticeBox: half widths must be positive");

  kmin_.resize(dim_);
  kmax_.resize(dim_);
  n_ = 1;
  for (int i = 0; i < dim_; ++i) {
    const int k = static_cast<int>(std::floor(half_widths_[i] / eps_ + 1e-9));
    kmin_[i] = -k;
    kmax_[i] = k;
    n_ *= static_cast<Index>(2 * k + 1);
    if (n_ > max_sites)
      throw TooLarge("LatticeBox: site count exceeds the configured maximum of " +
                     std::to_string(max_sites));
  }
  strides_.assign(dim_, 1);
  for (int i = dim_ - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * (kmax_[i + 1] - kmin_[i + 1] + 1);
  measure_ = std::pow(eps_, dim_);
}

IntVector LatticeBox::offset(Index i) const {
  IntVector k(dim_);
  for (int a = 0; a < dim_; ++a) {
    const Index extent = kmax_[a] - kmin_[a] + 1;
    k[a] = kmin_[a] + static_cast<int>((i / strides_[a]) % extent);
  }
  return k;
}

Vector LatticeBox::site(Index i) const {
  const IntVector k = offset(i);
  Vector x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = center_[a] + eps_ * k[a];
  return x;
}

Index LatticeBox::index_of(const IntVector& k) const {
  Index idx = 0;
  for (int a = 0; a < dim_; ++a) {
    if (k[a] < kmin_[a] || k[a] > kmax_[a]) return -1;
    idx += strides_[a] * static_cast<Index>(k[a] - kmin_[a]);
  }
  return idx;
}

Index LatticeBox::neighbor(Index i, int axis, int dir) const {
  IntVector k = offset(i);
  k[axis] += dir;
  return index_of(k);
}

Index LatticeBox::nearest_site(const Vector& x) const {
  IntVector k(dim_);
  for (int a = 0; a < dim_; ++a) {
    const int ki = static_cast<int>(std::lround((x[a] - center_[a]) / eps_));
    k[a] = std::clamp(ki, kmin_[a], kmax_[a]);
  }
  return index_of(k);
}

bool LatticeBox::is_boundary(Index i) const {
  const IntVector k = offset(i);
  for (int a = 0; a < dim_; ++a)
    if (k[a] == kmin_[a] || k[a] == kmax_[a]) return true;
  return false;
}

}  // namespace wl
