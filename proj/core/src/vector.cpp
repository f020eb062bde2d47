#include "riskdisc/vector.hpp"

#include "riskdisc/error.hpp"

#include <cmath>
#include <string>

namespace riskdisc {

UnitVector UnitVector::normalize(std::vector<double> components) {
  for (const double c : components) {
    if (!std::isfinite(c)) throw InvalidArgument("non-finite vector component");
  }
  const double n = norm(components);
  if (n == 0.0) return sentinel(components.size());
  for (double& c : components) c /= n;
  return UnitVector(std::move(components), false);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(const UnitVector& u, const UnitVector& v) {
  if (u.is_sentinel() || v.is_sentinel()) {
    throw InvalidArgument("cosine of the zero-vector sentinel is undefined");
  }
  double c = dot(u.components(), v.components());
  if (c >= 1.0 - kCosineSnap) return 1.0;
  if (c <= -1.0 + kCosineSnap) return -1.0;
  return c;
}

}  // namespace riskdisc
