#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace bmpcc {

inline double value_of(double x) { return x; }

template <class Derivatives>
double value_of(const Eigen::AutoDiffScalar<Derivatives>& x) {
  return x.value();
}

/// Forward-mode scalar carrying derivatives with respect to a fixed-size
/// stacked (state, input) vector.
template <int Dim>
using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, Dim, 1>>;

}  // namespace bmpcc
