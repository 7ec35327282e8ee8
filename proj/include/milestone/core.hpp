#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace milestone {

/// Points and vectors in R^d for d in {1, 2}. Fixed maximum size keeps them on the stack.
template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 2, 1>;
template <typename Scalar>
using TensorT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

using Point = PointT<double>;
using Tensor = TensorT<double>;

inline Point make_point(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point make_point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed configuration, contract violations on arguments.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a valid result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace milestone
