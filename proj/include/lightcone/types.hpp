#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lightcone {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Lattice dimensions up to three are supported; unused coordinates stay zero.
inline constexpr int kMaxDim = 3;
using Site = std::array<int, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configured size or accuracy cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment or dispersion document. `pointer` is the JSON
/// pointer of the offending value ("" for the document root).
class SpecError : public Error {
 public:
  SpecError(std::string pointer, const std::string& message)
      : Error(message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace lightcone
