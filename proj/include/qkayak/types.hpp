#ifndef QKAYAK_TYPES_HPP
#define QKAYAK_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace qkayak {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

// Error categories map onto the CLI exit codes (2/3/4).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateModelError : std::runtime_error {
  explicit DegenerateModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qkayak

#endif
