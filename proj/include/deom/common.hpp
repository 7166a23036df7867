#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace deom {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr cplx iu{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

/// Rejected input: malformed config, inconsistent dimensions, unsupported
/// parameter combination. Maps to process exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Propagation produced a non-finite or runaway state. Exit code 3.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested hierarchy would exceed the configured memory budget. Exit code 4.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

} // namespace deom
