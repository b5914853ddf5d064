#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mtrack {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BlockList = std::vector<Matrix>;
using VectorList = std::vector<Vector>;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Plant left its admissible region (diverging node coordinates, NaN output).
class InstabilityError : public Error {
public:
    using Error::Error;
};

// A plant that cannot be reset was asked for a multi-experiment procedure.
class NotResettableError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

inline std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(what + " is " + shape_of(m) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

inline void require_length(const Vector& v, Index n, const std::string& what) {
    if (v.size() != n) {
        throw DimensionError(what + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
    }
}

// Symmetric check used by the weight/covariance validators.
inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Max |a - b| scaled by max |b|; falls back to absolute when b is all zeros.
inline double relative_deviation(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("relative_deviation: " + shape_of(a) + " vs " + shape_of(b));
    }
    if (a.size() == 0) return 0.0;
    const double diff = (a - b).cwiseAbs().maxCoeff();
    const double scale = b.cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace mtrack
