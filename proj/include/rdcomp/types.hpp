#ifndef RDCOMP_TYPES_HPP
#define RDCOMP_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rdcomp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// Error hierarchy. The CLI maps each family onto an exit code:
// ParameterError -> 1, IoError -> 2, NumericalError -> 3.

class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument lies outside the set where a formula is defined.
class DomainError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least-squares problem with n <= d.
class RankError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Normal-equations matrix not positive definite or too badly conditioned.
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Loss became non-finite during gradient descent.
class TrainingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const std::string& what) {
    if (!x.allFinite()) throw ParameterError(what + " contains NaN or infinite entries");
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ParameterError(msg);
}

}  // namespace rdcomp

#endif  // RDCOMP_TYPES_HPP
