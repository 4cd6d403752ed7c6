#ifndef RDCOMP_LINREG_HPP
#define RDCOMP_LINREG_HPP

// Synthetic Gaussian linear-regression model: problem and dataset sampling,
// least-squares fitting, and exact risks.
//
// Conventions: a dataset stores the design matrix as d x n (one sample per
// column), so the ERM solution is (X X^T)^{-1} X Y.

#include "rdcomp/rng.hpp"
#include "rdcomp/types.hpp"

#include <cstdint>
#include <string>

namespace rdcomp {

/// Ground truth Y = X^T w* + eps with X ~ N(0, diag(sigma_x_diag)),
/// eps ~ N(0, noise_var).
template <typename Scalar = double>
struct LinearProblem {
    Vector<Scalar> w_star;
    Vector<Scalar> sigma_x_diag;
    Scalar noise_var{1};

    Index dim() const { return w_star.size(); }

    /// Spectral norm of a diagonal covariance.
    Scalar sigma_x_norm() const { return sigma_x_diag.maxCoeff(); }
};

template <typename Scalar = double>
struct Dataset {
    Matrix<Scalar> x;  // d x n
    Vector<Scalar> y;  // n

    Index dim() const { return x.rows(); }
    Index size() const { return x.cols(); }
};

template <typename Scalar>
void validate(const LinearProblem<Scalar>& p) {
    require(p.dim() >= 1, "problem dimension must be >= 1");
    require(p.sigma_x_diag.size() == p.dim(), "sigma_x_diag length must equal d");
    require((p.sigma_x_diag.array() > Scalar(0)).all(), "sigma_x_diag entries must be > 0");
    require(p.noise_var > Scalar(0), "noise variance must be > 0");
    require_finite(p.w_star, "w_star");
}

template <typename Scalar>
void validate(const Dataset<Scalar>& s) {
    require(s.size() >= 1, "dataset must contain at least one sample");
    require(s.y.size() == s.size(), "response vector length must equal sample count");
}

/// Builds a problem from an explicit ground truth; validates it.
template <typename Scalar>
LinearProblem<Scalar> make_problem(Vector<Scalar> w_star, Vector<Scalar> sigma_x_diag, Scalar noise_var) {
    LinearProblem<Scalar> p{std::move(w_star), std::move(sigma_x_diag), noise_var};
    validate(p);
    return p;
}

/// Draws w* with coordinates s + N(0, 0.01^2), s uniform on {-1, +1}.
template <typename Scalar = double>
LinearProblem<Scalar> sample_problem(Index d, Scalar noise_var, const Vector<Scalar>& sigma_x_diag,
                                     std::uint64_t seed) {
    require(d >= 1, "problem dimension must be >= 1");
    require(sigma_x_diag.size() == d, "sigma_x_diag length must equal d");
    constexpr double kJitter = 0.01;
    Rng rng(seed);
    Vector<Scalar> w(d);
    for (Index j = 0; j < d; ++j) {
        const double sign = rng.coin() ? 1.0 : -1.0;
        w(j) = static_cast<Scalar>(sign + kJitter * rng.gaussian());
    }
    return make_problem<Scalar>(std::move(w), sigma_x_diag, noise_var);
}

template <typename Scalar = double>
LinearProblem<Scalar> sample_problem(Index d, Scalar noise_var, std::uint64_t seed) {
    return sample_problem<Scalar>(d, noise_var, Vector<Scalar>::Ones(d), seed);
}

/// n i.i.d. samples from the problem. Samples are drawn column by column
/// (all covariates of sample i, then its noise).
template <typename Scalar>
Dataset<Scalar> sample_dataset(const LinearProblem<Scalar>& p, Index n, std::uint64_t seed) {
    validate(p);
    require(n >= 1, "sample count must be >= 1");
    const Index d = p.dim();
    const Vector<Scalar> scale = p.sigma_x_diag.cwiseSqrt();
    const double noise_sd = std::sqrt(static_cast<double>(p.noise_var));
    Rng rng(seed);
    Dataset<Scalar> s{Matrix<Scalar>(d, n), Vector<Scalar>(n)};
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) s.x(j, i) = scale(j) * static_cast<Scalar>(rng.gaussian());
        s.y(i) = s.x.col(i).dot(p.w_star) + static_cast<Scalar>(noise_sd * rng.gaussian());
    }
    return s;
}

/// Normal-equations least squares via Cholesky. Throws RankError for
/// n <= d and SingularityError when the reciprocal condition estimate of
/// X X^T drops below 1e-12.
template <typename Scalar>
Vector<Scalar> erm_fit(const Dataset<Scalar>& s) {
    validate(s);
    const Index d = s.dim();
    const Index n = s.size();
    if (n <= d) {
        throw RankError("ERM needs n > d (got n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")");
    }
    const Matrix<Scalar> gram = s.x * s.x.transpose();
    Eigen::LLT<Matrix<Scalar>> llt(gram);
    constexpr double kMinRcond = 1e-12;
    if (llt.info() != Eigen::Success || !(static_cast<double>(llt.rcond()) >= kMinRcond)) {
        throw SingularityError("X X^T is singular or ill-conditioned");
    }
    const Vector<Scalar> rhs = s.x * s.y;
    Vector<Scalar> w = llt.solve(rhs);
    // One step of iterative refinement tightens the normal-equations residual.
    w += llt.solve(rhs - gram * w);
    return w;
}

template <typename Scalar>
Scalar empirical_risk(const Vector<Scalar>& w, const Dataset<Scalar>& s) {
    validate(s);
    require(w.size() == s.dim(), "weight dimension does not match dataset");
    return (s.y - s.x.transpose() * w).squaredNorm() / static_cast<Scalar>(s.size());
}

/// Closed form (w - w*)^T Sigma_X (w - w*) + noise_var.
template <typename Scalar>
Scalar population_risk(const Vector<Scalar>& w, const LinearProblem<Scalar>& p) {
    require(w.size() == p.dim(), "weight dimension does not match problem");
    const Vector<Scalar> diff = w - p.w_star;
    return diff.cwiseAbs2().dot(p.sigma_x_diag) + p.noise_var;
}

/// Expected generalization error of the ERM solution, n > d + 1.
/// Accepts noise_var == 0 (noiseless limit).
template <typename Scalar>
Scalar exact_gen_error(Index d, Index n, Scalar noise_var) {
    if (n <= d + 1) throw DomainError("exact generalization error requires n > d + 1");
    require(noise_var >= Scalar(0), "noise variance must be >= 0");
    const Scalar dd = static_cast<Scalar>(d);
    const Scalar nn = static_cast<Scalar>(n);
    return noise_var * dd / nn * (Scalar(2) + (dd + Scalar(1)) / (nn - dd - Scalar(1)));
}

template <typename Scalar>
Scalar exact_gen_error(const LinearProblem<Scalar>& p, Index n) {
    return exact_gen_error<Scalar>(p.dim(), n, p.noise_var);
}

/// diag((1/n) X X^T).
template <typename Scalar>
Vector<Scalar> hessian_diag(const Dataset<Scalar>& s) {
    require(s.size() >= 1, "dataset must contain at least one sample");
    return s.x.rowwise().squaredNorm() / static_cast<Scalar>(s.size());
}

}  // namespace rdcomp

#endif  // RDCOMP_LINREG_HPP
