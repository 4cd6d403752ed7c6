#ifndef RDCOMP_BOUNDS_HPP
#define RDCOMP_BOUNDS_HPP

// Closed-form generalization and rate-distortion bounds. All rates are in
// nats; convert with nats_to_bits for display only.

#include "rdcomp/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rdcomp {

template <typename Scalar>
constexpr Scalar nats_to_bits(Scalar nats) {
    return nats / std::numbers::ln2_v<Scalar>;
}

/// Parameters shared by the linear-regression bounds.
template <typename Scalar = double>
struct BoundInputs {
    Index n{80};
    Index d{50};
    Scalar noise_var{1};         // sigma'^2
    Scalar sub_gaussian_var{1};  // sigma^2 for the generic bound
    Scalar c_wstar{0};           // C(w*) = sup ||w_hat - w*||^2
    Scalar sigma_x_norm{1};      // ||Sigma_X||
};

namespace detail {

inline void check_regression_regime(Index d, Index n) {
    require(d >= 1, "d must be >= 1");
    if (n <= d + 1) throw DomainError("bound requires n > d + 1");
}

template <typename Scalar>
Scalar rd_scale(Index d, Index n, Scalar noise_var) {
    return static_cast<Scalar>(d) * noise_var / static_cast<Scalar>(n - d - 1);
}

}  // namespace detail

/// sqrt(2 sigma^2 I / n): mutual-information bound for a sigma-sub-Gaussian loss.
template <typename Scalar>
Scalar mi_gen_bound(Scalar sub_gaussian_var, Index n, Scalar mi_nats) {
    require(sub_gaussian_var > Scalar(0), "sub-Gaussian variance must be > 0");
    require(n >= 1, "n must be >= 1");
    require(mi_nats >= Scalar(0), "mutual information must be >= 0");
    return std::sqrt(Scalar(2) * sub_gaussian_var * mi_nats / static_cast<Scalar>(n));
}

/// 2 (C(w*) ||Sigma_X|| + sigma'^2) sqrt(R / n).
template <typename Scalar>
Scalar linreg_gen_bound(Scalar c_wstar, Scalar sigma_x_norm, Scalar noise_var, Index n, Scalar mi_nats) {
    require(c_wstar >= Scalar(0) && sigma_x_norm >= Scalar(0) && noise_var >= Scalar(0),
            "bound inputs must be nonnegative");
    require(n >= 1, "n must be >= 1");
    require(mi_nats >= Scalar(0), "mutual information must be >= 0");
    const Scalar loss_scale = c_wstar * sigma_x_norm + noise_var;
    return Scalar(2) * loss_scale * std::sqrt(mi_nats / static_cast<Scalar>(n));
}

/// Upper bound on R(D) for the ERM solution:
/// (d/2) max(0, ln(d sigma'^2 / ((n - d - 1) D))).
template <typename Scalar>
Scalar rd_upper_rate(Scalar distortion, Index d, Index n, Scalar noise_var) {
    detail::check_regression_regime(d, n);
    if (!(distortion > Scalar(0))) throw DomainError("R(D) upper bound diverges for D <= 0");
    const Scalar log_ratio = std::log(detail::rd_scale(d, n, noise_var) / distortion);
    return static_cast<Scalar>(d) / Scalar(2) * std::max(Scalar(0), log_ratio);
}

/// Upper bound on D(R): (d sigma'^2 / (n - d - 1)) exp(-2R/d).
template <typename Scalar>
Scalar dr_upper_distortion(Scalar rate_nats, Index d, Index n, Scalar noise_var) {
    detail::check_regression_regime(d, n);
    require(rate_nats >= Scalar(0), "rate must be >= 0");
    return detail::rd_scale(d, n, noise_var) * std::exp(Scalar(-2) * rate_nats / static_cast<Scalar>(d));
}

/// Generalization bound plus distortion-rate bound at the same rate.
template <typename Scalar>
Scalar tradeoff_bound(Scalar rate_nats, const BoundInputs<Scalar>& in) {
    return linreg_gen_bound(in.c_wstar, in.sigma_x_norm, in.noise_var, in.n, rate_nats) +
           dr_upper_distortion(rate_nats, in.d, in.n, in.noise_var);
}

/// Exact mutual information of the Gaussian oracle channel evaluated on the
/// Gaussian surrogate of the ERM solution:
/// (d/2) ln(d sigma'^2 / ((n-d-1) D) - n / (n-d-1) + 1), for 0 < D <= d sigma'^2 / n.
template <typename Scalar>
Scalar oracle_rate(Scalar distortion, Index d, Index n, Scalar noise_var) {
    detail::check_regression_regime(d, n);
    require(noise_var > Scalar(0), "noise variance must be > 0");
    const Scalar nn = static_cast<Scalar>(n);
    const Scalar dd = static_cast<Scalar>(d);
    if (!(distortion > Scalar(0))) throw DomainError("oracle rate requires D > 0");
    const Scalar alpha = nn * distortion / (dd * noise_var);
    if (alpha > Scalar(1) + Scalar(1e-12)) throw DomainError("oracle rate requires D <= d sigma'^2 / n");
    if (alpha >= Scalar(1)) return Scalar(0);
    const Scalar dof = nn - dd - Scalar(1);
    const Scalar arg = detail::rd_scale(d, n, noise_var) / distortion - nn / dof + Scalar(1);
    return dd / Scalar(2) * std::log(arg);
}

}  // namespace rdcomp

#endif  // RDCOMP_BOUNDS_HPP
