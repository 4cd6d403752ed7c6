#ifndef RDCOMP_COMPRESSORS_HPP
#define RDCOMP_COMPRESSORS_HPP

// Model-compression operators: the empirical-risk distortion metric, the
// Gaussian oracle channel, and scalar K-means quantizers (plain,
// Hessian-weighted, and diameter-regularized Hessian-weighted).

#include "rdcomp/linreg.hpp"
#include "rdcomp/rng.hpp"
#include "rdcomp/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace rdcomp {

// ---------------------------------------------------------------------------
// Distortion

/// d_S(w, w_hat) = L_S(w_hat) - L_S(w). Nonnegative when w is the ERM solution.
template <typename Scalar>
Scalar distortion(const Vector<Scalar>& w_hat, const Vector<Scalar>& w, const Dataset<Scalar>& s) {
    require(w_hat.size() == w.size(), "weight dimensions differ");
    return empirical_risk(w_hat, s) - empirical_risk(w, s);
}

/// (w_hat - w)^T (1/n) X X^T (w_hat - w). Equals distortion() when w_erm is
/// the exact least-squares solution on s.
template <typename Scalar>
Scalar quadratic_distortion(const Vector<Scalar>& w_hat, const Vector<Scalar>& w_erm, const Dataset<Scalar>& s) {
    require(w_hat.size() == w_erm.size(), "weight dimensions differ");
    require(w_hat.size() == s.dim(), "weight dimension does not match dataset");
    return (s.x.transpose() * (w_hat - w_erm)).squaredNorm() / static_cast<Scalar>(s.size());
}

// ---------------------------------------------------------------------------
// Oracle channel: W_hat ~ N((1 - a) W + a w*, (1 - a)(D/d) Sigma_X^{-1}),
// a = n D / (d sigma'^2).

template <typename Scalar = double>
struct OracleChannel {
    Scalar target_distortion{};
    Scalar alpha{};
    Vector<Scalar> noise_var_diag;  // diagonal of (1 - alpha)(D/d) Sigma_X^{-1}
};

template <typename Scalar>
OracleChannel<Scalar> make_oracle_channel(const LinearProblem<Scalar>& p, Index n, Scalar target_distortion) {
    validate(p);
    require(n >= 1, "n must be >= 1");
    if (!(target_distortion > Scalar(0))) throw DomainError("oracle channel requires D > 0");
    const Scalar d = static_cast<Scalar>(p.dim());
    Scalar alpha = static_cast<Scalar>(n) * target_distortion / (d * p.noise_var);
    // Accept D = d sigma'^2 / n up to rounding in the caller's arithmetic.
    if (alpha > Scalar(1) + Scalar(1e-12)) throw DomainError("oracle channel requires D <= d sigma'^2 / n");
    alpha = std::min(alpha, Scalar(1));
    OracleChannel<Scalar> ch;
    ch.target_distortion = target_distortion;
    ch.alpha = alpha;
    ch.noise_var_diag = ((Scalar(1) - alpha) * target_distortion / d) * p.sigma_x_diag.cwiseInverse();
    return ch;
}

template <typename Scalar>
Vector<Scalar> oracle_compress(const Vector<Scalar>& w, const LinearProblem<Scalar>& p, Index n,
                               Scalar target_distortion, std::uint64_t seed) {
    require(w.size() == p.dim(), "weight dimension does not match problem");
    const auto ch = make_oracle_channel(p, n, target_distortion);
    Rng rng(seed);
    Vector<Scalar> out = (Scalar(1) - ch.alpha) * w + ch.alpha * p.w_star;
    if (ch.alpha < Scalar(1)) {
        for (Index j = 0; j < out.size(); ++j) {
            out(j) += std::sqrt(ch.noise_var_diag(j)) * static_cast<Scalar>(rng.gaussian());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar quantization

template <typename Scalar = double>
struct Quantization {
    Vector<Scalar> centroids;
    std::vector<int> assignments;  // cluster index per weight
    int k{0};
    int iterations_run{0};
    Scalar final_objective{0};          // sum_j h_j (w_j - c_{a_j})^2
    Scalar penalized_objective{0};      // final_objective + beta * diameter
    std::vector<Scalar> objective_trace;  // final_objective after every update step
};

struct ClusterOptions {
    int k = 2;
    int max_iters = 100;
    int restarts = 1;
    std::uint64_t seed = 0;
};

enum class RateMode { Entropy, UpperBound };

template <typename Scalar>
Scalar weighted_cost(const Vector<Scalar>& w, const Vector<Scalar>& h, const Vector<Scalar>& centroids,
                     const std::vector<int>& assignments) {
    Scalar cost = 0;
    for (Index j = 0; j < w.size(); ++j) {
        const Scalar r = w(j) - centroids(assignments[static_cast<std::size_t>(j)]);
        cost += h(j) * r * r;
    }
    return cost;
}

/// Largest squared pairwise centroid distance; 0 for a single centroid.
template <typename Scalar>
Scalar codebook_diameter(const Vector<Scalar>& centroids) {
    Scalar best = 0;
    for (Index a = 0; a < centroids.size(); ++a)
        for (Index b = a + 1; b < centroids.size(); ++b) {
            const Scalar diff = centroids(a) - centroids(b);
            best = std::max(best, diff * diff);
        }
    return best;
}

template <typename Scalar>
Scalar codebook_diameter(const Quantization<Scalar>& q) {
    return codebook_diameter(q.centroids);
}

template <typename Scalar>
Vector<Scalar> reconstruct(const Quantization<Scalar>& q) {
    Vector<Scalar> out(static_cast<Index>(q.assignments.size()));
    for (std::size_t j = 0; j < q.assignments.size(); ++j) out(static_cast<Index>(j)) = q.centroids(q.assignments[j]);
    return out;
}

/// d times the empirical entropy (nats) of the assignment histogram, or
/// d ln K in UpperBound mode.
template <typename Scalar>
Scalar rate_estimate(const Quantization<Scalar>& q, Index d, RateMode mode = RateMode::Entropy) {
    require(q.k >= 1, "quantization must have k >= 1");
    const Scalar dd = static_cast<Scalar>(d);
    if (mode == RateMode::UpperBound) return dd * std::log(static_cast<Scalar>(q.k));
    if (q.assignments.empty()) return 0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(q.k), 0);
    for (int a : q.assignments) ++counts[static_cast<std::size_t>(a)];
    const Scalar total = static_cast<Scalar>(q.assignments.size());
    Scalar entropy = 0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const Scalar p = static_cast<Scalar>(c) / total;
        entropy -= p * std::log(p);
    }
    return std::max(Scalar(0), dd * entropy);
}

/// Number of clusters that no weight is assigned to.
template <typename Scalar>
int empty_clusters(const Quantization<Scalar>& q) {
    std::vector<bool> used(static_cast<std::size_t>(q.k), false);
    for (int a : q.assignments) used[static_cast<std::size_t>(a)] = true;
    return static_cast<int>(std::count(used.begin(), used.end(), false));
}

/// Realized proxy for C(w*): ||w_hat - w*||^2.
template <typename Scalar>
Scalar c_wstar_estimate(const Vector<Scalar>& w_hat, const Vector<Scalar>& w_star) {
    require(w_hat.size() == w_star.size(), "weight dimensions differ");
    return (w_hat - w_star).squaredNorm();
}

namespace detail {

template <typename Scalar>
void check_cluster_inputs(const Vector<Scalar>& w, const Vector<Scalar>& h, int k) {
    require(w.size() >= 1, "cannot quantize an empty weight vector");
    require_finite(w, "weights");
    require(h.size() == w.size(), "Hessian diagonal length must equal weight count");
    require_finite(h, "Hessian diagonal");
    require((h.array() >= Scalar(0)).all(), "Hessian diagonal entries must be >= 0");
    require((h.array() > Scalar(0)).any(), "Hessian diagonal must not be all zero");
    require(k >= 1 && k <= w.size(), "k must satisfy 1 <= k <= d");
}

/// k initial centroids drawn without replacement from the distinct weight
/// values. If there are fewer than k distinct values the rest repeat.
template <typename Scalar>
Vector<Scalar> init_centroids(const Vector<Scalar>& w, int k, std::uint64_t seed) {
    std::vector<Scalar> pool(w.data(), w.data() + w.size());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    Rng rng(seed);
    const std::size_t m = pool.size();
    const std::size_t take = std::min<std::size_t>(m, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t pick = i + static_cast<std::size_t>(rng.below(m - i));
        std::swap(pool[i], pool[pick]);
    }
    Vector<Scalar> c(k);
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
        c(static_cast<Index>(i)) = i < take ? pool[i] : pool[static_cast<std::size_t>(rng.below(m))];
    }
    return c;
}

/// Nearest centroid, ties to the lowest index.
template <typename Scalar>
void assign_nearest(const Vector<Scalar>& w, const Vector<Scalar>& c, std::vector<int>& out) {
    out.resize(static_cast<std::size_t>(w.size()));
    for (Index j = 0; j < w.size(); ++j) {
        int best = 0;
        Scalar best_d = std::abs(w(j) - c(0));
        for (Index m = 1; m < c.size(); ++m) {
            const Scalar dist = std::abs(w(j) - c(m));
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<int>(m);
            }
        }
        out[static_cast<std::size_t>(j)] = best;
    }
}

/// Per-cluster member count and Hessian mass for one assignment.
template <typename Scalar>
struct ClusterStats {
    std::vector<int> count;
    std::vector<Scalar> mass;
};

template <typename Scalar>
ClusterStats<Scalar> cluster_stats(const Vector<Scalar>& h, const std::vector<int>& a, int k) {
    ClusterStats<Scalar> st{std::vector<int>(static_cast<std::size_t>(k), 0),
                            std::vector<Scalar>(static_cast<std::size_t>(k), Scalar(0))};
    for (std::size_t j = 0; j < a.size(); ++j) {
        ++st.count[static_cast<std::size_t>(a[j])];
        st.mass[static_cast<std::size_t>(a[j])] += h(static_cast<Index>(j));
    }
    return st;
}

/// sum_{j in C_k} (h_j / denom) w_j, where mass = sum_{j in C_k} h_j.
/// Summed as offsets from the first member so that a cluster of equal
/// values (a singleton in particular) returns that value exactly.
template <typename Scalar>
Scalar normalized_sum(const Vector<Scalar>& w, const Vector<Scalar>& h, const std::vector<int>& a, int cluster,
                      Scalar mass, Scalar denom) {
    Scalar pivot = 0;
    bool have_pivot = false;
    Scalar acc = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] != cluster) continue;
        const Index jj = static_cast<Index>(j);
        if (!have_pivot) {
            pivot = w(jj);
            have_pivot = true;
        }
        acc += (h(jj) / denom) * (w(jj) - pivot);
    }
    return (mass == denom ? pivot : (mass / denom) * pivot) + acc;
}

/// Weighted-mean centroid update. Clusters with members but zero Hessian
/// mass keep their previous centroid; empty clusters are reported via the
/// returned mask.
template <typename Scalar>
std::vector<bool> weighted_mean_update(const Vector<Scalar>& w, const Vector<Scalar>& h, const std::vector<int>& a,
                                       const Vector<Scalar>& prev, Vector<Scalar>& next) {
    const int k = static_cast<int>(prev.size());
    const auto st = cluster_stats(h, a, k);
    std::vector<bool> empty(static_cast<std::size_t>(k), false);
    next = prev;
    for (int m = 0; m < k; ++m) {
        const auto um = static_cast<std::size_t>(m);
        if (st.count[um] == 0) {
            empty[um] = true;
        } else if (st.mass[um] > Scalar(0)) {
            next(m) = normalized_sum(w, h, a, m, st.mass[um], st.mass[um]);
        }
    }
    return empty;
}

/// Farthest centroid pair (k1 < k2), ties broken by the lowest index pair.
template <typename Scalar>
std::pair<int, int> farthest_pair(const Vector<Scalar>& c) {
    std::pair<int, int> best{0, 0};
    Scalar best_d = -1;
    for (Index a = 0; a < c.size(); ++a)
        for (Index b = a + 1; b < c.size(); ++b) {
            const Scalar diff = c(a) - c(b);
            if (diff * diff > best_d) {
                best_d = diff * diff;
                best = {static_cast<int>(a), static_cast<int>(b)};
            }
        }
    return best;
}

/// Diameter-regularized update: the farthest pair of the previous iterate is
/// pulled together,
///   c_k1 = (sum_{C_k1} h w + beta c_k2^prev) / (sum_{C_k1} h + beta),
/// symmetrically for k2, using previous-iterate values for the cross terms.
/// Every other centroid gets its weighted mean.
template <typename Scalar>
std::vector<bool> diameter_reg_update(const Vector<Scalar>& w, const Vector<Scalar>& h, const std::vector<int>& a,
                                      const Vector<Scalar>& prev, Scalar beta, Vector<Scalar>& next) {
    const int k = static_cast<int>(prev.size());
    const auto st = cluster_stats(h, a, k);
    std::vector<bool> empty(static_cast<std::size_t>(k), false);
    next = prev;
    const auto [k1, k2] = k >= 2 ? farthest_pair(prev) : std::pair<int, int>{-1, -1};
    for (int m = 0; m < k; ++m) {
        const auto um = static_cast<std::size_t>(m);
        if (st.count[um] == 0) {
            empty[um] = true;
            continue;
        }
        const bool in_pair = (m == k1 || m == k2);
        const Scalar denom = st.mass[um] + (in_pair ? beta : Scalar(0));
        if (!(denom > Scalar(0))) continue;
        Scalar c = normalized_sum(w, h, a, m, st.mass[um], denom);
        if (in_pair && beta != Scalar(0)) c += (beta / denom) * prev(m == k1 ? k2 : k1);
        next(m) = c;
    }
    return empty;
}

/// Re-seeds each empty cluster at the weight with the largest weighted
/// residual under the new centroids. A weight is used at most once.
template <typename Scalar>
void reseed_empty(const Vector<Scalar>& w, const Vector<Scalar>& h, const std::vector<int>& a,
                  const std::vector<bool>& empty, Vector<Scalar>& c) {
    std::vector<bool> taken(static_cast<std::size_t>(w.size()), false);
    for (std::size_t m = 0; m < empty.size(); ++m) {
        if (!empty[m]) continue;
        Index best = -1;
        Scalar best_r = -1;
        for (Index j = 0; j < w.size(); ++j) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            const Scalar diff = w(j) - c(a[static_cast<std::size_t>(j)]);
            const Scalar r = h(j) * diff * diff;
            if (r > best_r) {
                best_r = r;
                best = j;
            }
        }
        if (best < 0) continue;
        taken[static_cast<std::size_t>(best)] = true;
        c(static_cast<Index>(m)) = w(best);
    }
}

/// Alternating assignment / update iterations from a given codebook. Stops
/// after max_iters or when an assignment step reproduces the previous
/// assignment.
template <typename Scalar, typename Update>
Quantization<Scalar> lloyd(const Vector<Scalar>& w, const Vector<Scalar>& h, const Vector<Scalar>& init,
                           int max_iters, Scalar beta, Update&& update) {
    require(max_iters >= 0, "max_iters must be >= 0");
    Quantization<Scalar> q;
    q.k = static_cast<int>(init.size());
    q.centroids = init;
    assign_nearest(w, q.centroids, q.assignments);
    std::vector<int> next_assign;
    Vector<Scalar> next_c;
    for (int t = 1; t <= max_iters; ++t) {
        if (t == 1) {
            next_assign = q.assignments;
        } else {
            assign_nearest(w, q.centroids, next_assign);
            if (next_assign == q.assignments) break;
        }
        const auto empty = update(w, h, next_assign, q.centroids, next_c);
        reseed_empty(w, h, next_assign, empty, next_c);
        q.assignments = next_assign;
        q.centroids = next_c;
        q.iterations_run = t;
        q.objective_trace.push_back(weighted_cost(w, h, q.centroids, q.assignments));
    }
    q.final_objective = weighted_cost(w, h, q.centroids, q.assignments);
    q.penalized_objective = q.final_objective + beta * codebook_diameter(q.centroids);
    return q;
}

template <typename Scalar, typename Run>
Quantization<Scalar> best_of_restarts(const Vector<Scalar>& w, const ClusterOptions& opt, Run&& run) {
    require(opt.restarts >= 1, "restarts must be >= 1");
    std::optional<Quantization<Scalar>> best;
    for (int r = 0; r < opt.restarts; ++r) {
        auto q = run(init_centroids(w, opt.k, derive_seed(opt.seed, static_cast<std::uint64_t>(r))));
        if (!best || q.penalized_objective < best->penalized_objective) best = std::move(q);
    }
    return std::move(*best);
}

}  // namespace detail

/// Hessian-weighted K-means from an explicit initial codebook.
template <typename Scalar>
Quantization<Scalar> hessian_kmeans_quantize(const Vector<Scalar>& w, const Vector<Scalar>& h,
                                             const Vector<Scalar>& init, int max_iters) {
    detail::check_cluster_inputs(w, h, static_cast<int>(init.size()));
    return detail::lloyd(w, h, init, max_iters, Scalar(0),
                         [](const auto& ww, const auto& hh, const auto& a, const auto& prev, auto& next) {
                             return detail::weighted_mean_update(ww, hh, a, prev, next);
                         });
}

/// Hessian-weighted K-means, minimizing sum_k sum_{j in C_k} h_j (w_j - c_k)^2.
template <typename Scalar>
Quantization<Scalar> hessian_kmeans_quantize(const Vector<Scalar>& w, const Vector<Scalar>& h,
                                             const ClusterOptions& opt) {
    detail::check_cluster_inputs(w, h, opt.k);
    return detail::best_of_restarts<Scalar>(
        w, opt, [&](const Vector<Scalar>& init) { return hessian_kmeans_quantize(w, h, init, opt.max_iters); });
}

/// Lloyd's algorithm with unit weights.
template <typename Scalar>
Quantization<Scalar> kmeans_quantize(const Vector<Scalar>& w, const ClusterOptions& opt) {
    return hessian_kmeans_quantize<Scalar>(w, Vector<Scalar>::Ones(w.size()), opt);
}

template <typename Scalar>
Quantization<Scalar> kmeans_quantize(const Vector<Scalar>& w, const Vector<Scalar>& init, int max_iters) {
    return hessian_kmeans_quantize<Scalar>(w, Vector<Scalar>::Ones(w.size()), init, max_iters);
}

/// Diameter-regularized Hessian-weighted K-means from an explicit codebook.
/// With beta == 0 the result is identical to hessian_kmeans_quantize.
template <typename Scalar>
Quantization<Scalar> diameter_reg_quantize(const Vector<Scalar>& w, const Vector<Scalar>& h, Scalar beta,
                                           const Vector<Scalar>& init, int max_iters) {
    detail::check_cluster_inputs(w, h, static_cast<int>(init.size()));
    require(beta >= Scalar(0) && std::isfinite(static_cast<double>(beta)), "beta must be finite and >= 0");
    return detail::lloyd(w, h, init, max_iters, beta,
                         [beta](const auto& ww, const auto& hh, const auto& a, const auto& prev, auto& next) {
                             return detail::diameter_reg_update(ww, hh, a, prev, beta, next);
                         });
}

template <typename Scalar>
Quantization<Scalar> diameter_reg_quantize(const Vector<Scalar>& w, const Vector<Scalar>& h, Scalar beta,
                                           const ClusterOptions& opt) {
    detail::check_cluster_inputs(w, h, opt.k);
    require(beta >= Scalar(0) && std::isfinite(static_cast<double>(beta)), "beta must be finite and >= 0");
    return detail::best_of_restarts<Scalar>(w, opt, [&](const Vector<Scalar>& init) {
        return diameter_reg_quantize(w, h, beta, init, opt.max_iters);
    });
}

}  // namespace rdcomp

#endif  // RDCOMP_COMPRESSORS_HPP
