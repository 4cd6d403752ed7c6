// Acceptance checks. Prints one PASS / FAIL line per criterion and exits
// nonzero when any criterion fails.
#include "rdcomp/bounds.hpp"
#include "rdcomp/compressors.hpp"
#include "rdcomp/harness.hpp"
#include "rdcomp/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace rdcomp;
using Eigen::VectorXd;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail, double seconds) {
    std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SweepConfig base_config(int trials, std::uint64_t seed) {
    SweepConfig cfg;
    cfg.d = 50;
    cfg.n = 80;
    cfg.noise_var = 1.0;
    cfg.trials = trials;
    cfg.base_seed = seed;
    return cfg;
}

bool bits_equal(const VectorXd& a, const VectorXd& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

VectorXd random_weights(Rng& rng, Index d) {
    VectorXd w(d);
    for (Index j = 0; j < d; ++j) w(j) = rng.gaussian() + (rng.coin() ? 1.5 : -1.5);
    return w;
}

VectorXd random_hessian(Rng& rng, Index d) {
    VectorXd h(d);
    for (Index j = 0; j < d; ++j) h(j) = 0.1 + 2.0 * rng.uniform();
    return h;
}

double brute_force_cost(const VectorXd& w, const VectorXd& h, int k) {
    const Index d = w.size();
    std::vector<std::size_t> a(static_cast<std::size_t>(d), 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Index)> rec = [&](Index j) {
        if (j == d) {
            std::vector<double> hw(static_cast<std::size_t>(k), 0), hs(static_cast<std::size_t>(k), 0);
            for (Index i = 0; i < d; ++i) {
                hw[a[static_cast<std::size_t>(i)]] += h(i) * w(i);
                hs[a[static_cast<std::size_t>(i)]] += h(i);
            }
            double cost = 0;
            for (Index i = 0; i < d; ++i) {
                const auto m = a[static_cast<std::size_t>(i)];
                const double r = w(i) - hw[m] / hs[m];
                cost += h(i) * r * r;
            }
            best = std::min(best, cost);
            return;
        }
        for (int m = 0; m < k; ++m) {
            a[static_cast<std::size_t>(j)] = static_cast<std::size_t>(m);
            rec(j + 1);
        }
    };
    rec(0);
    return best;
}

// ---------------------------------------------------------------------------

void criteria_1_and_5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = base_config(2000, 11);
    const auto problem = sweep_problem(cfg);
    const auto trials = run_linreg_trials(cfg, problem, Method::KMeans, 0, 2.0, 0.0);
    std::vector<double> gen, pop, pop_erm, diff;
    for (const auto& t : trials) {
        gen.push_back(t.pop_uncompressed - t.emp_original);
        pop.push_back(t.pop_risk);
        pop_erm.push_back(t.pop_uncompressed);
        diff.push_back(t.pop_uncompressed - t.pop_risk);
    }
    const double secs = seconds_since(t0);

    const double exact = exact_gen_error<double>(50, 80, 1.0);
    const Stat g = summarize(gen);
    report(1, std::abs(g.mean - exact) <= 3 * g.se && std::abs(exact - 2.349137931034483) < 1e-12,
           fmt("ERM generalization error %.5f +- %.5f vs %.6f over %zu trials", g.mean, g.se, exact, gen.size()),
           secs);

    // Unpaired margin: the means differ by more than 3 combined standard errors.
    const Stat c = summarize(pop);
    const Stat u = summarize(pop_erm);
    const double se = std::hypot(c.se, u.se);
    report(5, u.mean - c.mean > 3 * se && trials.size() >= 500,
           fmt("K=2 population risk %.4f vs ERM %.4f, margin %.4f > 3 se = %.4f (paired se %.4f)", c.mean, u.mean,
               u.mean - c.mean, 3 * se, summarize(diff).se),
           secs);
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = base_config(2000, 12);
    const auto problem = sweep_problem(cfg);
    const auto trials = run_linreg_trials(cfg, problem, Method::Oracle, 0, 0.3, 0.0);
    std::vector<double> dist;
    for (const auto& t : trials) dist.push_back(t.distortion);
    const Stat s = summarize(dist);
    report(2, s.mean >= 0.294 && s.mean <= 0.306,
           fmt("oracle mean distortion %.5f +- %.5f at D=0.3 over %zu trials", s.mean, s.se, dist.size()),
           seconds_since(t0));
}

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = base_config(200, 13);
    const auto problem = sweep_problem(cfg);
    const double d_star = 50.0 * 1.0 / 80.0;
    bool exact = true;
    bool unit_risk = true;
    for (int t = 0; t < cfg.trials; ++t) {
        const auto trial_seed = derive_seed(cfg.base_seed, 0, static_cast<std::uint64_t>(t));
        const auto s = sample_dataset(problem, cfg.n, trial_seed);
        const VectorXd w = erm_fit(s);
        const VectorXd w_hat = oracle_compress(w, problem, cfg.n, d_star, derive_seed(trial_seed, 1));
        exact = exact && (w_hat.array() == problem.w_star.array()).all();
        unit_risk = unit_risk && population_risk(w_hat, problem) == 1.0;
    }
    const auto trials = run_linreg_trials(cfg, problem, Method::Oracle, 0, d_star, 0.0);
    for (const auto& t : trials) unit_risk = unit_risk && t.pop_risk == 1.0;
    const double rate = oracle_rate<double>(d_star, 50, 80, 1.0);
    report(3, d_star == 0.625 && exact && unit_risk && rate == 0.0,
           fmt("D=%.3f: W_hat == w* in every trial: %s, population risk 1: %s, oracle rate %.3g", d_star,
               exact ? "yes" : "no", unit_risk ? "yes" : "no", rate),
           seconds_since(t0));
}

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(14);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const double r = 200.0 * (1.0 - rng.uniform());  // (0, 200]
        const double back = rd_upper_rate<double>(dr_upper_distortion<double>(r, 50, 80, 1.0), 50, 80, 1.0);
        worst = std::max(worst, std::abs(back - r) / r);
    }
    const double d0 = dr_upper_distortion<double>(0.0, 50, 80, 1.0);
    report(4, worst <= 1e-10 && std::abs(d0 - 50.0 / 29.0) <= 1e-15 && std::abs(d0 - 1.724138) < 5e-7,
           fmt("worst relative inversion error %.2e, D(0) = %.9f", worst, d0), seconds_since(t0));
}

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(16);
    int identical = 0;
    for (int i = 0; i < 100; ++i) {
        const Index d = 5 + static_cast<Index>(rng.below(200));
        const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(static_cast<std::uint64_t>(d), 8)));
        const VectorXd w = random_weights(rng, d);
        const VectorXd h = i % 2 == 0 ? VectorXd(VectorXd::Ones(d)) : random_hessian(rng, d);
        const ClusterOptions opt{k, 100, 1 + static_cast<int>(rng.below(3)), rng.next_u64()};
        const auto a = hessian_kmeans_quantize(w, h, opt);
        const auto b = diameter_reg_quantize(w, h, 0.0, opt);
        if (bits_equal(a.centroids, b.centroids) && a.assignments == b.assignments &&
            bits_equal(a.objective_trace, b.objective_trace) && a.iterations_run == b.iterations_run &&
            std::memcmp(&a.final_objective, &b.final_objective, sizeof(double)) == 0) {
            ++identical;
        }
    }
    report(6, identical == 100, fmt("%d / 100 instances bit-identical at beta=0", identical), seconds_since(t0));
}

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = base_config(200, 17);
    cfg.k = 4;
    const auto problem = sweep_problem(cfg);
    const std::vector<double> betas{0, 1, 10, 100};
    std::vector<double> med, med_se, dist, dist_se;
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const auto trials = run_linreg_trials(cfg, problem, Method::DiameterReg, b, cfg.k, betas[b]);
        std::vector<double> diam, dd;
        for (const auto& t : trials) {
            diam.push_back(t.diameter);
            dd.push_back(t.distortion);
        }
        // Large-sample standard error of the median: sqrt(pi/2) sd / sqrt(n).
        med.push_back(median(diam));
        med_se.push_back(std::sqrt(std::numbers::pi / 2) * summarize(diam).se);
        const Stat s = summarize(dd);
        dist.push_back(s.mean);
        dist_se.push_back(s.se);
    }
    bool ok = true;
    for (std::size_t b = 1; b < betas.size(); ++b) {
        ok = ok && med[b] <= med[b - 1] + 2 * std::hypot(med_se[b], med_se[b - 1]);
        ok = ok && dist[b] >= dist[b - 1] - 2 * std::hypot(dist_se[b], dist_se[b - 1]);
    }
    std::string detail = fmt("K=%d, %d runs; median diameter", cfg.k, cfg.trials);
    for (double m : med) detail += fmt(" %.4f", m);
    detail += "; mean distortion";
    for (double m : dist) detail += fmt(" %.4f", m);
    report(7, ok && cfg.trials >= 50, detail, seconds_since(t0));
}

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    NnSweepConfig cfg;
    cfg.seeds = 20;
    cfg.k_grid = {8};
    cfg.beta_grid = {0.0};
    cfg.base_seed = 18;
    const auto records = run_nn_sweep(cfg);
    const auto& r = records.front();
    const bool ok = r.seeds_ok >= 20 && r.train_ce.mean >= r.orig_train_ce.mean - 0.005 &&
                    r.gap.mean <= r.orig_gap.mean;
    report(8, ok,
           fmt("K=8 over %d seeds: train CE %.4f vs original %.4f, gap %.4f vs original %.4f", r.seeds_ok,
               r.train_ce.mean, r.orig_train_ce.mean, r.gap.mean, r.orig_gap.mean),
           seconds_since(t0));
}

void criterion_9() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> broken;
    Rng rng(19);

    // Lloyd monotonicity.
    bool mono = true;
    for (int i = 0; i < 200; ++i) {
        const Index d = 5 + static_cast<Index>(rng.below(100));
        const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(static_cast<std::uint64_t>(d), 8)));
        const VectorXd w = random_weights(rng, d);
        const VectorXd h = i % 2 == 0 ? VectorXd(VectorXd::Ones(d)) : random_hessian(rng, d);
        const VectorXd init = detail::init_centroids(w, k, rng.next_u64());
        std::vector<int> a0;
        detail::assign_nearest(w, init, a0);
        double prev = weighted_cost(w, h, init, a0);
        for (double cost : hessian_kmeans_quantize(w, h, init, 100).objective_trace) {
            mono = mono && cost <= prev * (1 + 1e-12);
            prev = cost;
        }
    }
    if (!mono) broken.push_back("Lloyd monotonicity");

    // Assignment optimality.
    bool assign = true;
    for (int i = 0; i < 200; ++i) {
        const Index d = 2 + static_cast<Index>(rng.below(30));
        const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(static_cast<std::uint64_t>(d), 5)));
        const VectorXd w = random_weights(rng, d);
        const VectorXd h = random_hessian(rng, d);
        VectorXd c(k);
        for (int m = 0; m < k; ++m) c(m) = 3 * rng.gaussian();
        std::vector<int> a;
        detail::assign_nearest(w, c, a);
        const double base = weighted_cost(w, h, c, a);
        for (Index j = 0; j < d; ++j) {
            for (int m = 0; m < k; ++m) {
                auto moved = a;
                moved[static_cast<std::size_t>(j)] = m;
                assign = assign && weighted_cost(w, h, c, moved) >= base;
            }
        }
    }
    if (!assign) broken.push_back("assignment optimality");

    // Brute-force optimum on d <= 10, K <= 3.
    int brute_ok = 0;
    for (int i = 0; i < 100; ++i) {
        const Index d = 3 + static_cast<Index>(rng.below(8));
        const int k = 1 + static_cast<int>(rng.below(3));
        const VectorXd w = random_weights(rng, d);
        const VectorXd h = random_hessian(rng, d);
        const auto q = hessian_kmeans_quantize(w, h, ClusterOptions{k, 100, 10, rng.next_u64()});
        const double best = brute_force_cost(w, h, k);
        const double scale = std::max(best, 1e-12 * h.dot(w.cwiseAbs2()));
        if (std::abs(q.final_objective - best) <= 1e-8 * scale) ++brute_ok;
    }
    if (brute_ok != 100) broken.push_back(fmt("brute-force optimum (%d / 100 matched, 10 restarts)", brute_ok));

    // Quadratic distortion identity.
    bool quad = true;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Index d = 2 + static_cast<Index>(rng.below(50));
        const auto p = sample_problem<double>(d, 0.5 + rng.uniform(), rng.next_u64());
        const auto s = sample_dataset(p, d + 5 + static_cast<Index>(rng.below(60)), rng.next_u64());
        const VectorXd w = erm_fit(s);
        VectorXd w_hat = w;
        for (Index j = 0; j < d; ++j) w_hat(j) += rng.gaussian();
        const double q = quadratic_distortion(w_hat, w, s);
        quad = quad && std::abs(distortion(w_hat, w, s) - q) <= 1e-8 * q;
    }
    if (!quad) broken.push_back("quadratic distortion identity");

    // Analytic gradients against central differences.
    bool grad = true;
    for (int fixture = 0; fixture < 5; ++fixture) {
        nn::ClassifDataset data;
        data.n_classes = 3;
        data.inputs.resize(12, 3);
        for (Index i = 0; i < 12; ++i) {
            for (Index j = 0; j < 3; ++j) data.inputs(i, j) = rng.gaussian();
            data.labels.push_back(static_cast<int>(rng.below(3)));
        }
        auto model = nn::init_mlp({3, 6, 5, 3}, rng.next_u64());
        VectorXd p = model.flatten();
        for (Index i = 0; i < p.size(); ++i) p(i) += 0.1 * rng.gaussian();
        model.unflatten(p);
        const VectorXd g = nn::loss_gradient(model, data);
        for (Index i = 0; i < p.size(); ++i) {
            const double step = 1e-5;
            auto plus = model;
            auto minus = model;
            VectorXd pp = p, pm = p;
            pp(i) += step;
            pm(i) -= step;
            plus.unflatten(pp);
            minus.unflatten(pm);
            const double fd = (nn::cross_entropy(plus, data) - nn::cross_entropy(minus, data)) / (2 * step);
            grad = grad && std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-7}) < 1e-4;
        }
    }
    if (!grad) broken.push_back("finite-difference gradients");

    // CSV output independent of the thread count.
    auto cfg = base_config(40, 20);
    cfg.method = Method::HessianKMeans;
    cfg.grid = {1, 2, 4, 8};
    cfg.threads = 1;
    const std::string one = sweep_csv(run_linreg_sweep(cfg));
    bool csv = true;
    for (unsigned threads : {2u, 3u, 8u}) {
        cfg.threads = threads;
        csv = csv && sweep_csv(run_linreg_sweep(cfg)) == one;
    }
    NnSweepConfig nn_cfg;
    nn_cfg.seeds = 4;
    nn_cfg.epochs = 200;
    nn_cfg.k_grid = {2, 8};
    nn_cfg.beta_grid = {0.0, 1.0};
    nn_cfg.n_test = 200;
    nn_cfg.threads = 1;
    const std::string nn_one = nn_csv(run_nn_sweep(nn_cfg));
    nn_cfg.threads = 4;
    csv = csv && nn_csv(run_nn_sweep(nn_cfg)) == nn_one;
    if (!csv) broken.push_back("thread-independent CSV");

    std::string detail = "property suites: ";
    if (broken.empty()) {
        detail += "all green";
    } else {
        for (std::size_t i = 0; i < broken.size(); ++i) detail += (i ? ", " : "") + broken[i];
        detail += " failed";
    }
    report(9, broken.empty(), detail, seconds_since(t0));
}

}  // namespace

int main() {
    try {
        criteria_1_and_5();
        criterion_2();
        criterion_3();
        criterion_4();
        criterion_6();
        criterion_7();
        criterion_8();
        criterion_9();
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%s: %d criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
    return failures == 0 ? 0 : 1;
}
