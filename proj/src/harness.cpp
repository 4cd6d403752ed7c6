#include "rdcomp/harness.hpp"

#include "rdcomp/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace rdcomp {

std::string to_string(Method m) {
    switch (m) {
        case Method::Oracle: return "oracle";
        case Method::KMeans: return "kmeans";
        case Method::HessianKMeans: return "hessian_kmeans";
        case Method::DiameterReg: return "diameter_reg";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "oracle") return Method::Oracle;
    if (name == "kmeans") return Method::KMeans;
    if (name == "hessian_kmeans") return Method::HessianKMeans;
    if (name == "diameter_reg") return Method::DiameterReg;
    throw ParameterError("unknown method '" + name + "' (expected oracle, kmeans, hessian_kmeans, diameter_reg)");
}

namespace {

int cluster_count(double grid_value, Index d) {
    const double k = std::round(grid_value);
    require(k == grid_value, "K grid values must be integers");
    require(k >= 1 && k <= static_cast<double>(d), "K grid values must satisfy 1 <= K <= d");
    return static_cast<int>(k);
}

}  // namespace

void validate(const SweepConfig& cfg) {
    require(cfg.d >= 1, "d must be >= 1");
    require(cfg.n > cfg.d + 1, "sweeps require n > d + 1");
    require(cfg.noise_var > 0, "noise variance must be > 0");
    require(cfg.sigma_x_diag.empty() || static_cast<Index>(cfg.sigma_x_diag.size()) == cfg.d,
            "sigma_x_diag must be empty or have length d");
    require(cfg.trials >= 1, "trials must be >= 1");
    require(cfg.max_iters >= 1, "max_iters must be >= 1");
    require(cfg.restarts >= 1, "restarts must be >= 1");
    require(cfg.beta >= 0, "beta must be >= 0");
    for (double g : cfg.grid) {
        if (cfg.method == Method::Oracle) {
            require(g > 0 && g <= static_cast<double>(cfg.d) * cfg.noise_var / static_cast<double>(cfg.n) * (1 + 1e-12),
                    "oracle grid values must satisfy 0 < D <= d sigma'^2 / n");
        } else {
            cluster_count(g, cfg.d);
        }
    }
}

Stat summarize(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        s.se = sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

double median(std::vector<double> xs) {
    require(!xs.empty(), "median of an empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

LinearProblem<double> sweep_problem(const SweepConfig& cfg) {
    Eigen::VectorXd sigma = cfg.sigma_x_diag.empty()
                                ? Eigen::VectorXd::Ones(cfg.d)
                                : Eigen::Map<const Eigen::VectorXd>(cfg.sigma_x_diag.data(), cfg.d).eval();
    return sample_problem<double>(cfg.d, cfg.noise_var, sigma, cfg.base_seed);
}

TrialResult run_linreg_trial(const SweepConfig& cfg, const LinearProblem<double>& problem, Method method,
                             double grid_value, double beta, std::uint64_t trial_seed) {
    constexpr int kMaxAttempts = 10;
    const Index d = problem.dim();
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t seed =
            attempt == 0 ? trial_seed : derive_seed(trial_seed, 2, static_cast<std::uint64_t>(attempt));
        const Dataset<double> data = sample_dataset(problem, cfg.n, seed);
        Eigen::VectorXd w;
        try {
            w = erm_fit(data);
        } catch (const NumericalError&) {
            continue;
        }
        const std::uint64_t comp_seed = derive_seed(seed, 1);
        TrialResult r;
        r.attempts = attempt + 1;
        Eigen::VectorXd w_hat;
        if (method == Method::Oracle) {
            w_hat = oracle_compress(w, problem, cfg.n, grid_value, comp_seed);
            r.rate_nats = oracle_rate(grid_value, d, cfg.n, problem.noise_var);
        } else {
            ClusterOptions opt;
            opt.k = cluster_count(grid_value, d);
            opt.max_iters = cfg.max_iters;
            opt.restarts = cfg.restarts;
            opt.seed = comp_seed;
            Quantization<double> q;
            switch (method) {
                case Method::KMeans: q = kmeans_quantize(w, opt); break;
                case Method::HessianKMeans: q = hessian_kmeans_quantize(w, hessian_diag(data), opt); break;
                default: q = diameter_reg_quantize(w, hessian_diag(data), beta, opt); break;
            }
            w_hat = reconstruct(q);
            r.rate_nats = rate_estimate(q, d, cfg.rate_mode);
            r.diameter = codebook_diameter(q);
        }
        r.emp_original = empirical_risk(w, data);
        r.emp_compressed = empirical_risk(w_hat, data);
        r.distortion = r.emp_compressed - r.emp_original;
        r.pop_risk = population_risk(w_hat, problem);
        r.pop_uncompressed = population_risk(w, problem);
        r.gen_error = r.pop_risk - r.emp_compressed;
        r.c_wstar = c_wstar_estimate(w_hat, problem.w_star);
        return r;
    }
    throw NumericalError("trial failed: least-squares fit singular in " + std::to_string(kMaxAttempts) +
                         " attempts (seed " + std::to_string(trial_seed) + ")");
}

std::vector<TrialResult> run_linreg_trials(const SweepConfig& cfg, const LinearProblem<double>& problem,
                                           Method method, std::size_t grid_index, double grid_value, double beta) {
    std::vector<TrialResult> out(static_cast<std::size_t>(cfg.trials));
    parallel_for(out.size(), resolve_threads(cfg.threads), [&](std::size_t t) {
        out[t] = run_linreg_trial(cfg, problem, method, grid_value, beta, derive_seed(cfg.base_seed, grid_index, t));
    });
    return out;
}

SweepRecord aggregate(const SweepConfig& cfg, const LinearProblem<double>& problem, Method method,
                      double grid_value, const std::vector<TrialResult>& trials) {
    require(!trials.empty(), "cannot aggregate zero trials");
    auto column = [&](auto field) {
        std::vector<double> xs;
        xs.reserve(trials.size());
        for (const auto& t : trials) xs.push_back(t.*field);
        return xs;
    };
    SweepRecord rec;
    rec.method = method;
    rec.grid_value = grid_value;
    rec.trials = static_cast<int>(trials.size());
    rec.rate_nats = summarize(column(&TrialResult::rate_nats)).mean;
    rec.distortion = summarize(column(&TrialResult::distortion));
    rec.gen = summarize(column(&TrialResult::gen_error));
    rec.pop = summarize(column(&TrialResult::pop_risk));
    rec.pop_uncompressed = summarize(column(&TrialResult::pop_uncompressed));
    const auto diam = column(&TrialResult::diameter);
    rec.diameter_mean = summarize(diam).mean;
    rec.diameter_median = median(diam);
    const auto cw = column(&TrialResult::c_wstar);
    rec.c_wstar_mean = summarize(cw).mean;
    rec.c_wstar_max = *std::max_element(cw.begin(), cw.end());

    BoundInputs<double> in;
    in.n = cfg.n;
    in.d = problem.dim();
    in.noise_var = problem.noise_var;
    in.sigma_x_norm = problem.sigma_x_norm();
    in.c_wstar = cfg.cwstar_policy == CwstarPolicy::Max ? rec.c_wstar_max : rec.c_wstar_mean;
    rec.bound_thm3 = linreg_gen_bound(in.c_wstar, in.sigma_x_norm, in.noise_var, in.n, rec.rate_nats);
    rec.bound_cor1 = tradeoff_bound(rec.rate_nats, in);
    return rec;
}

std::vector<SweepRecord> run_linreg_sweep(const SweepConfig& cfg) {
    validate(cfg);
    require(!cfg.grid.empty(), "sweep grid must be nonempty");
    const auto problem = sweep_problem(cfg);
    std::vector<SweepRecord> out;
    for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
        const auto trials = run_linreg_trials(cfg, problem, cfg.method, g, cfg.grid[g], cfg.beta);
        out.push_back(aggregate(cfg, problem, cfg.method, cfg.grid[g], trials));
    }
    return out;
}

std::vector<SweepRecord> run_beta_sweep(const SweepConfig& cfg) {
    validate(cfg);
    require(!cfg.beta_grid.empty(), "beta grid must be nonempty");
    require(cfg.k >= 1 && cfg.k <= cfg.d, "K must satisfy 1 <= K <= d");
    for (double b : cfg.beta_grid) require(b >= 0 && std::isfinite(b), "beta values must be finite and >= 0");
    const auto problem = sweep_problem(cfg);
    std::vector<SweepRecord> out;
    for (std::size_t g = 0; g < cfg.beta_grid.size(); ++g) {
        const double beta = cfg.beta_grid[g];
        const auto trials = run_linreg_trials(cfg, problem, Method::DiameterReg, g, cfg.k, beta);
        out.push_back(aggregate(cfg, problem, Method::DiameterReg, beta, trials));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<NnRecord> run_nn_sweep(const NnSweepConfig& cfg) {
    require(cfg.seeds >= 1, "seeds must be >= 1");
    require(!cfg.k_grid.empty() && !cfg.beta_grid.empty(), "K and beta grids must be nonempty");
    for (int k : cfg.k_grid) require(k >= 1, "K values must be >= 1");
    for (double b : cfg.beta_grid) require(b >= 0 && std::isfinite(b), "beta values must be finite and >= 0");

    nn::ClassifDataset train, test;
    if (cfg.data_path.empty()) {
        std::tie(train, test) = nn::make_synth_task(cfg.n_train, cfg.n_test, derive_seed(cfg.base_seed, 0));
    } else {
        std::tie(train, test) =
            nn::split_dataset(nn::load_csv_dataset(cfg.data_path), cfg.train_fraction, derive_seed(cfg.base_seed, 0));
    }
    std::vector<int> layers = cfg.layers;
    require(layers.size() >= 2, "layers must list at least input and output widths");
    require(layers.front() == train.features(), "first layer width must equal the feature count");
    require(layers.back() == train.n_classes, "last layer width must equal the class count");

    const std::size_t points = cfg.k_grid.size() * cfg.beta_grid.size();
    std::vector<NnSeedResult> results(static_cast<std::size_t>(cfg.seeds));
    parallel_for(results.size(), resolve_threads(cfg.threads), [&](std::size_t s) {
        NnSeedResult& res = results[s];
        const std::uint64_t model_seed = derive_seed(cfg.base_seed, 1, s);
        nn::TrainOptions opt{cfg.epochs, cfg.learning_rate, model_seed};
        nn::TrainingRun run;
        try {
            run = nn::train_mlp(train, layers, opt);
        } catch (const TrainingError& e) {
            res.error = e.what();
            return;
        }
        const Eigen::VectorXd fisher = nn::fisher_diag(run.model, train);
        res.original = nn::eval_losses(run.model, train, test);
        for (std::size_t ki = 0; ki < cfg.k_grid.size(); ++ki) {
            for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi) {
                const std::size_t g = ki * cfg.beta_grid.size() + bi;
                const auto q = nn::quantize_mlp(run.model, fisher, cfg.k_grid[ki], cfg.beta_grid[bi],
                                                derive_seed(model_seed, 3, g), cfg.max_iters);
                res.quantized.push_back(nn::eval_losses(q.model, train, test));
                res.ratios.push_back(q.compression_ratio);
            }
        }
        res.ok = true;
    });

    int failed = 0;
    for (const auto& r : results) failed += r.ok ? 0 : 1;
    if (failed * 5 > cfg.seeds) {
        std::string why;
        for (const auto& r : results)
            if (!r.ok) {
                why = r.error;
                break;
            }
        throw NumericalError(std::to_string(failed) + " of " + std::to_string(cfg.seeds) +
                             " seeds failed to train: " + why);
    }

    std::vector<NnRecord> out;
    for (std::size_t g = 0; g < points; ++g) {
        NnRecord rec;
        rec.k = cfg.k_grid[g / cfg.beta_grid.size()];
        rec.beta = cfg.beta_grid[g % cfg.beta_grid.size()];
        std::vector<double> tr, te, gp, otr, ote, ogp, ratio;
        for (const auto& r : results) {
            if (!r.ok) continue;
            tr.push_back(r.quantized[g].train_ce);
            te.push_back(r.quantized[g].test_ce);
            gp.push_back(r.quantized[g].gap);
            otr.push_back(r.original.train_ce);
            ote.push_back(r.original.test_ce);
            ogp.push_back(r.original.gap);
            ratio.push_back(r.ratios[g]);
        }
        rec.train_ce = summarize(tr);
        rec.test_ce = summarize(te);
        rec.gap = summarize(gp);
        rec.orig_train_ce = summarize(otr);
        rec.orig_test_ce = summarize(ote);
        rec.orig_gap = summarize(ogp);
        rec.compression_ratio = summarize(ratio).mean;
        rec.seeds_ok = cfg.seeds - failed;
        rec.seeds_failed = failed;
        out.push_back(rec);
    }
    return out;
}

// ---------------------------------------------------------------------------

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RDCOMP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rdcomp
