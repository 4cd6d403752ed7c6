#ifndef RDCOMP_HARNESS_HPP
#define RDCOMP_HARNESS_HPP

// Monte-Carlo sweeps over the linear-regression model and the MLP testbed,
// with aggregation and CSV / SVG reporting.
//
// Seeds: the ground truth w* is drawn from base_seed. Trial t at grid
// point g uses derive_seed(base_seed, g, t) for its dataset; the compressor
// stream is derive_seed(trial_seed, 1). Retry attempt a > 0 after a
// singular fit uses derive_seed(trial_seed, 2, a) in place of trial_seed.

#include "rdcomp/compressors.hpp"
#include "rdcomp/nn.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rdcomp {

enum class Method { Oracle, KMeans, HessianKMeans, DiameterReg };

std::string to_string(Method m);
Method parse_method(const std::string& name);

enum class CwstarPolicy { Max, Mean };

struct SweepConfig {
    Index d = 50;
    Index n = 80;
    double noise_var = 1.0;
    std::vector<double> sigma_x_diag;  // empty means identity
    int trials = 200;
    std::uint64_t base_seed = 0;
    Method method = Method::KMeans;
    std::vector<double> grid;  // K values, or D values for the oracle
    double beta = 0.0;
    int k = 2;                        // fixed K for beta sweeps
    std::vector<double> beta_grid;    // beta sweep grid
    int max_iters = 100;
    int restarts = 1;
    RateMode rate_mode = RateMode::Entropy;
    CwstarPolicy cwstar_policy = CwstarPolicy::Max;
    unsigned threads = 0;  // 0 = RDCOMP_THREADS or hardware concurrency
};

void validate(const SweepConfig& cfg);

struct Stat {
    double mean = 0;
    double se = 0;  // sample sd / sqrt(count)
};

Stat summarize(const std::vector<double>& xs);
double median(std::vector<double> xs);

struct TrialResult {
    double rate_nats = 0;
    double distortion = 0;        // L_S(W_hat) - L_S(W)
    double gen_error = 0;         // L_mu(W_hat) - L_S(W_hat)
    double pop_risk = 0;          // L_mu(W_hat)
    double pop_uncompressed = 0;  // L_mu(W)
    double emp_compressed = 0;    // L_S(W_hat)
    double emp_original = 0;      // L_S(W)
    double c_wstar = 0;           // ||W_hat - w*||^2
    double diameter = 0;          // codebook diameter, 0 for the oracle
    int attempts = 1;
};

struct SweepRecord {
    Method method = Method::KMeans;
    double grid_value = 0;
    double rate_nats = 0;
    Stat distortion;
    Stat gen;
    Stat pop;
    Stat pop_uncompressed;
    double bound_thm3 = 0;  // linear-regression generalization bound at rate_nats
    double bound_cor1 = 0;  // tradeoff bound at rate_nats
    double diameter_mean = 0;
    double diameter_median = 0;
    double c_wstar_mean = 0;
    double c_wstar_max = 0;
    int trials = 0;
};

/// The problem shared by every trial of a sweep.
LinearProblem<double> sweep_problem(const SweepConfig& cfg);

/// One trial: sample data, fit, compress with `method` at `grid_value`
/// (K or D), measure.
TrialResult run_linreg_trial(const SweepConfig& cfg, const LinearProblem<double>& problem, Method method,
                             double grid_value, double beta, std::uint64_t trial_seed);

/// All trials of one grid point, ordered by trial index.
std::vector<TrialResult> run_linreg_trials(const SweepConfig& cfg, const LinearProblem<double>& problem,
                                           Method method, std::size_t grid_index, double grid_value, double beta);

SweepRecord aggregate(const SweepConfig& cfg, const LinearProblem<double>& problem, Method method,
                      double grid_value, const std::vector<TrialResult>& trials);

std::vector<SweepRecord> run_linreg_sweep(const SweepConfig& cfg);

/// Sweeps beta over cfg.beta_grid at fixed K = cfg.k with the
/// diameter-regularized quantizer; grid_value holds beta.
std::vector<SweepRecord> run_beta_sweep(const SweepConfig& cfg);

// ---------------------------------------------------------------------------
// MLP sweep

struct NnSweepConfig {
    int seeds = 20;
    int epochs = 2000;
    double learning_rate = 0.2;
    std::vector<int> layers{2, 16, 16, 2};
    std::vector<int> k_grid{2, 4, 8, 16, 32};
    std::vector<double> beta_grid{0.0};
    Index n_train = 100;
    Index n_test = 2000;
    std::uint64_t base_seed = 0;
    int max_iters = 100;
    std::string data_path;  // optional CSV; synthetic task when empty
    double train_fraction = 0.1;
    unsigned threads = 0;
};

struct NnRecord {
    int k = 0;
    double beta = 0;
    double compression_ratio = 0;  // mean over seeds
    Stat train_ce;
    Stat test_ce;
    Stat gap;
    Stat orig_train_ce;
    Stat orig_test_ce;
    Stat orig_gap;
    int seeds_ok = 0;
    int seeds_failed = 0;
};

struct NnSeedResult {
    bool ok = false;
    std::string error;
    nn::LossReport original;
    std::vector<nn::LossReport> quantized;  // one per (k, beta) grid point, k-major
    std::vector<double> ratios;
};

std::vector<NnRecord> run_nn_sweep(const NnSweepConfig& cfg);

// ---------------------------------------------------------------------------
// Execution and reporting

/// Thread count: explicit value, else RDCOMP_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

/// Runs fn(i) for i in [0, count) on `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

extern const std::vector<std::string> kSweepCsvColumns;

std::string format_number(double x);
std::string sweep_csv(const std::vector<SweepRecord>& records);
void write_csv(const std::vector<SweepRecord>& records, const std::string& path);

std::string nn_csv(const std::vector<NnRecord>& records);
void write_nn_csv(const std::vector<NnRecord>& records, const std::string& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err;  // +-1 se bars; empty for none
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    int width = 720;
    int height = 480;
};

std::string svg_plot(const std::vector<PlotSeries>& series, const PlotSpec& spec);
void write_text(const std::string& text, const std::string& path);

/// Named column from a sweep record; "distortion", "gen", "pop" and
/// "pop_uncompressed" carry standard errors.
PlotSeries series_from(const std::vector<SweepRecord>& records, const std::string& x_column,
                       const std::string& y_column, const std::string& label);

void render_svg(const std::vector<SweepRecord>& records, const PlotSpec& spec, const std::string& x_column,
                const std::vector<std::string>& y_columns, const std::string& path);

}  // namespace rdcomp

#endif  // RDCOMP_HARNESS_HPP
