#include "rdcomp/cli.hpp"

#include "rdcomp/bounds.hpp"
#include "rdcomp/harness.hpp"
#include "rdcomp/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace rdcomp {

using nlohmann::json;

json quantization_report(const Quantization<double>& q, RateMode mode) {
    const auto d = static_cast<Index>(q.assignments.size());
    const double rate = rate_estimate(q, d, mode);
    json j;
    j["centroids"] = std::vector<double>(q.centroids.data(), q.centroids.data() + q.centroids.size());
    j["assignments"] = q.assignments;
    j["k"] = q.k;
    j["rate_nats"] = rate;
    j["rate_bits"] = nats_to_bits(rate);
    j["diameter"] = codebook_diameter(q);
    j["objective"] = q.final_objective;
    j["penalized_objective"] = q.penalized_objective;
    j["iterations_run"] = q.iterations_run;
    return j;
}

namespace {

// Registers CLI options together with a JSON setter under the same name so
// a config document can fill any option the command line left unset.
class Binder {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
        CLI::Option* opt = app->add_option("--" + name, var, desc);
        if constexpr (is_vector<T>::value) opt->delimiter(',');
        if constexpr (!is_vector<T>::value) opt->capture_default_str();
        entries_.push_back({app, name, opt, [&var](const json& v) { assign(var, v); }});
        return opt;
    }

    /// Applies config values: keys nested under the subcommand name win
    /// over top-level keys; command-line values win over both.
    void apply(const json& cfg) const {
        for (const auto& e : entries_) {
            if (e.option->count() > 0) continue;
            if (e.app->get_parent() != nullptr && !e.app->parsed()) continue;
            const json* source = nullptr;
            if (e.app->get_parent() != nullptr && cfg.contains(e.app->get_name()) &&
                cfg[e.app->get_name()].is_object() && cfg[e.app->get_name()].contains(e.name)) {
                source = &cfg[e.app->get_name()][e.name];
            } else if (cfg.contains(e.name)) {
                source = &cfg[e.name];
            }
            if (source == nullptr) continue;
            try {
                e.setter(*source);
            } catch (const json::exception& ex) {
                throw ParameterError("config field '" + e.name + "': " + ex.what());
            }
        }
    }

private:
    template <typename T>
    struct is_vector : std::false_type {};
    template <typename T>
    struct is_vector<std::vector<T>> : std::true_type {};

    template <typename T>
    static void assign(T& var, const json& v) {
        if constexpr (is_vector<T>::value) {
            if (v.is_string()) {
                var.clear();
                std::stringstream ss(v.get<std::string>());
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    std::istringstream ts(tok);
                    typename T::value_type x{};
                    if (!(ts >> x)) throw ParameterError("bad list element '" + tok + "'");
                    var.push_back(x);
                }
            } else {
                var = v.get<T>();
            }
        } else {
            var = v.get<T>();
        }
    }

    struct Entry {
        CLI::App* app;
        std::string name;
        CLI::Option* option;
        std::function<void(const json&)> setter;
    };
    std::vector<Entry> entries_;
};

struct GlobalOptions {
    std::string config;
    std::string out;
    std::string svg;
    std::uint64_t seed = 0;
    int trials = 200;
    unsigned threads = 0;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        json cfg = json::parse(in);
        if (!cfg.is_object()) throw ParameterError("config " + path + " must be a JSON object");
        return cfg;
    } catch (const json::parse_error& e) {
        throw ParameterError("config " + path + ": " + e.what());
    }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        write_text(text, path);
    }
}

std::string svg_path(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    return (std::filesystem::path(dir) / name).string();
}

RateMode parse_rate_mode(const std::string& s) {
    if (s == "entropy") return RateMode::Entropy;
    if (s == "upper") return RateMode::UpperBound;
    throw ParameterError("rate mode must be 'entropy' or 'upper'");
}

CwstarPolicy parse_cwstar(const std::string& s) {
    if (s == "max") return CwstarPolicy::Max;
    if (s == "mean") return CwstarPolicy::Mean;
    throw ParameterError("c-wstar policy must be 'max' or 'mean'");
}

void linreg_figures(const std::vector<SweepRecord>& recs, const SweepConfig& cfg, const std::string& dir,
                    const std::string& stem) {
    PlotSpec spec;
    spec.x_label = "rate I(W; W_hat) [nats]";

    spec.title = "Generalization error vs rate (" + stem + ")";
    spec.y_label = "generalization error";
    std::vector<PlotSeries> gen{series_from(recs, "rate_nats", "gen", "measured gen"),
                                series_from(recs, "rate_nats", "bound_thm3", "linear-regression bound")};
    PlotSeries erm{"uncompressed ERM (exact)", {}, {}, {}};
    const double exact = exact_gen_error<double>(cfg.d, cfg.n, cfg.noise_var);
    for (const auto& r : recs) {
        erm.x.push_back(r.rate_nats);
        erm.y.push_back(exact);
    }
    gen.push_back(erm);
    write_text(svg_plot(gen, spec), svg_path(dir, stem + "_gen.svg"));

    spec.title = "Distortion vs rate (" + stem + ")";
    spec.y_label = "distortion L_S(W_hat) - L_S(W)";
    PlotSeries dr{"D(R) upper bound", {}, {}, {}};
    double rmax = 0;
    for (const auto& r : recs) rmax = std::max(rmax, r.rate_nats);
    for (int i = 0; i <= 40; ++i) {
        const double rate = rmax * i / 40.0;
        dr.x.push_back(rate);
        dr.y.push_back(dr_upper_distortion<double>(rate, cfg.d, cfg.n, cfg.noise_var));
    }
    write_text(svg_plot({series_from(recs, "rate_nats", "distortion", "measured distortion"), dr}, spec),
               svg_path(dir, stem + "_distortion.svg"));

    spec.title = "Population risk vs rate (" + stem + ")";
    spec.y_label = "population risk";
    write_text(svg_plot({series_from(recs, "rate_nats", "pop", "compressed"),
                         series_from(recs, "rate_nats", "pop_uncompressed", "uncompressed ERM")},
                        spec),
               svg_path(dir, stem + "_pop.svg"));
}

void beta_figures(const std::vector<SweepRecord>& recs, const std::string& dir) {
    PlotSpec spec;
    spec.x_label = "beta";
    spec.title = "Diameter regularization sweep";
    spec.y_label = "risk";
    write_text(svg_plot({series_from(recs, "grid_value", "gen", "generalization error"),
                         series_from(recs, "grid_value", "distortion", "distortion"),
                         series_from(recs, "grid_value", "pop", "population risk")},
                        spec),
               svg_path(dir, "beta_sweep_risks.svg"));
    spec.title = "Codebook diameter vs beta";
    spec.y_label = "squared diameter";
    write_text(svg_plot({series_from(recs, "grid_value", "diameter", "mean"),
                         series_from(recs, "grid_value", "diameter_median", "median")},
                        spec),
               svg_path(dir, "beta_sweep_diameter.svg"));
}

void nn_figures(const std::vector<NnRecord>& recs, const std::vector<double>& betas, const std::string& dir) {
    PlotSpec spec;
    spec.x_label = "compression ratio";
    spec.y_label = "cross-entropy";
    auto build = [&](const std::string& what, double beta) {
        PlotSeries s;
        std::ostringstream label;
        label << what << " (beta=" << beta << ")";
        s.label = label.str();
        for (const auto& r : recs) {
            if (r.beta != beta) continue;
            s.x.push_back(r.compression_ratio);
            const Stat& st = what == "train" ? r.train_ce : what == "test" ? r.test_ce : r.gap;
            s.y.push_back(st.mean);
            s.err.push_back(st.se);
        }
        return s;
    };
    std::vector<PlotSeries> emp, pop;
    for (double b : betas) {
        emp.push_back(build("train", b));
        pop.push_back(build("test", b));
        pop.push_back(build("gap", b));
    }
    if (!recs.empty()) {
        PlotSeries base_train{"original train", {}, {}, {}}, base_test{"original test", {}, {}, {}};
        for (const auto& r : recs) {
            base_train.x.push_back(r.compression_ratio);
            base_train.y.push_back(r.orig_train_ce.mean);
            base_test.x.push_back(r.compression_ratio);
            base_test.y.push_back(r.orig_test_ce.mean);
        }
        emp.push_back(base_train);
        pop.push_back(base_test);
    }
    spec.title = "Empirical risk after quantization";
    write_text(svg_plot(emp, spec), svg_path(dir, "nn_empirical.svg"));
    spec.title = "Population risk and generalization gap";
    write_text(svg_plot(pop, spec), svg_path(dir, "nn_population.svg"));
}

std::string bounds_table(Index d, Index n, double noise_var, double c_wstar, double sigma_x_norm,
                         double sub_gaussian_var, const std::string& axis, double lo, double hi, int steps) {
    require(steps >= 1, "grid-steps must be >= 1");
    require(hi >= lo, "grid-max must be >= grid-min");
    BoundInputs<double> in{n, d, noise_var, sub_gaussian_var, c_wstar, sigma_x_norm};
    std::string out;
    auto row = [&](std::initializer_list<double> xs) {
        bool first = true;
        for (double x : xs) {
            if (!first) out += ',';
            out += std::isnan(x) ? std::string() : format_number(x);
            first = false;
        }
        out += '\n';
    };
    auto at = [&](int i) { return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1); };
    if (axis == "rate") {
        require(lo >= 0, "rates must be >= 0");
        out += "rate_nats,rate_bits,mi_gen_bound,linreg_gen_bound,dr_upper_distortion,tradeoff_bound\n";
        for (int i = 0; i < steps; ++i) {
            const double r = at(i);
            row({r, nats_to_bits(r), mi_gen_bound(sub_gaussian_var, n, r),
                 linreg_gen_bound(c_wstar, sigma_x_norm, noise_var, n, r), dr_upper_distortion(r, d, n, noise_var),
                 tradeoff_bound(r, in)});
        }
    } else if (axis == "distortion") {
        require(lo > 0, "distortions must be > 0");
        out += "distortion,rd_upper_rate_nats,rd_upper_rate_bits,oracle_rate_nats,oracle_rate_bits\n";
        const double oracle_max = static_cast<double>(d) * noise_var / static_cast<double>(n);
        for (int i = 0; i < steps; ++i) {
            const double D = at(i);
            const double rd = rd_upper_rate(D, d, n, noise_var);
            const double orc = D <= oracle_max ? oracle_rate(D, d, n, noise_var) : std::nan("");
            row({D, rd, nats_to_bits(rd), orc, std::isnan(orc) ? orc : nats_to_bits(orc)});
        }
    } else {
        throw ParameterError("axis must be 'rate' or 'distortion'");
    }
    return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Model-compression rate/distortion/generalization toolkit", "rdcomp"};
    app.fallthrough();
    app.require_subcommand(1);
    Binder bind;
    GlobalOptions g;
    app.add_option("--config", g.config, "JSON config; command-line flags override its values");
    bind.add(&app, "out", g.out, "output path (stdout when omitted)");
    bind.add(&app, "svg", g.svg, "directory for SVG figures");
    bind.add(&app, "seed", g.seed, "base seed");
    bind.add(&app, "trials", g.trials, "Monte-Carlo trials per grid point");
    bind.add(&app, "threads", g.threads, "worker threads (0 = RDCOMP_THREADS or all cores)");

    // linreg / beta-sweep share the problem flags.
    SweepConfig lin;
    std::string method = "kmeans", rate_mode = "entropy", cwstar = "max";
    auto problem_flags = [&](CLI::App* sub) {
        bind.add(sub, "d", lin.d, "parameter dimension");
        bind.add(sub, "n", lin.n, "training samples");
        bind.add(sub, "noise-var", lin.noise_var, "noise variance sigma'^2");
        bind.add(sub, "sigma-x-diag", lin.sigma_x_diag, "diagonal of Sigma_X (default identity)");
        bind.add(sub, "iters", lin.max_iters, "K-means iterations");
        bind.add(sub, "restarts", lin.restarts, "K-means random restarts");
        bind.add(sub, "rate-mode", rate_mode, "quantizer rate: entropy | upper");
        bind.add(sub, "c-wstar-policy", cwstar, "C(w*) used for bounds: max | mean");
    };
    CLI::App* linreg = app.add_subcommand("linreg", "linear-regression rate sweep (oracle or K-means family)");
    problem_flags(linreg);
    bind.add(linreg, "method", method, "oracle | kmeans | hessian_kmeans | diameter_reg");
    bind.add(linreg, "grid", lin.grid, "K values (clustering) or D values (oracle)");
    bind.add(linreg, "beta", lin.beta, "diameter penalty for diameter_reg");

    CLI::App* beta_sweep = app.add_subcommand("beta-sweep", "diameter-regularization sweep at fixed K");
    problem_flags(beta_sweep);
    lin.k = 2;
    lin.beta_grid = {0, 1, 10, 100};
    bind.add(beta_sweep, "k", lin.k, "number of clusters");
    bind.add(beta_sweep, "beta-grid", lin.beta_grid, "beta values");

    NnSweepConfig nncfg;
    std::string layers = "2,16,16,2";
    CLI::App* nn_demo = app.add_subcommand("nn-demo", "MLP quantization demo on a synthetic task");
    bind.add(nn_demo, "seeds", nncfg.seeds, "independently initialized models");
    bind.add(nn_demo, "epochs", nncfg.epochs, "full-batch gradient steps");
    bind.add(nn_demo, "lr", nncfg.learning_rate, "learning rate");
    bind.add(nn_demo, "layers", layers, "comma-separated layer widths");
    bind.add(nn_demo, "k-grid", nncfg.k_grid, "clusters per layer");
    bind.add(nn_demo, "beta", nncfg.beta_grid, "diameter penalties (comma-separated)");
    bind.add(nn_demo, "n-train", nncfg.n_train, "synthetic training samples");
    bind.add(nn_demo, "n-test", nncfg.n_test, "synthetic test samples");
    bind.add(nn_demo, "iters", nncfg.max_iters, "K-means iterations");
    bind.add(nn_demo, "data", nncfg.data_path, "CSV with columns feature...,label");
    bind.add(nn_demo, "train-fraction", nncfg.train_fraction, "train share when --data is given");

    Index bd = 50, bn = 80;
    // NaN grid bounds mean "pick a default for the chosen axis".
    double bnoise = 1, bc = 0, bsig = 1, bsub = 1, gmin = std::nan(""), gmax = std::nan("");
    int gsteps = 41;
    std::string axis = "rate";
    CLI::App* bounds = app.add_subcommand("bounds", "tabulate the closed-form bounds");
    bind.add(bounds, "d", bd, "parameter dimension");
    bind.add(bounds, "n", bn, "training samples");
    bind.add(bounds, "noise-var", bnoise, "noise variance sigma'^2");
    bind.add(bounds, "c-wstar", bc, "C(w*)");
    bind.add(bounds, "sigma-x-norm", bsig, "spectral norm of Sigma_X");
    bind.add(bounds, "sub-gaussian-var", bsub, "sigma^2 for the generic mutual-information bound");
    bind.add(bounds, "axis", axis, "rate | distortion");
    bind.add(bounds, "grid-min", gmin, "first grid value");
    bind.add(bounds, "grid-max", gmax, "last grid value");
    bind.add(bounds, "grid-steps", gsteps, "number of grid values");

    std::string weights_path, hessian_path, qrate = "entropy";
    int qk = 2, qiters = 100, qrestarts = 1;
    double qbeta = 0;
    CLI::App* quantize = app.add_subcommand("quantize", "quantize a weight file");
    bind.add(quantize, "weights", weights_path, "weights, one float per line (required)");
    bind.add(quantize, "hessian", hessian_path, "Hessian diagonal, same length (default uniform)");
    bind.add(quantize, "k", qk, "number of clusters");
    bind.add(quantize, "beta", qbeta, "diameter penalty");
    bind.add(quantize, "iters", qiters, "maximum iterations");
    bind.add(quantize, "restarts", qrestarts, "random restarts");
    bind.add(quantize, "rate-mode", qrate, "entropy | upper");

    std::vector<const char*> argv{"rdcomp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParameter;
    }
    if (!g.config.empty()) bind.apply(load_config(g.config));

    if (linreg->parsed() || beta_sweep->parsed()) {
        lin.trials = g.trials;
        lin.base_seed = g.seed;
        lin.threads = g.threads;
        lin.rate_mode = parse_rate_mode(rate_mode);
        lin.cwstar_policy = parse_cwstar(cwstar);
        std::vector<SweepRecord> recs;
        std::string stem;
        if (linreg->parsed()) {
            lin.method = parse_method(method);
            if (lin.grid.empty()) {
                lin.grid = lin.method == Method::Oracle
                               ? std::vector<double>{0.625, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01}
                               : std::vector<double>{1, 2, 3, 4, 6, 8, 12, 16, 25, 50};
                if (lin.method == Method::Oracle) {
                    const double top = static_cast<double>(lin.d) * lin.noise_var / static_cast<double>(lin.n);
                    for (double& v : lin.grid) v *= top / 0.625;
                } else {
                    std::erase_if(lin.grid, [&](double k) { return k > static_cast<double>(lin.d); });
                }
            }
            recs = run_linreg_sweep(lin);
            stem = "linreg_" + to_string(lin.method);
        } else {
            recs = run_beta_sweep(lin);
        }
        emit(sweep_csv(recs), g.out, out);
        if (!g.svg.empty()) {
            if (linreg->parsed()) {
                linreg_figures(recs, lin, g.svg, stem);
            } else {
                beta_figures(recs, g.svg);
            }
        }
        return kExitOk;
    }

    if (nn_demo->parsed()) {
        nncfg.layers.clear();
        std::stringstream ss(layers);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                nncfg.layers.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw ParameterError("bad layer width '" + tok + "'");
            }
        }
        nncfg.base_seed = g.seed;
        nncfg.threads = g.threads;
        const auto recs = run_nn_sweep(nncfg);
        emit(nn_csv(recs), g.out, out);
        if (!g.svg.empty()) nn_figures(recs, nncfg.beta_grid, g.svg);
        return kExitOk;
    }

    if (bounds->parsed()) {
        const bool by_rate = axis == "rate";
        if (std::isnan(gmin)) gmin = by_rate ? 0.0 : 0.01;
        if (std::isnan(gmax)) {
            gmax = by_rate ? 4.0 * static_cast<double>(bd)
                           : static_cast<double>(bd) * bnoise / static_cast<double>(std::max<Index>(1, bn - bd - 1));
        }
        emit(bounds_table(bd, bn, bnoise, bc, bsig, bsub, axis, gmin, gmax, gsteps), g.out, out);
        return kExitOk;
    }

    if (quantize->parsed()) {
        require(!weights_path.empty(), "quantize needs --weights");
        const Eigen::VectorXd w = read_weights(weights_path);
        const Eigen::VectorXd h = hessian_path.empty() ? Eigen::VectorXd::Ones(w.size()) : read_weights(hessian_path);
        ClusterOptions opt;
        opt.k = qk;
        opt.max_iters = qiters;
        opt.restarts = qrestarts;
        opt.seed = g.seed;
        const auto q = diameter_reg_quantize<double>(w, h, qbeta, opt);
        emit(quantization_report(q, parse_rate_mode(qrate)).dump(2) + "\n", g.out, out);
        return kExitOk;
    }
    return kExitParameter;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace rdcomp
