#include "rdcomp/nn.hpp"

#include "rdcomp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace rdcomp::nn {

void validate(const ClassifDataset& data) {
    require(data.n_classes >= 2, "n_classes must be >= 2");
    require(data.size() >= 1, "dataset must contain at least one sample");
    require(static_cast<Index>(data.labels.size()) == data.size(), "label count must equal sample count");
    for (int label : data.labels) require(label >= 0 && label < data.n_classes, "label out of range");
}

Index MlpModel::parameter_count() const {
    Index total = 0;
    for (Index s : layer_sizes()) total += s;
    return total;
}

std::vector<Index> MlpModel::layer_sizes() const {
    std::vector<Index> sizes;
    for (std::size_t l = 0; l < weights.size(); ++l) sizes.push_back(weights[l].size() + biases[l].size());
    return sizes;
}

VectorXd MlpModel::flatten() const {
    VectorXd out(parameter_count());
    Index off = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.segment(off, weights[l].size()) = weights[l].reshaped();
        off += weights[l].size();
        out.segment(off, biases[l].size()) = biases[l];
        off += biases[l].size();
    }
    return out;
}

void MlpModel::unflatten(const VectorXd& params) {
    require(params.size() == parameter_count(), "parameter vector length does not match model");
    Index off = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l].reshaped() = params.segment(off, weights[l].size());
        off += weights[l].size();
        biases[l] = params.segment(off, biases[l].size());
        off += biases[l].size();
    }
}

MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
    require(layer_dims.size() >= 2, "need at least input and output layer dims");
    for (int d : layer_dims) require(d >= 1, "layer dims must be >= 1");
    require(layer_dims.back() >= 2, "output layer must have >= 2 classes");
    Rng rng(seed);
    MlpModel m;
    m.layer_dims = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        MatrixXd w(layer_dims[l + 1], fan_in);
        for (Index c = 0; c < w.cols(); ++c)
            for (Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.push_back(VectorXd::Zero(layer_dims[l + 1]));
    }
    return m;
}

namespace {

struct ForwardCache {
    std::vector<MatrixXd> pre;   // pre-activations per layer
    std::vector<MatrixXd> post;  // post[0] = inputs^T, post[l+1] = act(pre[l])
};

ForwardCache forward_cached(const MlpModel& m, const MatrixXd& inputs) {
    require(inputs.cols() == m.layer_dims.front(), "input width does not match model");
    ForwardCache fc;
    fc.post.push_back(inputs.transpose());
    for (std::size_t l = 0; l < m.layers(); ++l) {
        MatrixXd z = m.weights[l] * fc.post.back();
        z.colwise() += m.biases[l];
        fc.pre.push_back(z);
        if (l + 1 < m.layers()) {
            fc.post.push_back(z.cwiseMax(0.0));
        } else {
            fc.post.push_back(std::move(z));
        }
    }
    return fc;
}

// Column-wise log-sum-exp.
Eigen::RowVectorXd log_sum_exp(const MatrixXd& logits) {
    const Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
    return mx.array() + (logits.rowwise() - mx).array().exp().colwise().sum().log();
}

VectorXd backprop(const MlpModel& m, const ForwardCache& fc, const std::vector<int>& labels) {
    const MatrixXd& logits = fc.post.back();
    const Index n = logits.cols();
    const Eigen::RowVectorXd lse = log_sum_exp(logits);
    MatrixXd delta = (logits.rowwise() - lse).array().exp().matrix();  // softmax
    for (Index i = 0; i < n; ++i) delta(labels[static_cast<std::size_t>(i)], i) -= 1.0;
    delta /= static_cast<double>(n);

    std::vector<MatrixXd> grad_w(m.layers());
    std::vector<VectorXd> grad_b(m.layers());
    for (std::size_t l = m.layers(); l-- > 0;) {
        grad_w[l] = delta * fc.post[l].transpose();
        grad_b[l] = delta.rowwise().sum();
        if (l > 0) {
            MatrixXd up = m.weights[l].transpose() * delta;
            delta = (fc.pre[l - 1].array() > 0.0).select(up, 0.0);
        }
    }
    VectorXd out(m.parameter_count());
    Index off = 0;
    for (std::size_t l = 0; l < m.layers(); ++l) {
        out.segment(off, grad_w[l].size()) = grad_w[l].reshaped();
        off += grad_w[l].size();
        out.segment(off, grad_b[l].size()) = grad_b[l];
        off += grad_b[l].size();
    }
    return out;
}

double mean_ce(const MatrixXd& logits, const std::vector<int>& labels) {
    const Eigen::RowVectorXd lse = log_sum_exp(logits);
    double total = 0;
    for (Index i = 0; i < logits.cols(); ++i) total += lse(i) - logits(labels[static_cast<std::size_t>(i)], i);
    return total / static_cast<double>(logits.cols());
}

}  // namespace

MatrixXd forward(const MlpModel& model, const MatrixXd& inputs) {
    return forward_cached(model, inputs).post.back();
}

double cross_entropy(const MlpModel& model, const ClassifDataset& data) {
    validate(data);
    require(data.n_classes == model.layer_dims.back(), "class count does not match output layer");
    return mean_ce(forward(model, data.inputs), data.labels);
}

VectorXd loss_gradient(const MlpModel& model, const ClassifDataset& data) {
    validate(data);
    require(data.n_classes == model.layer_dims.back(), "class count does not match output layer");
    return backprop(model, forward_cached(model, data.inputs), data.labels);
}

VectorXd fisher_diag(const MlpModel& model, const ClassifDataset& data) {
    validate(data);
    require(data.n_classes == model.layer_dims.back(), "class count does not match output layer");
    VectorXd acc = VectorXd::Zero(model.parameter_count());
    for (Index i = 0; i < data.size(); ++i) {
        const ForwardCache fc = forward_cached(model, data.inputs.row(i));
        acc += backprop(model, fc, {data.labels[static_cast<std::size_t>(i)]}).cwiseAbs2();
    }
    return acc / static_cast<double>(data.size());
}

TrainingRun train_mlp(const ClassifDataset& data, const std::vector<int>& layer_dims, const TrainOptions& opt) {
    validate(data);
    require(opt.epochs >= 1, "epochs must be >= 1");
    require(opt.learning_rate >= 0 && std::isfinite(opt.learning_rate), "learning rate must be finite and >= 0");
    require(layer_dims.front() == data.features(), "input layer width must equal feature count");
    require(layer_dims.back() == data.n_classes, "output layer width must equal class count");
    TrainingRun run{init_mlp(layer_dims, opt.seed), {}};
    run.loss_history.reserve(static_cast<std::size_t>(opt.epochs) + 1);
    VectorXd params = run.model.flatten();
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const ForwardCache fc = forward_cached(run.model, data.inputs);
        const double loss = mean_ce(fc.post.back(), data.labels);
        if (!std::isfinite(loss)) throw TrainingError("training loss became non-finite at epoch " + std::to_string(epoch));
        run.loss_history.push_back(loss);
        if (opt.learning_rate == 0.0) continue;
        params -= opt.learning_rate * backprop(run.model, fc, data.labels);
        if (!params.allFinite()) throw TrainingError("parameters became non-finite at epoch " + std::to_string(epoch));
        run.model.unflatten(params);
    }
    const double final_loss = cross_entropy(run.model, data);
    if (!std::isfinite(final_loss)) throw TrainingError("final training loss is non-finite");
    run.loss_history.push_back(final_loss);
    return run;
}

LossReport eval_losses(const MlpModel& model, const ClassifDataset& train, const ClassifDataset& test) {
    LossReport r;
    r.train_ce = cross_entropy(model, train);
    r.test_ce = cross_entropy(model, test);
    r.gap = r.test_ce - r.train_ce;
    return r;
}

double compression_ratio(const std::vector<Index>& layer_sizes, const std::vector<int>& k_per_layer) {
    require(layer_sizes.size() == k_per_layer.size(), "need one k per layer");
    require(!layer_sizes.empty(), "model has no layers");
    double payload = 0;
    double total = 0;
    for (std::size_t l = 0; l < layer_sizes.size(); ++l) {
        require(k_per_layer[l] >= 1, "k must be >= 1");
        const double d = static_cast<double>(layer_sizes[l]);
        payload += d * std::log2(static_cast<double>(k_per_layer[l])) + 32.0 * k_per_layer[l];
        total += 32.0 * d;
    }
    return payload / total;
}

double compression_ratio(const MlpModel& model, const std::vector<int>& k_per_layer) {
    return compression_ratio(model.layer_sizes(), k_per_layer);
}

QuantizedMlp quantize_mlp(const MlpModel& model, const VectorXd& h_diag, const std::vector<int>& k_per_layer,
                          double beta, std::uint64_t seed, int max_iters) {
    require(h_diag.size() == model.parameter_count(), "Hessian diagonal length must equal parameter count");
    require(k_per_layer.size() == model.layers(), "need one k per layer");
    const VectorXd params = model.flatten();
    VectorXd out(params.size());
    QuantizedMlp q;
    Index off = 0;
    const auto sizes = model.layer_sizes();
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        require(k_per_layer[l] >= 1, "k must be >= 1");
        const VectorXd w = params.segment(off, sizes[l]);
        const VectorXd h = h_diag.segment(off, sizes[l]);
        const std::set<double> distinct(w.data(), w.data() + w.size());
        const int k = std::min<int>(k_per_layer[l], static_cast<int>(distinct.size()));
        ClusterOptions opt;
        opt.k = k;
        opt.max_iters = max_iters;
        opt.seed = derive_seed(seed, l);
        auto layer_q = diameter_reg_quantize<double>(w, h, beta, opt);
        out.segment(off, sizes[l]) = reconstruct(layer_q);
        q.layers.push_back(std::move(layer_q));
        q.k_used.push_back(k);
        off += sizes[l];
    }
    q.model = model;
    q.model.unflatten(out);
    q.compression_ratio = compression_ratio(sizes, q.k_used);
    return q;
}

QuantizedMlp quantize_mlp(const MlpModel& model, const VectorXd& h_diag, int k, double beta, std::uint64_t seed,
                          int max_iters) {
    return quantize_mlp(model, h_diag, std::vector<int>(model.layers(), k), beta, seed, max_iters);
}

std::pair<ClassifDataset, ClassifDataset> make_synth_task(Index n_train, Index n_test, std::uint64_t seed,
                                                           double noise_sd) {
    require(n_train >= 1 && n_test >= 1, "dataset sizes must be >= 1");
    auto draw = [noise_sd](Index n, std::uint64_t s) {
        Rng rng(s);
        ClassifDataset data{MatrixXd(n, 2), std::vector<int>(static_cast<std::size_t>(n)), 2};
        // Balanced classes in shuffled order.
        for (std::size_t i = 0; i < data.labels.size(); ++i) data.labels[i] = static_cast<int>(i % 2);
        for (std::size_t i = data.labels.size(); i > 1; --i) std::swap(data.labels[i - 1], data.labels[rng.below(i)]);
        for (Index i = 0; i < n; ++i) {
            const int label = data.labels[static_cast<std::size_t>(i)];
            const double t = std::numbers::pi * rng.uniform();
            double x = std::cos(t);
            double y = std::sin(t);
            if (label == 1) {
                x = 1.0 - x;
                y = 0.5 - y;
            }
            data.inputs(i, 0) = x + noise_sd * rng.gaussian();
            data.inputs(i, 1) = y + noise_sd * rng.gaussian();
        }
        return data;
    };
    return {draw(n_train, derive_seed(seed, 0)), draw(n_test, derive_seed(seed, 1))};
}

ClassifDataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        bool numeric = true;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(field, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw ParameterError("non-numeric field in " + path);
        }
        first = false;
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "dataset " + path + " has no rows");
    const std::size_t width = rows.front().size();
    require(width >= 2, "dataset needs at least one feature and a label column");
    ClassifDataset data{MatrixXd(static_cast<Index>(rows.size()), static_cast<Index>(width - 1)),
                        std::vector<int>(rows.size()), 2};
    int max_label = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == width, "ragged row in " + path);
        for (std::size_t j = 0; j + 1 < width; ++j) data.inputs(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        const double lab = rows[i].back();
        require(lab >= 0 && lab == std::floor(lab), "labels must be nonnegative integers");
        data.labels[i] = static_cast<int>(lab);
        max_label = std::max(max_label, data.labels[i]);
    }
    data.n_classes = std::max(2, max_label + 1);
    return data;
}

std::pair<ClassifDataset, ClassifDataset> split_dataset(const ClassifDataset& data, double train_fraction,
                                                         std::uint64_t seed) {
    validate(data);
    require(train_fraction > 0 && train_fraction < 1, "train fraction must lie in (0, 1)");
    std::vector<Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
    require(n_train >= 1 && n_train < order.size(), "split leaves an empty partition");
    auto take = [&](std::size_t lo, std::size_t hi) {
        ClassifDataset part{MatrixXd(static_cast<Index>(hi - lo), data.features()), {}, data.n_classes};
        for (std::size_t i = lo; i < hi; ++i) {
            part.inputs.row(static_cast<Index>(i - lo)) = data.inputs.row(order[i]);
            part.labels.push_back(data.labels[static_cast<std::size_t>(order[i])]);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, order.size())};
}

}  // namespace rdcomp::nn
