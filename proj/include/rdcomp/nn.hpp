#ifndef RDCOMP_NN_HPP
#define RDCOMP_NN_HPP

// Toy nonlinear testbed: a ReLU multilayer perceptron trained by full-batch
// gradient descent on softmax cross-entropy, with layer-wise weight
// quantization.

#include "rdcomp/compressors.hpp"
#include "rdcomp/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rdcomp::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ClassifDataset {
    MatrixXd inputs;          // n x p
    std::vector<int> labels;  // n
    int n_classes = 2;

    Index size() const { return inputs.rows(); }
    Index features() const { return inputs.cols(); }
};

void validate(const ClassifDataset& data);

/// Fully connected network; hidden layers use ReLU, the last layer emits
/// logits. Flattened parameter order is, per layer, the weight matrix in
/// column-major order followed by the bias vector.
struct MlpModel {
    std::vector<int> layer_dims;
    std::vector<MatrixXd> weights;  // layer l: dims[l+1] x dims[l]
    std::vector<VectorXd> biases;   // layer l: dims[l+1]

    std::size_t layers() const { return weights.size(); }
    Index parameter_count() const;
    /// Parameter count of each layer (weights plus bias).
    std::vector<Index> layer_sizes() const;
    VectorXd flatten() const;
    void unflatten(const VectorXd& params);
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

/// Logits, n_classes x n.
MatrixXd forward(const MlpModel& model, const MatrixXd& inputs);

/// Mean softmax cross-entropy.
double cross_entropy(const MlpModel& model, const ClassifDataset& data);

/// Gradient of the mean cross-entropy, flattened in parameter order.
VectorXd loss_gradient(const MlpModel& model, const ClassifDataset& data);

/// Empirical Fisher diagonal: mean over samples of the squared per-sample
/// gradient.
VectorXd fisher_diag(const MlpModel& model, const ClassifDataset& data);

struct TrainOptions {
    int epochs = 2000;
    double learning_rate = 0.2;
    std::uint64_t seed = 0;
};

struct TrainingRun {
    MlpModel model;
    std::vector<double> loss_history;  // training loss before each epoch's step
};

TrainingRun train_mlp(const ClassifDataset& data, const std::vector<int>& layer_dims, const TrainOptions& opt);

struct LossReport {
    double train_ce = 0;
    double test_ce = 0;
    double gap = 0;  // test_ce - train_ce
};

LossReport eval_losses(const MlpModel& model, const ClassifDataset& train, const ClassifDataset& test);

/// (sum_l d_l log2 k_l + 32 sum_l k_l) / (32 sum_l d_l).
double compression_ratio(const std::vector<Index>& layer_sizes, const std::vector<int>& k_per_layer);
double compression_ratio(const MlpModel& model, const std::vector<int>& k_per_layer);

struct QuantizedMlp {
    MlpModel model;
    std::vector<Quantization<double>> layers;
    std::vector<int> k_used;  // per layer, capped at the number of distinct values
    double compression_ratio = 1;
};

/// Quantizes each layer (weights and bias pooled) with the
/// diameter-regularized Hessian-weighted K-means. The requested k is capped
/// at the number of distinct parameter values in the layer.
QuantizedMlp quantize_mlp(const MlpModel& model, const VectorXd& h_diag, const std::vector<int>& k_per_layer,
                          double beta, std::uint64_t seed, int max_iters = 100);
QuantizedMlp quantize_mlp(const MlpModel& model, const VectorXd& h_diag, int k, double beta, std::uint64_t seed,
                          int max_iters = 100);

/// Two interleaved crescents in the plane with Gaussian feature noise
/// (sd 0.2); classes balanced to within one sample, in shuffled order. Train and test use independent streams.
std::pair<ClassifDataset, ClassifDataset> make_synth_task(Index n_train, Index n_test, std::uint64_t seed,
                                                           double noise_sd = 0.2);

/// Reads a CSV with columns feature_1, ..., feature_p, label. A header row
/// is skipped when its first field is not numeric.
ClassifDataset load_csv_dataset(const std::string& path);

/// Shuffles (seeded) and splits into train / test.
std::pair<ClassifDataset, ClassifDataset> split_dataset(const ClassifDataset& data, double train_fraction,
                                                         std::uint64_t seed);

}  // namespace rdcomp::nn

#endif  // RDCOMP_NN_HPP
