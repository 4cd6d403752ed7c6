#include "rdcomp/nn.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

using namespace rdcomp;
using namespace rdcomp::nn;

namespace {

ClassifDataset xor_data() {
    ClassifDataset d{MatrixXd(4, 2), {0, 1, 1, 0}, 2};
    d.inputs << 0, 0,
                0, 1,
                1, 0,
                1, 1;
    return d;
}

ClassifDataset random_task(Rng& rng, Index n, int p, int classes) {
    ClassifDataset d{MatrixXd(n, p), std::vector<int>(static_cast<std::size_t>(n)), classes};
    for (Index i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) d.inputs(i, j) = rng.gaussian();
        d.labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    }
    return d;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("init and flatten round trip") {
    const auto m = init_mlp({3, 5, 4, 2}, 9);
    CHECK(m.layers() == 3);
    CHECK(m.parameter_count() == (3 * 5 + 5) + (5 * 4 + 4) + (4 * 2 + 2));
    CHECK(m.layer_sizes() == std::vector<Index>{20, 24, 10});
    for (std::size_t l = 0; l < m.layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.layer_dims[l]));
        CHECK(m.weights[l].cwiseAbs().maxCoeff() <= bound);
        CHECK(m.biases[l].isZero());
    }
    const VectorXd p = m.flatten();
    // Column-major weights then bias, per layer.
    CHECK(p(0) == m.weights[0](0, 0));
    CHECK(p(1) == m.weights[0](1, 0));
    CHECK(p(5) == m.weights[0](0, 1));
    auto copy = m;
    Rng rng(1);
    VectorXd q(p.size());
    for (Index i = 0; i < q.size(); ++i) q(i) = rng.gaussian();
    copy.unflatten(q);
    CHECK(copy.flatten() == q);
    copy.unflatten(p);
    for (std::size_t l = 0; l < m.layers(); ++l) {
        CHECK(copy.weights[l] == m.weights[l]);
        CHECK(copy.biases[l] == m.biases[l]);
    }
    CHECK_THROWS_AS(copy.unflatten(VectorXd::Zero(3)), ParameterError);
    CHECK(init_mlp({3, 5, 2}, 4).flatten() == init_mlp({3, 5, 2}, 4).flatten());
    CHECK_THROWS_AS(init_mlp({3}, 0), ParameterError);
    CHECK_THROWS_AS(init_mlp({3, 1}, 0), ParameterError);
}

TEST_CASE("XOR is learnable") {
    TrainOptions opt;
    opt.epochs = 3000;
    opt.learning_rate = 0.5;
    opt.seed = 1;
    const auto run = train_mlp(xor_data(), {2, 8, 2}, opt);
    CHECK(run.loss_history.back() < 0.1);
    CHECK(cross_entropy(run.model, xor_data()) < 0.1);
    CHECK(run.loss_history.size() == 3001);
}

TEST_CASE("training loss is non-increasing up to small transients") {
    Rng rng(2);
    const auto [train, test] = make_synth_task(100, 10, 5);
    TrainOptions opt;
    opt.epochs = 2000;
    opt.seed = 3;
    const auto run = train_mlp(train, {2, 16, 16, 2}, opt);
    for (std::size_t e = 1; e < run.loss_history.size(); ++e) {
        CHECK(run.loss_history[e] <= 1.05 * run.loss_history[e - 1]);
    }
    CHECK(run.loss_history.back() < run.loss_history.front());
}

TEST_CASE("lr = 0 leaves the initialization") {
    TrainOptions opt;
    opt.epochs = 1;
    opt.learning_rate = 0;
    opt.seed = 11;
    const auto run = train_mlp(xor_data(), {2, 8, 2}, opt);
    CHECK(run.model.flatten() == init_mlp({2, 8, 2}, 11).flatten());
    opt.epochs = 0;
    CHECK_THROWS_AS(train_mlp(xor_data(), {2, 8, 2}, opt), ParameterError);
    opt.epochs = 1;
    CHECK_THROWS_AS(train_mlp(xor_data(), {3, 8, 2}, opt), ParameterError);
}

TEST_CASE("divergent training raises a training error") {
    auto data = xor_data();
    data.inputs *= 1e150;
    TrainOptions opt;
    opt.epochs = 50;
    opt.learning_rate = 1e10;
    CHECK_THROWS_AS(train_mlp(data, {2, 8, 2}, opt), TrainingError);
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(42);
    for (int fixture = 0; fixture < 5; ++fixture) {
        const auto data = random_task(rng, 12, 3, 3);
        auto model = init_mlp({3, 6, 5, 3}, rng.next_u64());
        // Nonzero biases so every layer's bias gradient is exercised.
        VectorXd p = model.flatten();
        for (Index i = 0; i < p.size(); ++i) p(i) += 0.1 * rng.gaussian();
        model.unflatten(p);
        const VectorXd g = loss_gradient(model, data);
        for (int c = 0; c < 10; ++c) {
            const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p.size())));
            const double step = 1e-5;
            auto plus = model;
            auto minus = model;
            VectorXd pp = p, pm = p;
            pp(i) += step;
            pm(i) -= step;
            plus.unflatten(pp);
            minus.unflatten(pm);
            const double fd = (cross_entropy(plus, data) - cross_entropy(minus, data)) / (2 * step);
            const double rel = std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-7});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("fisher diagonal") {
    Rng rng(7);
    const auto data = random_task(rng, 20, 2, 2);
    auto model = init_mlp({2, 4, 2}, 3);
    const VectorXd f = fisher_diag(model, data);
    CHECK(f.size() == model.parameter_count());
    CHECK((f.array() >= 0).all());

    // Dead hidden unit 0: its incoming weights and bias keep it at zero.
    model.weights[0].row(0).setZero();
    model.biases[0](0) = -1.0;
    const VectorXd dead = fisher_diag(model, data);
    CHECK(dead(0) == 0.0);  // W0(0,0)
    CHECK(dead(4) == 0.0);  // W0(0,1)
    CHECK(dead(8) == 0.0);  // b0(0)
    CHECK(dead(12) == 0.0);  // W1(0,0), fed by the dead unit
    CHECK(dead(13) == 0.0);  // W1(1,0)

    ClassifDataset twice{MatrixXd(40, 2), data.labels, 2};
    twice.inputs << data.inputs, data.inputs;
    twice.labels.insert(twice.labels.end(), data.labels.begin(), data.labels.end());
    const VectorXd f2 = fisher_diag(model, twice);
    CHECK((f2 - dead).cwiseAbs().maxCoeff() <= 1e-15 * (1 + dead.cwiseAbs().maxCoeff()));

    // Mean of per-sample squared gradients, checked against single-sample calls.
    VectorXd manual = VectorXd::Zero(model.parameter_count());
    for (Index i = 0; i < data.size(); ++i) {
        ClassifDataset one{data.inputs.row(i), {data.labels[static_cast<std::size_t>(i)]}, 2};
        manual += loss_gradient(model, one).cwiseAbs2();
    }
    manual /= 20.0;
    CHECK((manual - dead).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("cross-entropy examples") {
    auto model = init_mlp({2, 3, 2}, 0);
    model.weights[1].setZero();
    Rng rng(1);
    const auto data = random_task(rng, 30, 2, 2);
    CHECK(cross_entropy(model, data) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    auto m3 = init_mlp({2, 3, 5}, 0);
    m3.weights[1].setZero();
    CHECK(cross_entropy(m3, random_task(rng, 30, 2, 5)) == doctest::Approx(std::log(5.0)).epsilon(1e-15));

    // A confident correct predictor approaches zero loss.
    ClassifDataset one{MatrixXd::Ones(1, 2), {1}, 2};
    auto sharp = init_mlp({2, 2}, 0);
    sharp.weights[0].setZero();
    sharp.biases[0] << -50, 50;
    CHECK(cross_entropy(sharp, one) < 1e-40);
    CHECK(cross_entropy(sharp, one) >= 0.0);

    const auto r = eval_losses(model, data, data);
    CHECK(r.gap == 0.0);
    CHECK(r.train_ce >= 0.0);
}

TEST_CASE("compression ratio") {
    CHECK(compression_ratio(std::vector<Index>{1000}, {256}) == doctest::Approx(0.506).epsilon(1e-14));
    CHECK(compression_ratio(std::vector<Index>{100000000}, {1}) == doctest::Approx(1e-8).epsilon(1e-12));
    CHECK(compression_ratio(std::vector<Index>{100, 50}, {4, 2}) ==
          doctest::Approx((100 * 2.0 + 50 * 1.0 + 32 * 6.0) / (32 * 150.0)));
    // The codebook term makes k = d exceed 1.
    CHECK(compression_ratio(std::vector<Index>{64}, {64}) > 1.0);
    CHECK(compression_ratio(std::vector<Index>{64}, {16}) < 1.0);
    CHECK_THROWS_AS(compression_ratio(std::vector<Index>{10}, {0}), ParameterError);
    CHECK_THROWS_AS(compression_ratio(std::vector<Index>{10}, {1, 2}), ParameterError);
}

TEST_CASE("quantize_mlp examples") {
    Rng rng(3);
    const auto data = random_task(rng, 40, 2, 2);
    const auto model = init_mlp({2, 6, 2}, 5);
    const VectorXd h = fisher_diag(model, data);

    // Lossless when k reaches the distinct count (capped automatically).
    const auto lossless = quantize_mlp(model, h, 1000, 0.0, 1);
    CHECK(lossless.model.flatten() == model.flatten());
    Index off0 = 0;
    for (std::size_t l = 0; l < model.layers(); ++l) {
        const Index s = model.layer_sizes()[l];
        const VectorXd seg = model.flatten().segment(off0, s);
        CHECK(lossless.k_used[l] == static_cast<int>(std::set<double>(seg.data(), seg.data() + s).size()));
        off0 += s;
    }
    CHECK(lossless.k_used[0] < 18);  // zero biases collapse to one value

    const auto one = quantize_mlp(model, h, 1, 0.0, 1);
    Index off = 0;
    const VectorXd flat = one.model.flatten();
    for (Index s : model.layer_sizes()) {
        CHECK(flat.segment(off, s).isConstant(flat(off)));
        off += s;
    }
    CHECK(one.compression_ratio == doctest::Approx(compression_ratio(model, {1, 1})));

    const auto reg0 = quantize_mlp(model, h, 3, 0.0, 8);
    off = 0;
    const auto sizes = model.layer_sizes();
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        ClusterOptions opt;
        opt.k = 3;
        opt.seed = derive_seed(8, l);
        const auto ref = hessian_kmeans_quantize<double>(model.flatten().segment(off, sizes[l]),
                                                         h.segment(off, sizes[l]), opt);
        CHECK(reg0.layers[l].centroids == ref.centroids);
        CHECK(reg0.layers[l].assignments == ref.assignments);
        off += sizes[l];
    }
    CHECK_THROWS_AS(quantize_mlp(model, h, std::vector<int>{2}, 0.0, 1), ParameterError);
    CHECK_THROWS_AS(quantize_mlp(model, VectorXd::Ones(3), 2, 0.0, 1), ParameterError);
}

TEST_CASE("coarse quantization raises training loss on average") {
    const auto [train, test] = make_synth_task(100, 200, 0);
    double delta = 0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        TrainOptions opt;
        opt.epochs = 1000;
        opt.seed = derive_seed(1, static_cast<std::uint64_t>(s));
        const auto run = train_mlp(train, {2, 16, 16, 2}, opt);
        const auto q = quantize_mlp(run.model, fisher_diag(run.model, train), 2, 0.0, opt.seed);
        delta += cross_entropy(q.model, train) - cross_entropy(run.model, train);
    }
    CHECK(delta / seeds >= 0.0);
}

TEST_CASE("synthetic task") {
    const auto [a_train, a_test] = make_synth_task(400, 300, 12);
    const auto [b_train, b_test] = make_synth_task(400, 300, 12);
    CHECK(a_train.inputs == b_train.inputs);
    CHECK(a_train.labels == b_train.labels);
    CHECK(a_test.inputs == b_test.inputs);
    CHECK(a_train.inputs != make_synth_task(400, 300, 13).first.inputs);
    CHECK(a_train.size() == 400);
    CHECK(a_test.size() == 300);
    CHECK(a_train.features() == 2);
    // Disjoint streams: no shared rows between train and test.
    std::set<std::pair<double, double>> rows;
    for (Index i = 0; i < a_train.size(); ++i) rows.insert({a_train.inputs(i, 0), a_train.inputs(i, 1)});
    for (Index i = 0; i < a_test.size(); ++i) CHECK(rows.count({a_test.inputs(i, 0), a_test.inputs(i, 1)}) == 0);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto task = make_synth_task(200, 1, seed).first;
        int ones = 0;
        Eigen::Vector2d mean0 = Eigen::Vector2d::Zero(), mean1 = Eigen::Vector2d::Zero();
        for (Index i = 0; i < task.size(); ++i) {
            if (task.labels[static_cast<std::size_t>(i)] == 1) {
                ++ones;
                mean1 += task.inputs.row(i).transpose();
            } else {
                mean0 += task.inputs.row(i).transpose();
            }
        }
        CHECK(ones == 100);
        mean0 /= 200 - ones;
        mean1 /= ones;
        CHECK((mean0 - mean1).norm() > 0.3);
    }
}

TEST_CASE("CSV dataset loading and splitting") {
    const std::string path = "nn_test_dataset.csv";
    {
        std::ofstream out(path);
        out << "x1,x2,label\n0.5,1.0,0\n-1,2,1\n3,4,2\n0,0,1\n";
    }
    const auto data = load_csv_dataset(path);
    CHECK(data.size() == 4);
    CHECK(data.features() == 2);
    CHECK(data.n_classes == 3);
    CHECK(data.labels == std::vector<int>{0, 1, 2, 1});
    CHECK(data.inputs(1, 0) == -1.0);
    const auto [tr, te] = split_dataset(data, 0.5, 1);
    CHECK(tr.size() == 2);
    CHECK(te.size() == 2);
    CHECK_THROWS_AS(split_dataset(data, 1.0, 1), ParameterError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_csv_dataset("/nonexistent/dir/data.csv"), IoError);
}
}
