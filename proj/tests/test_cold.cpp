#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dgen/cold.hpp"
#include "dgen/datasets.hpp"
#include "dgen/errors.hpp"
#include "dgen/forward.hpp"

using namespace dgen;

namespace {

DegradationOp noise_op(int T, std::size_t dim, std::uint64_t seed) {
    Schedule s = make_linear_schedule(T, 0.02, 0.4, SigmaMode::Beta);
    Rng rng(seed, kPinnedNoiseStream);
    return make_fixed_noise_op(std::move(s), rng.normal_tensor({dim}));
}

Tensor spike(std::size_t dim) {
    Tensor x = Tensor::zeros({dim});
    x.data[dim / 2] = 1.0;
    return x;
}

double total_mass(const Tensor& x) {
    double m = 0.0;
    for (double v : x.data) m += v;
    return m;
}

Restorer oracle_restorer(const Tensor& x0) {
    return [x0](const Tensor&, int) { return x0; };
}

}  // namespace

TEST_SUITE_BEGIN("cold");

TEST_CASE("severity zero is the exact identity for both operators") {
    Tensor x({4}, {0.3, -0.9, 0.5, 0.1});
    DegradationOp fn = noise_op(6, 4, 1);
    CHECK(degrade(fn, x, 0) == x);
    DegradationOp bl = make_blur_op(5, 0.7);
    CHECK(degrade(bl, x, 0) == x);
}

TEST_CASE("pinned-noise degradation equals the closed-form mix bit for bit") {
    DegradationOp op = noise_op(8, 3, 2);
    Rng rng(3, 0);
    Tensor x = rng.normal_tensor({3});
    for (int t = 1; t <= 8; ++t) {
        Tensor got = degrade(op, x, t);
        Tensor want = mix_marginal(x, op.schedule->alpha_bar(t), op.pinned_z);
        CHECK(got == want);
    }
    CHECK(op.max_severity() == 8);
}

TEST_CASE("degradation severity and shapes are validated") {
    DegradationOp op = noise_op(4, 3, 4);
    Tensor x({3}, {0.1, 0.2, 0.3});
    CHECK_THROWS_AS(degrade(op, x, -1), std::out_of_range);
    CHECK_THROWS_AS(degrade(op, x, 5), std::out_of_range);
    Tensor wrong({2}, {0.1, 0.2});
    CHECK_THROWS_AS(degrade(op, wrong, 1), std::invalid_argument);
    DegradationOp bl = make_blur_op(3, 0.5);
    Tensor rank2 = Tensor::zeros({2, 2});
    CHECK_THROWS_AS(degrade(bl, rank2, 1), std::invalid_argument);
}

TEST_CASE("blur conserves mass to 1e-12 and flattens a spike") {
    DegradationOp op = make_blur_op(10, 0.8);
    Tensor x = spike(33);
    double mass0 = total_mass(x);
    double prev_peak = 1.0;
    for (int t = 1; t <= 10; ++t) {
        Tensor y = degrade(op, x, t);
        CHECK(std::abs(total_mass(y) - mass0) < 1e-12);
        double peak = 0.0;
        for (double v : y.data) peak = std::max(peak, std::abs(v));
        CHECK(peak < prev_peak);
        prev_peak = peak;
    }
    // Determinism: same inputs, same output.
    CHECK(degrade(op, x, 7) == degrade(op, x, 7));
}

TEST_CASE("blur mass conservation holds for an asymmetric edge-heavy signal") {
    DegradationOp op = make_blur_op(6, 1.3);
    Tensor x({9}, {2.0, -1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, -3.0});
    for (int t = 1; t <= 6; ++t)
        CHECK(std::abs(total_mass(degrade(op, x, t)) - total_mass(x)) < 1e-12);
}

TEST_CASE("an exact restorer makes the severity-stepping loop a fixed point") {
    Rng rng(5, 0);
    Tensor x0 = rng.normal_tensor({6});
    for (DegradationOp op : {noise_op(7, 6, 6), make_blur_op(7, 0.6)}) {
        Tensor x_T = degrade(op, x0, op.max_severity());
        Restorer r = oracle_restorer(x0);
        CHECK(restore_iterative(r, op, x_T) == x0);
        CHECK(restore_one_step(r, op, x_T) == x0);
    }
}

TEST_CASE("a severity-zero operator restores to the input unchanged") {
    DegradationOp op = make_blur_op(0, 0.5);
    Tensor x({3}, {0.4, 0.5, 0.6});
    Restorer r = oracle_restorer(Tensor({3}, {9.0, 9.0, 9.0}));
    CHECK(restore_iterative(r, op, x) == x);
}

TEST_CASE("restoration training memorizes a single element") {
    Rng drng(7, kDataStream);
    std::vector<Tensor> data = make_bump_dataset(1, 8, drng);
    DegradationOp op = noise_op(4, 8, 8);
    TrainConfig cfg;
    cfg.steps = 500;
    cfg.batch_size = 8;
    cfg.learning_rate = 4e-3;
    cfg.seed = 12;
    cfg.eval_every = 250;
    DenoiserInit net;
    net.data_dim = 8;
    net.hidden_sizes = {32, 32};
    net.time_dim = 4;
    net.max_step = 4;
    RestorationResult res = train_restoration(data, {}, op, cfg, net);
    CHECK(res.log.rows.back().eval_metric < res.log.rows.front().eval_metric);
    Restorer r = as_restorer(res.model);
    Tensor x_T = degrade(op, data[0], 4);
    CHECK(l1_distance(restore_iterative(r, op, x_T), data[0]) < 0.15);
    CHECK(l1_distance(restore_one_step(r, op, x_T), data[0]) < 0.15);
    // Severity-0 inputs pass through nearly unchanged: the objective included
    // t = 0 pairs.
    CHECK(l1_distance(r(data[0], 0), data[0]) < 0.15);
}

TEST_CASE("restoration training is reproducible and guards divergence") {
    Rng drng(9, kDataStream);
    std::vector<Tensor> data = make_bump_dataset(4, 6, drng);
    DegradationOp op = make_blur_op(3, 0.7);
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 4;
    cfg.seed = 21;
    cfg.eval_every = 15;
    DenoiserInit net;
    net.data_dim = 6;
    net.hidden_sizes = {12};
    net.time_dim = 2;
    net.max_step = 3;
    RestorationResult a = train_restoration(data, {}, op, cfg, net);
    RestorationResult b = train_restoration(data, {}, op, cfg, net);
    CHECK(a.log.to_csv() == b.log.to_csv());
    CHECK(a.model.kind == DegradationKind::Blur);
    TrainConfig boom = cfg;
    boom.learning_rate = 1e9;
    boom.optimizer = Optimizer::Sgd;
    CHECK_THROWS_AS(train_restoration(data, {}, op, boom, net), numeric_error);
}

TEST_CASE("limit pool: noise destination is standard normal") {
    DegradationOp op = noise_op(5, 2, 10);
    std::vector<Tensor> data;
    Rng rng(11, 0);
    double sum = 0.0, sq = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        Tensor x = sample_limit_pool(op, data, rng);
        REQUIRE(x.shape == std::vector<std::size_t>{2});
        for (double v : x.data) {
            sum += v;
            sq += v * v;
        }
    }
    double cnt = 2.0 * n;
    double mean = sum / cnt;
    double var = sq / cnt - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(cnt));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / cnt));
}

TEST_CASE("limit pool: blur destinations come from the degraded dataset") {
    DegradationOp op = make_blur_op(4, 0.9);
    Rng drng(13, kDataStream);
    std::vector<Tensor> data = make_bump_dataset(5, 7, drng);
    std::vector<Tensor> pool;
    for (const Tensor& x : data) pool.push_back(degrade(op, x, 4));
    Rng rng(14, 0);
    for (int i = 0; i < 50; ++i) {
        Tensor got = sample_limit_pool(op, data, rng);
        bool member = false;
        for (const Tensor& p : pool) member = member || got == p;
        CHECK(member);
    }
    std::vector<Tensor> empty;
    CHECK_THROWS_AS(sample_limit_pool(op, empty, rng), std::invalid_argument);
}

TEST_CASE("operator JSON round-trip preserves behavior bit for bit") {
    Rng rng(15, 0);
    Tensor probe = rng.normal_tensor({5});

    DegradationOp fn = noise_op(6, 5, 16);
    DegradationOp fn2 = op_from_json(op_to_json(fn));
    CHECK(fn2.kind == DegradationKind::FixedNoise);
    CHECK(fn2.schedule->fingerprint() == fn.schedule->fingerprint());
    CHECK(fn2.pinned_z == fn.pinned_z);
    for (int t = 0; t <= 6; ++t) CHECK(degrade(fn2, probe, t) == degrade(fn, probe, t));

    DegradationOp bl = make_blur_op(4, 0.75);
    DegradationOp bl2 = op_from_json(op_to_json(bl));
    CHECK(bl2.kind == DegradationKind::Blur);
    CHECK(bl2.max_severity() == 4);
    for (int t = 0; t <= 4; ++t) CHECK(degrade(bl2, probe, t) == degrade(bl, probe, t));

    CHECK_THROWS_AS(op_from_json("not json"), artifact_error);
    CHECK_THROWS_AS(op_from_json("{\"kind\":\"unknown\"}"), artifact_error);
}

TEST_SUITE_END();
