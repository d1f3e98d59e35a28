#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "dgen/forward.hpp"
#include "dgen/textio.hpp"

using namespace dgen;

TEST_SUITE_BEGIN("forward");

// Hand/high-precision reference values below come from
// tests/tools/gen_expected.py (independent of this implementation).

TEST_CASE("single noising step matches the closed form") {
    Schedule s = Schedule::from_betas({0.19}, SigmaMode::Beta);
    Tensor x({1}, {1.0});
    Tensor z({1}, {0.5});
    Tensor x1 = forward_step_with(x, 1, s, z);
    // 0.9 * 1 + sqrt(0.19) * 0.5
    CHECK(x1[0] == doctest::Approx(1.1179449471770337).epsilon(1e-16));
}

TEST_CASE("forward_step consumes exactly one noise tensor from the stream") {
    Schedule s = Schedule::from_betas({0.19}, SigmaMode::Beta);
    Tensor x({2}, {1.0, -1.0});
    Rng a(5, 0), b(5, 0);
    Tensor z = b.normal_tensor({2});
    Tensor got = forward_step(x, 1, s, a);
    Tensor want = forward_step_with(x, 1, s, z);
    CHECK(got == want);
}

TEST_CASE("marginal parameters at t=0 and t=2") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::Beta);
    Tensor x0({1}, {1.0});
    MarginalParams m0 = marginal_params(x0, 0, s);
    CHECK(m0.mean == x0);
    CHECK(m0.var == 0.0);
    MarginalParams m2 = marginal_params(x0, 2, s);
    CHECK(m2.mean[0] == doctest::Approx(0.848528137423857).epsilon(1e-15));
    CHECK(m2.var == doctest::Approx(1.0 - 0.7200000000000001).epsilon(1e-15));
    CHECK_THROWS_AS(marginal_params(x0, 3, s), std::out_of_range);
}

TEST_CASE("mix_marginal is the affine map used everywhere") {
    Tensor x0({1}, {1.0});
    Tensor z({1}, {1.0});
    Tensor mixed = mix_marginal(x0, 0.7200000000000001, z);
    CHECK(mixed[0] == doctest::Approx(0.848528137423857 + std::sqrt(0.28)).epsilon(1e-15));
    Tensor zero_z({1}, {0.0});
    CHECK(mix_marginal(x0, 0.7200000000000001, zero_z)[0] ==
          doctest::Approx(0.848528137423857).epsilon(1e-16));
}

TEST_CASE("sample_marginal reports the noise it consumed") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::Beta);
    Tensor x0({3}, {0.2, -0.4, 0.9});
    Rng rng(17, 3);
    MarginalSample ms = sample_marginal(x0, 2, s, rng);
    CHECK(ms.x_t == mix_marginal(x0, s.alpha_bar(2), ms.z));
    CHECK_THROWS_AS(sample_marginal(x0, 0, s, rng), std::out_of_range);
}

TEST_CASE("trajectory covers t=0..T and is stream-deterministic") {
    Schedule s = make_linear_schedule(20, 0.01, 0.3, SigmaMode::Beta);
    Tensor x0({2}, {0.5, -0.5});
    Rng r1(99, 0), r2(99, 0);
    Trajectory a = simulate_trajectory(x0, s, r1);
    Trajectory b = simulate_trajectory(x0, s, r2);
    REQUIRE(a.states.size() == 21);
    CHECK(a.steps() == 20);
    CHECK(a.states[0] == x0);
    CHECK(a.schedule_id == s.fingerprint());
    for (std::size_t t = 0; t < a.states.size(); ++t) CHECK(a.states[t] == b.states[t]);
}

TEST_CASE("zero-noise chain composes to the marginal mean") {
    Schedule s = make_linear_schedule(30, 0.002, 0.05, SigmaMode::Beta);
    Tensor x({1}, {0.8});
    Tensor z({1}, {0.0});
    for (int t = 1; t <= 30; ++t) x = forward_step_with(x, t, s, z);
    double want = std::sqrt(s.alpha_bar(30)) * 0.8;
    CHECK(x[0] == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("csv export thins time but keeps the endpoints") {
    Schedule s = make_linear_schedule(10, 0.01, 0.2, SigmaMode::Beta);
    Tensor x0({1}, {0.3});
    Rng rng(4, 0);
    std::vector<Trajectory> trajs{simulate_trajectory(x0, s, rng)};
    std::string csv = trajectories_to_csv(trajs, 4);
    std::vector<std::string> lines = split_lines(csv);
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "traj_id,t,component_index,value");
    std::vector<int> ts;
    for (std::size_t i = 1; i < lines.size(); ++i)
        ts.push_back(parse_int(split_csv_line(lines[i])[1]));
    CHECK(ts.front() == 0);
    CHECK(ts.back() == 10);
    for (int t : ts) CHECK((t == 0 || t == 10 || t % 4 == 0));
    // Exported values match the stored states bit for bit.
    std::vector<std::string> f = split_csv_line(lines[1]);
    CHECK(parse_double(f[3]) == trajs[0].states[0][0]);
}

TEST_SUITE_END();
