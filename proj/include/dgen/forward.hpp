#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"

namespace dgen {

/// One realization of the noising chain: states[t] for t = 0..T, states[0]
/// being the clean datum. All states share one shape.
struct Trajectory {
    std::uint64_t schedule_id = 0;  // Schedule::fingerprint of the chain used
    std::uint64_t seed = 0;
    std::vector<Tensor> states;

    int steps() const { return static_cast<int>(states.size()) - 1; }
};

/// x_t = sqrt(1-beta_t) x_{t-1} + sqrt(beta_t) z, with the noise supplied.
Tensor forward_step_with(const Tensor& x_prev, int t, const Schedule& s, const Tensor& z);
Tensor forward_step(const Tensor& x_prev, int t, const Schedule& s, Rng& rng);

/// Closed-form conditional of x_t given x_0: mean sqrt(abar_t) x0 and
/// isotropic variance 1 - abar_t. t = 0 gives (x0, 0).
struct MarginalParams {
    Tensor mean;
    double var = 0.0;
};
MarginalParams marginal_params(const Tensor& x0, int t, const Schedule& s);

/// sqrt(abar_t) x0 + sqrt(1-abar_t) z. Shared by the closed-form sampler and
/// the fixed-noise degradation so the two agree bit for bit.
Tensor mix_marginal(const Tensor& x0, double alpha_bar_t, const Tensor& z);

/// Draws x_t from the closed-form marginal; the z actually used is returned
/// because the training loss needs it as the regression target.
struct MarginalSample {
    Tensor x_t;
    Tensor z;
};
MarginalSample sample_marginal(const Tensor& x0, int t, const Schedule& s, Rng& rng);

/// Runs the chain stepwise from x0 for all T steps. Reproducible: the states
/// are a pure function of (x0, schedule, rng state at entry).
Trajectory simulate_trajectory(const Tensor& x0, const Schedule& s, Rng& rng);

/// CSV `traj_id,t,component_index,value`. `stride` thins the exported time
/// axis (state 0 and state T are always kept); 1 exports everything.
std::string trajectories_to_csv(const std::vector<Trajectory>& trajs, int stride = 1);

}  // namespace dgen
