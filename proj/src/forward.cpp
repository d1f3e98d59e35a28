#include "dgen/forward.hpp"

#include <cmath>
#include <sstream>

#include "dgen/textio.hpp"

namespace dgen {

Tensor forward_step_with(const Tensor& x_prev, int t, const Schedule& s, const Tensor& z) {
    require_same_shape(x_prev, z, "forward_step");
    return affine_combine(std::sqrt(1.0 - s.beta(t)), x_prev, std::sqrt(s.beta(t)), z);
}

Tensor forward_step(const Tensor& x_prev, int t, const Schedule& s, Rng& rng) {
    return forward_step_with(x_prev, t, s, rng.normal_tensor(x_prev.shape));
}

MarginalParams marginal_params(const Tensor& x0, int t, const Schedule& s) {
    double ab = s.alpha_bar(t);
    return MarginalParams{scale(std::sqrt(ab), x0), 1.0 - ab};
}

Tensor mix_marginal(const Tensor& x0, double alpha_bar_t, const Tensor& z) {
    require_same_shape(x0, z, "mix_marginal");
    return affine_combine(std::sqrt(alpha_bar_t), x0, std::sqrt(1.0 - alpha_bar_t), z);
}

MarginalSample sample_marginal(const Tensor& x0, int t, const Schedule& s, Rng& rng) {
    if (t < 1) throw std::out_of_range("sample_marginal: t must be >= 1");
    double ab = s.alpha_bar(t);
    Tensor z = rng.normal_tensor(x0.shape);
    return MarginalSample{mix_marginal(x0, ab, z), std::move(z)};
}

Trajectory simulate_trajectory(const Tensor& x0, const Schedule& s, Rng& rng) {
    Trajectory traj;
    traj.schedule_id = s.fingerprint();
    traj.states.reserve(static_cast<std::size_t>(s.steps()) + 1);
    traj.states.push_back(x0);
    for (int t = 1; t <= s.steps(); ++t) {
        traj.states.push_back(forward_step(traj.states.back(), t, s, rng));
    }
    return traj;
}

std::string trajectories_to_csv(const std::vector<Trajectory>& trajs, int stride) {
    if (stride < 1) throw std::invalid_argument("trajectories_to_csv: stride must be >= 1");
    std::ostringstream out;
    out << "traj_id,t,component_index,value\n";
    for (std::size_t id = 0; id < trajs.size(); ++id) {
        const Trajectory& traj = trajs[id];
        int T = traj.steps();
        for (int t = 0; t <= T; ++t) {
            if (t % stride != 0 && t != T) continue;
            const Tensor& x = traj.states[static_cast<std::size_t>(t)];
            for (std::size_t c = 0; c < x.numel(); ++c) {
                out << id << ',' << t << ',' << c << ',' << format_double(x[c]) << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace dgen
