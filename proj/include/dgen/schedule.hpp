#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dgen {

/// Variance used by the reverse-process transition at step t.
enum class SigmaMode {
    Beta,           // sigma_t^2 = beta_t
    PosteriorBeta,  // sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t)
};

std::string to_string(SigmaMode mode);
SigmaMode sigma_mode_from_string(const std::string& s);

/// Time-indexed coefficients of the noising chain. Steps are 1-based
/// (t = 1..T); alpha_bar(0) == 1 by convention so the step-1 posterior
/// formulas stay evaluable. Immutable after construction and safe to share
/// across threads.
class Schedule {
public:
    static Schedule from_betas(std::vector<double> betas, SigmaMode mode);

    int steps() const { return static_cast<int>(beta_.size()); }
    SigmaMode sigma_mode() const { return mode_; }
    const std::vector<double>& betas() const { return beta_; }

    double beta(int t) const { return beta_.at(check_step(t) - 1); }
    double alpha(int t) const { return alpha_.at(check_step(t) - 1); }
    /// Valid for t in [0, T]; alpha_bar(0) == 1.
    double alpha_bar(int t) const;
    double sigma_sq(int t) const { return sigma_sq_.at(check_step(t) - 1); }

    /// alpha_bar(T): how much signal survives the full chain. Callers compare
    /// it against a threshold to certify that x_T is effectively N(0, I).
    double final_alpha_bar() const { return alpha_bar_.back(); }

    /// Stable identifier over (T, sigma mode, beta values); embedded in
    /// checkpoints so sampling runs can detect an incompatible schedule.
    std::uint64_t fingerprint() const;

    /// Plain-text table `t,beta,alpha,alpha_bar,sigma_sq`, one row per step,
    /// 17 significant digits.
    std::string to_csv() const;
    static Schedule from_csv(const std::string& text);

private:
    Schedule() = default;
    int check_step(int t) const;

    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;  // size T+1, index 0..T
    std::vector<double> sigma_sq_;
    SigmaMode mode_ = SigmaMode::Beta;
};

/// beta grows linearly from beta_start to beta_end over T steps.
/// Requires 0 < beta_start <= beta_end < 1 and T >= 1.
Schedule make_linear_schedule(int T, double beta_start, double beta_end,
                              SigmaMode mode);

/// sigma_t^2 for a mode other than the one the schedule was built with.
double sigma_sq_for(const Schedule& s, SigmaMode mode, int t);

/// max_t |alpha_bar(t) - exp(-sum_{s<=t} beta_s)|. First-order agreement
/// between the discrete chain and its continuous-time limit; small only when
/// every beta_t is small.
double sde_consistency_gap(const Schedule& s);

}  // namespace dgen
