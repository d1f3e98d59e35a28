#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgen/rng.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"

namespace dgen {

/// Diagonal Gaussian with isotropic variance. var == 0 is legal only for the
/// degenerate step-1 posterior, where the distribution collapses to a point.
struct GaussianDiag {
    Tensor mean;
    double var = 0.0;
};

/// Exact conditional of x_{t-1} given (x_t, x0) under the forward chain:
///   var  = beta_t (1 - abar_{t-1}) / (1 - abar_t)
///   mean = [sqrt(alpha_t)(1 - abar_{t-1}) x_t + beta_t sqrt(abar_{t-1}) x0]
///          / (1 - abar_t)
/// At t = 1 the variance degenerates to 0 and the mean reduces to x0's
/// weighting alone.
GaussianDiag posterior(const Tensor& x_t, const Tensor& x0, int t, const Schedule& s);

/// KL divergence between two diagonal Gaussians sharing one variance,
/// keeping only the mean-dependent part: ||mu_p - mu_q||^2 / (2 var).
/// The additive constant of the general formula is defined as 0 here.
/// Mismatched variances are rejected; the reduction is only valid when they
/// are equal.
double kl_equal_cov(const GaussianDiag& p, const GaussianDiag& q);

/// Anything that predicts the injected noise from (x_t, t [, label]).
using NoisePredictor =
    std::function<Tensor(const Tensor& x_t, int t, std::optional<int> cond)>;

/// mean = (x_t - beta_t / sqrt(1-abar_t) * z_hat) / sqrt(alpha_t):
/// the reverse-transition mean implied by a noise estimate.
Tensor mean_from_noise(const Tensor& x_t, int t, const Schedule& s, const Tensor& z_hat);

/// Monte-Carlo estimate of the log-likelihood lower bound for one datum,
/// decomposed as total = reconstruction - sum(kl) - prior.
struct ElboReport {
    double reconstruction_term = 0.0;
    double reconstruction_std_err = 0.0;
    std::vector<double> kl_terms;     // index i holds the term for t = i+2
    std::vector<double> kl_std_errs;
    double prior_term = 0.0;          // closed form, no MC error
    double total = 0.0;

    int first_kl_step() const { return 2; }
    std::string to_csv() const;  // `term,t,value,std_err`
};

/// Per-step KL terms use the mean-part reduction above with the schedule's
/// sigma_t^2 as the shared variance; the reconstruction term is the Gaussian
/// log-density of x0 under N(mean_from_noise(x_1), sigma_1^2); the prior term
/// is the closed-form KL from the t=T marginal to N(0, I). Requires
/// sigma_1^2 > 0, so schedules built with the posterior-variance mode (whose
/// sigma_1^2 is 0) are rejected.
ElboReport elbo_report(const Tensor& x0, const NoisePredictor& denoiser,
                       const Schedule& s, Rng& rng, int n_mc);

}  // namespace dgen
