#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dgen/forward.hpp"
#include "dgen/gaussian.hpp"
#include "dgen/textio.hpp"

using namespace dgen;

namespace {

// Independent check of the conditional of x_{t-1} given (x_t, x0): discretize
// x_{t-1} on a fine grid, multiply the two Gaussian factors of Bayes' rule
// pointwise, normalize by trapezoid quadrature, and read off mean/variance.
// Shares no code with posterior().
struct GridMoments {
    double mean;
    double var;
};

GridMoments grid_bayes_posterior(double x_t, double x0, int t, const Schedule& s) {
    const double beta = s.beta(t);
    const double alpha = s.alpha(t);
    const double abar_prev = s.alpha_bar(t - 1);
    const double prior_var = 1.0 - abar_prev;
    const double prior_mean = std::sqrt(abar_prev) * x0;
    // Generous support: both factors are Gaussian, so +-12 combined sigmas
    // around a crude center catches all the mass.
    const double center = 0.5 * (prior_mean + x_t / std::sqrt(alpha));
    const double spread = 12.0 * (std::sqrt(beta) + std::sqrt(prior_var) + 1e-6);
    const int n = 40001;
    const double lo = center - spread, hi = center + spread;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> w(n), xs(n);
    double max_log = -1e300;
    std::vector<double> logs(n);
    for (int i = 0; i < n; ++i) {
        double x = lo + h * i;
        xs[static_cast<std::size_t>(i)] = x;
        double like = -0.5 * (x_t - std::sqrt(1.0 - beta) * x) * (x_t - std::sqrt(1.0 - beta) * x) / beta;
        double prior = prior_var > 0.0
                           ? -0.5 * (x - prior_mean) * (x - prior_mean) / prior_var
                           : 0.0;
        logs[static_cast<std::size_t>(i)] = like + prior;
        max_log = std::max(max_log, logs[static_cast<std::size_t>(i)]);
    }
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double weight = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double p = weight * std::exp(logs[static_cast<std::size_t>(i)] - max_log);
        z += p;
        m1 += p * xs[static_cast<std::size_t>(i)];
        m2 += p * xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
    }
    m1 /= z;
    m2 /= z;
    return {m1, m2 - m1 * m1};
}

NoisePredictor zero_predictor() {
    return [](const Tensor& x_t, int, std::optional<int>) { return Tensor::zeros(x_t.shape); };
}

}  // namespace

TEST_SUITE_BEGIN("gaussian");

// Frozen reference values come from tests/tools/gen_expected.py
// (high-precision independent evaluation of the same closed forms).

TEST_CASE("posterior moments match the frozen reference") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::Beta);
    Tensor x_t({1}, {1.0});
    Tensor x0({1}, {0.5});
    GaussianDiag g = posterior(x_t, x0, 2, s);
    CHECK(g.var == doctest::Approx(0.07142857142857141).epsilon(1e-15));
    CHECK(g.mean[0] == doctest::Approx(0.6582537460894391).epsilon(1e-15));
}

TEST_CASE("posterior at t=1 collapses onto the clean datum") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::Beta);
    Tensor x_t({1}, {-0.3});
    Tensor x0({1}, {0.71});
    GaussianDiag g = posterior(x_t, x0, 1, s);
    CHECK(g.var == 0.0);
    CHECK(g.mean[0] == doctest::Approx(0.71).epsilon(1e-14));
}

TEST_CASE("posterior agrees with an independent grid-Bayes computation") {
    Schedule s = make_linear_schedule(40, 0.005, 0.25, SigmaMode::Beta);
    struct Case {
        double x_t, x0;
        int t;
    };
    for (const Case& c : {Case{0.9, 0.4, 2}, Case{-1.3, 0.8, 17}, Case{0.2, -0.6, 40}}) {
        GaussianDiag g = posterior(Tensor({1}, {c.x_t}), Tensor({1}, {c.x0}), c.t, s);
        GridMoments ref = grid_bayes_posterior(c.x_t, c.x0, c.t, s);
        CHECK(std::abs(g.mean[0] - ref.mean) < 1e-6);
        CHECK(std::abs(g.var - ref.var) < 1e-6);
    }
}

TEST_CASE("equal-covariance KL keeps only the mean part") {
    GaussianDiag p{Tensor({1}, {0.5}), 0.5};
    GaussianDiag q{Tensor({1}, {0.2}), 0.5};
    CHECK(kl_equal_cov(p, q) == doctest::Approx(0.09).epsilon(1e-15));
    CHECK(kl_equal_cov(p, p) == 0.0);
    GaussianDiag r{Tensor({1}, {0.2}), 0.6};
    CHECK_THROWS_AS(kl_equal_cov(p, r), std::invalid_argument);
    GaussianDiag z{Tensor({1}, {0.2}), 0.0};
    CHECK_THROWS_AS(kl_equal_cov(z, z), std::domain_error);
}

TEST_CASE("mean_from_noise matches the frozen reference") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::Beta);
    Tensor x_t({1}, {1.0});
    Tensor z_hat({1}, {0.2});
    Tensor mu = mean_from_noise(x_t, 2, s, z_hat);
    CHECK(mu[0] == doctest::Approx(1.0335185632770432).epsilon(1e-15));
}

TEST_CASE("mean_from_noise with the true noise recovers the posterior mean") {
    Schedule s = make_linear_schedule(30, 0.01, 0.3, SigmaMode::Beta);
    Rng rng(8, 0);
    Tensor x0({3}, {0.4, -0.9, 0.1});
    for (int t : {2, 11, 30}) {
        MarginalSample ms = sample_marginal(x0, t, s, rng);
        Tensor mu_hat = mean_from_noise(ms.x_t, t, s, ms.z);
        GaussianDiag post = posterior(ms.x_t, x0, t, s);
        for (std::size_t i = 0; i < mu_hat.numel(); ++i)
            CHECK(mu_hat[i] == doctest::Approx(post.mean[i]).epsilon(1e-12));
    }
}

TEST_CASE("zero-predictor bound terms match closed-form expectations") {
    Schedule s = Schedule::from_betas({0.1, 0.2, 0.3}, SigmaMode::Beta);
    Tensor x0({1}, {0.37});
    Rng rng(21, 0);
    ElboReport rep = elbo_report(x0, zero_predictor(), s, rng, 60000);
    REQUIRE(rep.kl_terms.size() == 2);
    REQUIRE(rep.kl_std_errs.size() == 2);
    CHECK(rep.first_kl_step() == 2);
    // E[kl_t] = beta_t / (2 alpha_t (1 - abar_t)); E[recon] = -log(2 pi b1)/2
    // - 1/(2 a1). Allow 4 standard errors of Monte-Carlo slack.
    CHECK(std::abs(rep.kl_terms[0] - 0.44642857142857156) < 4.0 * rep.kl_std_errs[0]);
    CHECK(std::abs(rep.kl_terms[1] - 0.4320276497695853) < 4.0 * rep.kl_std_errs[1]);
    CHECK(std::abs(rep.reconstruction_term - (-0.32320154226320547)) <
          4.0 * rep.reconstruction_std_err);
    CHECK(rep.total == doctest::Approx(rep.reconstruction_term - rep.kl_terms[0] -
                                       rep.kl_terms[1] - rep.prior_term)
                           .epsilon(1e-12));
}

TEST_CASE("prior term matches the frozen closed form at full depth") {
    Schedule s = make_linear_schedule(1000, 0.0004, 0.06, SigmaMode::Beta);
    Tensor x0({1}, {0.5});
    Rng rng(3, 0);
    ElboReport rep = elbo_report(x0, zero_predictor(), s, rng, 2);
    CHECK(rep.prior_term == doctest::Approx(5.162537064507401e-15).epsilon(1e-6));
}

TEST_CASE("degenerate step-1 variance is rejected") {
    Schedule s = Schedule::from_betas({0.1, 0.2}, SigmaMode::PosteriorBeta);
    Tensor x0({1}, {0.2});
    Rng rng(5, 0);
    CHECK_THROWS_AS(elbo_report(x0, zero_predictor(), s, rng, 4), std::domain_error);
}

TEST_CASE("report serializes as term,t,value,std_err rows") {
    Schedule s = Schedule::from_betas({0.1, 0.2, 0.3}, SigmaMode::Beta);
    Tensor x0({1}, {0.1});
    Rng rng(6, 0);
    ElboReport rep = elbo_report(x0, zero_predictor(), s, rng, 16);
    std::vector<std::string> lines = split_lines(rep.to_csv());
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "term,t,value,std_err");
    // reconstruction + 2 kl rows + prior + total
    CHECK(lines.size() == 1 + 2 + 3);
}

TEST_CASE("the estimate is a true lower bound on the exact log-likelihood") {
    // With the all-zero noise predictor the reverse chain is linear-Gaussian,
    // so the model marginal of x0 is exactly N(0, v) with v from composing
    // var(x_{t-1}) = var(x_t)/alpha_t + sigma_t^2 down from var(x_T) = 1.
    // Restoring the variance-ratio constants that the report intentionally
    // drops must therefore land at or below the exact log-density.
    Schedule s = Schedule::from_betas({0.1, 0.2, 0.3}, SigmaMode::Beta);
    Tensor x0({1}, {0.42});
    Rng rng(77, 0);
    ElboReport rep = elbo_report(x0, zero_predictor(), s, rng, 60000);

    double v = 1.0;
    for (int t = s.steps(); t >= 1; --t) v = v / s.alpha(t) + s.sigma_sq(t);
    double exact_logp =
        -0.5 * (std::log(2.0 * M_PI * v) + x0[0] * x0[0] / v);

    double constants = 0.0;
    for (int t = 2; t <= s.steps(); ++t) {
        double post_var = s.beta(t) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
        double ratio = post_var / s.sigma_sq(t);
        constants += 0.5 * (ratio - 1.0 - std::log(ratio));
    }
    double full_bound = rep.total - constants;
    double se = rep.reconstruction_std_err * rep.reconstruction_std_err;
    for (double e : rep.kl_std_errs) se += e * e;
    se = std::sqrt(se);
    CHECK(full_bound <= exact_logp + 4.0 * se);
}

TEST_SUITE_END();
