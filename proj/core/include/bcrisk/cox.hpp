#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bcrisk::cox {

/// Right-censored outcomes plus a dense covariate matrix (row per patient).
struct CoxInput {
    std::vector<double> times;
    std::vector<std::uint8_t> events;  // 1 = event observed
    std::size_t num_covariates = 0;
    std::vector<double> covariates;  // row-major, times.size() x num_covariates
    std::vector<std::string> names;  // optional, defaults to x1..xp

    double covariate(std::size_t row, std::size_t col) const {
        return covariates[row * num_covariates + col];
    }
    std::size_t size() const { return times.size(); }
};

struct FitOptions {
    int max_iterations = 50;
    double score_tolerance = 1e-8;  // convergence: max |score component|
    int max_step_halvings = 30;
};

/// Fitted multivariable proportional-hazards model (Breslow ties).
struct CoxFit {
    std::vector<double> beta;
    std::vector<double> se;
    std::vector<double> hazard_ratio;  // exp(beta)
    std::vector<double> ci_low;        // exp(beta - 1.96 se)
    std::vector<double> ci_high;
    std::vector<double> wald_z;
    std::vector<double> wald_p;
    std::vector<double> covariance;  // row-major p x p
    std::vector<std::string> names;
    double log_likelihood = 0.0;
    std::vector<double> loglik_trace;  // per accepted Newton iterate
    int iterations = 0;
    bool converged = false;

    std::vector<double> linear_predictors(const CoxInput& data) const;
};

/// Newton-Raphson on the Breslow partial log-likelihood with step-halving.
/// Throws DataError when there are no events and NumericError (naming the
/// covariate) on constant columns or a singular information matrix.
/// Non-convergence within max_iterations returns partial results with
/// converged = false.
CoxFit fit(const CoxInput& data, const FitOptions& options = {});

/// Harrell's c-index of the fitted linear predictor against the outcomes.
double joint_cindex(const CoxFit& fit, const CoxInput& data);

}  // namespace bcrisk::cox
