#include "bcrisk/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcrisk/concordance.hpp"
#include "bcrisk/errors.hpp"

namespace bcrisk::cox {

namespace {

std::string covariate_name(const CoxInput& data, std::size_t j) {
    if (j < data.names.size() && !data.names[j].empty()) return data.names[j];
    return "x" + std::to_string(j + 1);
}

// Cholesky factorization of the (SPD) information matrix. Reports the first
// column whose pivot collapses, which is the covariate that makes the model
// unidentifiable.
class Cholesky {
public:
    Cholesky(std::vector<double> matrix, std::size_t p, const CoxInput& data)
        : l_(std::move(matrix)), p_(p) {
        double max_diag = 0.0;
        for (std::size_t k = 0; k < p_; ++k) max_diag = std::max(max_diag, l_[k * p_ + k]);
        const double tol = std::max(max_diag, 1.0) * 1e-12;
        for (std::size_t k = 0; k < p_; ++k) {
            double pivot = l_[k * p_ + k];
            for (std::size_t m = 0; m < k; ++m) pivot -= l_[k * p_ + m] * l_[k * p_ + m];
            if (pivot <= tol) {
                throw NumericError("cox: singular information matrix, covariate '" +
                                   covariate_name(data, k) + "' is not identifiable");
            }
            l_[k * p_ + k] = std::sqrt(pivot);
            for (std::size_t i = k + 1; i < p_; ++i) {
                double v = l_[i * p_ + k];
                for (std::size_t m = 0; m < k; ++m) v -= l_[i * p_ + m] * l_[k * p_ + m];
                l_[i * p_ + k] = v / l_[k * p_ + k];
            }
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        std::vector<double> y(rhs.begin(), rhs.end());
        for (std::size_t i = 0; i < p_; ++i) {
            for (std::size_t m = 0; m < i; ++m) y[i] -= l_[i * p_ + m] * y[m];
            y[i] /= l_[i * p_ + i];
        }
        for (std::size_t i = p_; i-- > 0;) {
            for (std::size_t m = i + 1; m < p_; ++m) y[i] -= l_[m * p_ + i] * y[m];
            y[i] /= l_[i * p_ + i];
        }
        return y;
    }

    std::vector<double> inverse() const {
        std::vector<double> inv(p_ * p_, 0.0);
        std::vector<double> unit(p_, 0.0);
        for (std::size_t j = 0; j < p_; ++j) {
            unit[j] = 1.0;
            const auto col = solve(unit);
            for (std::size_t i = 0; i < p_; ++i) inv[i * p_ + j] = col[i];
            unit[j] = 0.0;
        }
        return inv;
    }

private:
    std::vector<double> l_;  // lower triangle, row-major
    std::size_t p_;
};

struct Derivatives {
    double loglik = 0.0;
    std::vector<double> score;
    std::vector<double> information;  // row-major p x p
};

// Breslow partial likelihood: one backward sweep over times. All subjects
// tied at a death time sit in that time's risk set.
Derivatives evaluate(const CoxInput& data, std::span<const std::size_t> order_desc,
                     std::span<const double> beta, bool with_derivatives) {
    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates;
    Derivatives d;
    d.score.assign(p, 0.0);
    d.information.assign(p * p, 0.0);

    std::vector<double> eta(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < p; ++j) v += beta[j] * data.covariate(i, j);
        eta[i] = v;
    }

    double s0 = 0.0;
    std::vector<double> s1(p, 0.0);
    std::vector<double> s2(p * p, 0.0);

    std::size_t pos = 0;
    while (pos < n) {
        const double t = data.times[order_desc[pos]];
        std::size_t group_end = pos;
        while (group_end < n && data.times[order_desc[group_end]] == t) ++group_end;

        // Enter the whole tie group into the risk set first.
        for (std::size_t k = pos; k < group_end; ++k) {
            const std::size_t i = order_desc[k];
            const double r = std::exp(eta[i]);
            s0 += r;
            for (std::size_t a = 0; a < p; ++a) {
                const double xa = data.covariate(i, a);
                s1[a] += r * xa;
                if (with_derivatives) {
                    for (std::size_t b = 0; b <= a; ++b) {
                        s2[a * p + b] += r * xa * data.covariate(i, b);
                    }
                }
            }
        }

        for (std::size_t k = pos; k < group_end; ++k) {
            const std::size_t i = order_desc[k];
            if (!data.events[i]) continue;
            d.loglik += eta[i] - std::log(s0);
            if (!with_derivatives) continue;
            for (std::size_t a = 0; a < p; ++a) {
                const double mean_a = s1[a] / s0;
                d.score[a] += data.covariate(i, a) - mean_a;
                for (std::size_t b = 0; b <= a; ++b) {
                    d.information[a * p + b] += s2[a * p + b] / s0 - mean_a * (s1[b] / s0);
                }
            }
        }
        pos = group_end;
    }

    // Mirror the lower triangle.
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a + 1; b < p; ++b) {
            d.information[a * p + b] = d.information[b * p + a];
        }
    }
    return d;
}

void validate(const CoxInput& data) {
    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates;
    if (n == 0) throw DataError("cox: empty input");
    if (data.events.size() != n || data.covariates.size() != n * p) {
        throw DataError("cox: inconsistent input sizes");
    }
    if (std::accumulate(data.events.begin(), data.events.end(), 0) == 0) {
        throw DataError("cox: no events, partial likelihood undefined");
    }
    for (double x : data.covariates) {
        if (!std::isfinite(x)) throw DataError("cox: non-finite covariate");
    }
    for (std::size_t j = 0; j < p; ++j) {
        const double first = data.covariate(0, j);
        bool constant = true;
        for (std::size_t i = 1; i < n && constant; ++i) {
            constant = data.covariate(i, j) == first;
        }
        if (constant) {
            throw NumericError("cox: covariate '" + covariate_name(data, j) +
                               "' is constant, information matrix singular");
        }
    }
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

std::vector<double> CoxFit::linear_predictors(const CoxInput& data) const {
    std::vector<double> lp(data.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < data.num_covariates; ++j) {
            v += beta[j] * data.covariate(i, j);
        }
        lp[i] = v;
    }
    return lp;
}

CoxFit fit(const CoxInput& data, const FitOptions& options) {
    validate(data);
    const std::size_t p = data.num_covariates;

    std::vector<std::size_t> order_desc(data.size());
    std::iota(order_desc.begin(), order_desc.end(), std::size_t{0});
    std::sort(order_desc.begin(), order_desc.end(), [&](std::size_t a, std::size_t b) {
        return data.times[a] > data.times[b];
    });

    CoxFit result;
    result.beta.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) result.names.push_back(covariate_name(data, j));

    Derivatives current = evaluate(data, order_desc, result.beta, true);
    result.loglik_trace.push_back(current.loglik);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        result.iterations = iter;

        double max_score = 0.0;
        for (double u : current.score) max_score = std::max(max_score, std::abs(u));
        if (max_score < options.score_tolerance) {
            result.converged = true;
            break;
        }

        const Cholesky chol(current.information, p, data);
        std::vector<double> step = chol.solve(current.score);

        // Step-halving keeps the likelihood trace non-decreasing. Decreases
        // below the evaluation noise floor must not trigger halving, or the
        // solver stalls just above the score tolerance.
        const double noise = 1e-12 * (1.0 + std::abs(current.loglik));
        std::vector<double> candidate(p);
        Derivatives next;
        double scale = 1.0;
        for (int half = 0; half <= options.max_step_halvings; ++half) {
            for (std::size_t j = 0; j < p; ++j) candidate[j] = result.beta[j] + scale * step[j];
            next = evaluate(data, order_desc, candidate, true);
            if (next.loglik >= current.loglik - noise || half == options.max_step_halvings) break;
            scale *= 0.5;
        }
        result.beta = candidate;
        current = std::move(next);
        result.loglik_trace.push_back(current.loglik);
    }

    result.log_likelihood = current.loglik;

    const Cholesky chol(current.information, p, data);
    result.covariance = chol.inverse();
    for (std::size_t j = 0; j < p; ++j) {
        const double var = result.covariance[j * p + j];
        const double se = std::sqrt(std::max(var, 0.0));
        const double z = se > 0.0 ? result.beta[j] / se : 0.0;
        result.se.push_back(se);
        result.hazard_ratio.push_back(std::exp(result.beta[j]));
        result.ci_low.push_back(std::exp(result.beta[j] - 1.96 * se));
        result.ci_high.push_back(std::exp(result.beta[j] + 1.96 * se));
        result.wald_z.push_back(z);
        result.wald_p.push_back(std::min(1.0, 2.0 * normal_sf(std::abs(z))));
    }
    return result;
}

double joint_cindex(const CoxFit& fit, const CoxInput& data) {
    const auto lp = fit.linear_predictors(data);
    std::vector<concordance::OutcomePair> pairs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        pairs[i] = {data.times[i], data.events[i] != 0, lp[i], ""};
    }
    return concordance::cindex(pairs);
}

}  // namespace bcrisk::cox
