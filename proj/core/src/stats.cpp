#include "bcrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "bcrisk/errors.hpp"
#include "bcrisk/quantile.hpp"
#include "bcrisk/rng.hpp"

namespace bcrisk::stats {

namespace {

constexpr std::size_t kMaxRedrawsPerResample = 1000;
constexpr std::size_t kMaxEnumeration = 1 << 20;

struct Strata {
    std::vector<std::size_t> events;
    std::vector<std::size_t> censored;
};

Strata split_strata(std::span<const concordance::OutcomePair> pairs) {
    Strata s;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        (pairs[i].event ? s.events : s.censored).push_back(i);
    }
    return s;
}

// One stratified draw: |events| indices from the event stratum and
// |censored| from the censored stratum, both with replacement.
std::vector<std::size_t> draw_indices(const Strata& strata, Rng& rng) {
    std::vector<std::size_t> idx;
    idx.reserve(strata.events.size() + strata.censored.size());
    for (std::size_t k = 0; k < strata.events.size(); ++k) {
        idx.push_back(strata.events[rng.next_below(strata.events.size())]);
    }
    for (std::size_t k = 0; k < strata.censored.size(); ++k) {
        idx.push_back(strata.censored[rng.next_below(strata.censored.size())]);
    }
    return idx;
}

std::vector<concordance::OutcomePair> gather(std::span<const concordance::OutcomePair> pairs,
                                             std::span<const std::size_t> idx) {
    std::vector<concordance::OutcomePair> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(pairs[i]);
    return out;
}

// Decodes enumeration rank b into a mixed-radix index draw (each slot of a
// stratum ranges over that stratum independently).
std::vector<std::size_t> enumerated_indices(const Strata& strata, std::size_t rank) {
    std::vector<std::size_t> idx;
    idx.reserve(strata.events.size() + strata.censored.size());
    for (std::size_t k = 0; k < strata.events.size(); ++k) {
        idx.push_back(strata.events[rank % strata.events.size()]);
        rank /= strata.events.size();
    }
    for (std::size_t k = 0; k < strata.censored.size(); ++k) {
        idx.push_back(strata.censored[rank % strata.censored.size()]);
        rank /= strata.censored.size();
    }
    return idx;
}

std::size_t enumeration_size(const Strata& strata) {
    std::size_t total = 1;
    auto pow_checked = [&](std::size_t base, std::size_t exp) {
        for (std::size_t k = 0; k < exp; ++k) {
            if (base != 0 && total > kMaxEnumeration / base) {
                throw DataError("exhaustive bootstrap: enumeration too large");
            }
            total *= base;
        }
    };
    pow_checked(strata.events.size(), strata.events.size());
    pow_checked(strata.censored.size(), strata.censored.size());
    return total;
}

void run_partitioned(std::size_t total, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1) {
        for (std::size_t b = 0; b < total; ++b) fn(b);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = std::min<std::size_t>(w * chunk, total);
        const std::size_t hi = std::min<std::size_t>(lo + chunk, total);
        if (lo == hi) continue;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t b = lo; b < hi; ++b) fn(b);
        });
    }
    for (auto& t : pool) t.join();
}

double checked_cindex(std::span<const concordance::OutcomePair> pairs, bool& defined) {
    if (concordance::permissible_pairs(pairs) == 0) {
        defined = false;
        return 0.0;
    }
    defined = true;
    return concordance::cindex(pairs);
}

}  // namespace

CindexCi bootstrap_ci(std::span<const concordance::OutcomePair> pairs,
                      const BootstrapConfig& cfg) {
    if (cfg.resamples < 1) throw DataError("bootstrap_ci: resamples must be >= 1");
    const Strata strata = split_strata(pairs);

    CindexCi result;
    result.estimate = concordance::cindex(pairs);

    const std::size_t total = cfg.exhaustive ? enumeration_size(strata) : cfg.resamples;
    std::vector<double> stat(total);
    std::vector<std::uint8_t> ok(total, 0);
    std::vector<std::size_t> redraws(total, 0);

    run_partitioned(total, cfg.workers, [&](std::size_t b) {
        if (cfg.exhaustive) {
            const auto idx = enumerated_indices(strata, b);
            bool defined = false;
            stat[b] = checked_cindex(gather(pairs, idx), defined);
            ok[b] = defined ? 1 : 0;
            if (cfg.resample_observer) cfg.resample_observer(b, idx);
            return;
        }
        Rng rng = Rng::stream(cfg.seed, "bootstrap", b);
        for (std::size_t attempt = 0; attempt <= kMaxRedrawsPerResample; ++attempt) {
            const auto idx = draw_indices(strata, rng);
            bool defined = false;
            const double c = checked_cindex(gather(pairs, idx), defined);
            if (defined) {
                stat[b] = c;
                ok[b] = 1;
                redraws[b] = attempt;
                if (cfg.resample_observer) cfg.resample_observer(b, idx);
                return;
            }
        }
    });

    std::vector<double> kept;
    kept.reserve(total);
    for (std::size_t b = 0; b < total; ++b) {
        if (ok[b]) kept.push_back(stat[b]);
        result.redraws += redraws[b];
    }
    if (kept.empty()) throw NumericError("bootstrap_ci: all resamples undefined");
    if (!cfg.exhaustive && kept.size() != total) {
        throw NumericError("bootstrap_ci: resample exhausted redraw budget");
    }
    result.ci_low = quantile(kept, 0.025);
    result.ci_high = quantile(kept, 0.975);
    return result;
}

ComparisonResult paired_compare(std::span<const concordance::OutcomePair> pairs_a,
                                std::span<const concordance::OutcomePair> pairs_b,
                                const BootstrapConfig& cfg) {
    if (pairs_a.size() != pairs_b.size()) {
        throw DataError("paired_compare: models score different numbers of patients");
    }
    for (std::size_t i = 0; i < pairs_a.size(); ++i) {
        if (pairs_a[i].time != pairs_b[i].time || pairs_a[i].event != pairs_b[i].event) {
            throw DataError("paired_compare: outcome mismatch at patient " + std::to_string(i));
        }
    }
    const Strata strata = split_strata(pairs_a);

    ComparisonResult result;
    result.delta = concordance::cindex(pairs_a) - concordance::cindex(pairs_b);

    const std::size_t total = cfg.exhaustive ? enumeration_size(strata) : cfg.resamples;
    std::vector<double> delta(total);
    std::vector<std::uint8_t> ok(total, 0);

    run_partitioned(total, cfg.workers, [&](std::size_t b) {
        Rng rng = Rng::stream(cfg.seed, "bootstrap", b);
        for (std::size_t attempt = 0; attempt <= kMaxRedrawsPerResample; ++attempt) {
            const std::vector<std::size_t> idx =
                cfg.exhaustive ? enumerated_indices(strata, b) : draw_indices(strata, rng);
            // A and B share times/events, so definedness agrees between them.
            bool defined = false;
            const double ca = checked_cindex(gather(pairs_a, idx), defined);
            if (!defined) {
                if (cfg.exhaustive) return;
                continue;
            }
            delta[b] = ca - concordance::cindex(gather(pairs_b, idx));
            ok[b] = 1;
            if (cfg.resample_observer) cfg.resample_observer(b, idx);
            return;
        }
    });

    std::vector<double> kept;
    kept.reserve(total);
    for (std::size_t b = 0; b < total; ++b) {
        if (ok[b]) kept.push_back(delta[b]);
    }
    if (kept.empty()) throw NumericError("paired_compare: all resamples undefined");
    if (!cfg.exhaustive && kept.size() != total) {
        throw NumericError("paired_compare: resample exhausted redraw budget");
    }

    result.ci_low = quantile(kept, 0.025);
    result.ci_high = quantile(kept, 0.975);

    const double n = static_cast<double>(kept.size());
    double le = 0.0, ge = 0.0;
    for (double d : kept) {
        if (d <= 0.0) le += 1.0;
        if (d >= 0.0) ge += 1.0;
    }
    const double tail = std::min(le + 1.0, ge + 1.0) / (n + 1.0);
    result.p = std::min(1.0, cfg.two_sided ? 2.0 * tail : tail);
    result.q = result.p;
    return result;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<double> q(m, 0.0);
    if (m == 0) return q;
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw DataError("bh_adjust: p-value outside [0,1]");
    }
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    // Step-up: q_(i) = min_{j >= i} p_(j) * m / j, clipped at 1. The factor
    // m/j is formed first so the top rank keeps q == p exactly.
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double factor = static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, factor * p_values[order[r]]);
        q[order[r]] = std::min(1.0, running);
    }
    return q;
}

}  // namespace bcrisk::stats
