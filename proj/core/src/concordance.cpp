#include "bcrisk/concordance.hpp"

#include "bcrisk/errors.hpp"

namespace bcrisk::concordance {

namespace {

struct PairTally {
    double concordant = 0.0;  // score-tie pairs contribute 0.5
    std::size_t permissible = 0;
};

PairTally tally(std::span<const OutcomePair> pairs) {
    PairTally t;
    const std::size_t n = pairs.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& a = pairs[i];
            const auto& b = pairs[j];
            // a plays the "shorter time, event" role.
            const bool ordered = a.time < b.time && a.event;
            const bool tied_time = a.time == b.time && a.event && !b.event;
            if (!ordered && !tied_time) continue;
            ++t.permissible;
            if (a.score > b.score) {
                t.concordant += 1.0;
            } else if (a.score == b.score) {
                t.concordant += 0.5;
            }
        }
    }
    return t;
}

}  // namespace

std::size_t permissible_pairs(std::span<const OutcomePair> pairs) {
    return tally(pairs).permissible;
}

double cindex(std::span<const OutcomePair> pairs) {
    const PairTally t = tally(pairs);
    if (t.permissible == 0) {
        throw NumericError("cindex: no permissible pairs (all censored or single patient)");
    }
    return t.concordant / static_cast<double>(t.permissible);
}

std::map<std::string, std::optional<double>> cindex_by_group(std::span<const OutcomePair> pairs) {
    std::map<std::string, std::vector<OutcomePair>> by_group;
    for (const auto& p : pairs) by_group[p.group].push_back(p);

    std::map<std::string, std::optional<double>> result;
    for (const auto& [group, members] : by_group) {
        const PairTally t = tally(members);
        if (t.permissible == 0) {
            result[group] = std::nullopt;
        } else {
            result[group] = t.concordant / static_cast<double>(t.permissible);
        }
    }
    return result;
}

}  // namespace bcrisk::concordance
