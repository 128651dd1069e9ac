#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcrisk::concordance {

/// One patient's evaluation triple, with an optional stratification label
/// (e.g. ISUP grade) for grouped reporting.
struct OutcomePair {
    double time = 0.0;   // months, > 0
    bool event = false;  // true = recurrence observed
    double score = 0.0;  // predicted risk, higher = riskier
    std::string group;   // optional stratum label
};

/// Harrell's c-index for right-censored outcomes.
///
/// Permissible pairs (i,j): t_i < t_j with event_i, or t_i == t_j with
/// exactly one event (the event patient is expected to rank riskier).
/// Concordant pairs score 1, score ties 0.5. Throws NumericError when no
/// permissible pair exists.
double cindex(std::span<const OutcomePair> pairs);

/// cindex within each group; groups with no permissible pair map to nullopt
/// rather than failing.
std::map<std::string, std::optional<double>> cindex_by_group(std::span<const OutcomePair> pairs);

/// Number of permissible pairs (0 means cindex would be undefined).
std::size_t permissible_pairs(std::span<const OutcomePair> pairs);

}  // namespace bcrisk::concordance
