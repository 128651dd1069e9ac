#include "bcrisk/folds.hpp"

#include <algorithm>
#include <limits>

#include "bcrisk/errors.hpp"
#include "bcrisk/rng.hpp"

namespace bcrisk::folds {

std::vector<std::string> label_values(const StratumLabels& labels) {
    return {
        std::string("rec=") + (labels.recurrence ? "1" : "0"),
        "isup=" + std::to_string(labels.isup_grade),
        std::string("era=") + (labels.surgery_after_2005 ? "post" : "pre"),
    };
}

std::vector<int> FoldAssignment::fold_sizes() const {
    std::vector<int> sizes(num_folds, 0);
    for (int f : fold) {
        if (f >= 0) ++sizes[f];
    }
    return sizes;
}

FoldAssignment stratified_kfold(std::span<const StratumLabels> labels, int k, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
    if (static_cast<std::size_t>(k) > n) {
        throw DataError("stratified_kfold: k exceeds the number of patients");
    }

    // Per-patient label values and per-value membership lists (sorted keys
    // keep label selection deterministic).
    std::vector<std::vector<std::string>> patient_values(n);
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
        patient_values[i] = label_values(labels[i]);
        for (const auto& v : patient_values[i]) members[v].push_back(i);
    }

    // Fractional demand per (label value, fold) and per-fold capacity.
    std::map<std::string, std::vector<double>> demand;
    for (const auto& [value, idx] : members) {
        demand[value].assign(k, static_cast<double>(idx.size()) / k);
    }
    std::vector<double> capacity(k, static_cast<double>(n) / k);

    std::vector<int> assignment(n, -1);
    Rng rng = Rng::stream(seed, "folds");
    std::size_t unassigned = n;

    while (unassigned > 0) {
        // Label value with the fewest remaining unassigned patients.
        const std::string* chosen_value = nullptr;
        std::size_t chosen_remaining = std::numeric_limits<std::size_t>::max();
        for (const auto& [value, idx] : members) {
            std::size_t remaining = 0;
            for (std::size_t i : idx) {
                if (assignment[i] < 0) ++remaining;
            }
            if (remaining > 0 && remaining < chosen_remaining) {
                chosen_remaining = remaining;
                chosen_value = &value;
            }
        }
        if (!chosen_value) break;  // unreachable: every patient carries labels

        for (std::size_t i : members[*chosen_value]) {
            if (assignment[i] >= 0) continue;
            // Fold with greatest remaining demand for this value; ties by
            // remaining capacity, then a seeded draw among the tied folds.
            std::vector<int> best;
            double best_demand = -std::numeric_limits<double>::infinity();
            for (int f = 0; f < k; ++f) {
                const double d = demand[*chosen_value][f];
                if (d > best_demand) {
                    best_demand = d;
                    best = {f};
                } else if (d == best_demand) {
                    best.push_back(f);
                }
            }
            if (best.size() > 1) {
                std::vector<int> by_capacity;
                double best_capacity = -std::numeric_limits<double>::infinity();
                for (int f : best) {
                    if (capacity[f] > best_capacity) {
                        best_capacity = capacity[f];
                        by_capacity = {f};
                    } else if (capacity[f] == best_capacity) {
                        by_capacity.push_back(f);
                    }
                }
                best = std::move(by_capacity);
            }
            const int chosen_fold =
                best.size() == 1 ? best[0]
                                 : best[rng.next_below(best.size())];

            assignment[i] = chosen_fold;
            --unassigned;
            capacity[chosen_fold] -= 1.0;
            for (const auto& v : patient_values[i]) demand[v][chosen_fold] -= 1.0;
        }
    }

    FoldAssignment result;
    result.fold = std::move(assignment);
    result.num_folds = k;
    for (const auto& [value, idx] : members) {
        auto& counts = result.label_counts[value];
        counts.assign(k, 0);
        for (std::size_t i : idx) ++counts[result.fold[i]];
    }
    return result;
}

}  // namespace bcrisk::folds
