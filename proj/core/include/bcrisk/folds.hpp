#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bcrisk::folds {

/// Joint stratification labels for one development patient.
struct StratumLabels {
    std::string patient_id;
    bool recurrence = false;
    int isup_grade = 1;       // 1..5
    bool surgery_after_2005 = false;  // boundary year 2005 counts as "after"
};

struct FoldAssignment {
    std::vector<int> fold;  // parallel to the input patient order
    int num_folds = 0;
    /// label value (e.g. "isup=3") -> per-fold counts
    std::map<std::string, std::vector<int>> label_counts;

    std::vector<int> fold_sizes() const;
};

/// Greedy iterative stratification over the three label dimensions:
/// repeatedly take the label value with the fewest unassigned patients and
/// give each of its patients to the fold with the greatest remaining demand
/// for that value; ties go to the fold with most remaining capacity, then a
/// seeded draw. Deterministic for a fixed seed. Throws DataError when
/// k < 2 or k > n.
FoldAssignment stratified_kfold(std::span<const StratumLabels> labels, int k, std::uint64_t seed);

/// Label values carried by one patient, e.g. {"rec=1", "isup=3", "era=pre"}.
std::vector<std::string> label_values(const StratumLabels& labels);

}  // namespace bcrisk::folds
