#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcrisk::capra {

enum class Flag { No, Yes };  // tri-state via std::optional<Flag>

/// Pathological T stage, ordered for >= comparisons (numeric part first,
/// then sub-stage letter). T3c exists only under the AJCC 4th edition.
enum class TStage { T2, T2a, T2b, T2c, T3, T3a, T3b, T3c, T4 };

enum class NStage { N0, N1 };

/// Clinicopathological record for one patient. Missing values are nullopt
/// until the surrogate-inference and imputation passes fill them.
struct ClinRecord {
    std::string patient_id;
    std::optional<double> psa;  // ng/mL, >= 0
    std::optional<int> gleason_primary;    // 1..5
    std::optional<int> gleason_secondary;  // 1..5
    std::optional<Flag> surgical_margin;   // Yes = positive
    std::optional<Flag> ece;               // extracapsular extension
    std::optional<Flag> svi;               // seminal vesicle invasion
    std::optional<Flag> lni;               // lymph node involvement
    std::optional<TStage> pt_stage;
    std::optional<NStage> pn_stage;
    int ajcc_edition = 8;  // 4, 5 or 8

    struct Provenance {
        bool psa_imputed = false;
        bool gleason_imputed = false;
        bool sm_imputed = false, sm_surrogate = false;
        bool ece_imputed = false, ece_surrogate = false;
        bool svi_imputed = false, svi_surrogate = false;
        bool lni_imputed = false, lni_surrogate = false;
    } provenance;
};

enum class RiskGroup { Low, Intermediate, High };  // 0-2, 3-5, >=6

struct CapraScore {
    int points = 0;  // 0..12
    RiskGroup group = RiskGroup::Low;
    int psa_points = 0, gleason_points = 0, sm_points = 0;
    int svi_points = 0, ece_points = 0, lni_points = 0;
    ClinRecord::Provenance provenance;
};

/// Parses a stage token, case-insensitive with optional "p" prefix
/// ("pT3a", "t2c"). Throws DataError listing the vocabulary on unknown
/// tokens; empty input yields nullopt (missing).
std::optional<TStage> parse_t_stage(const std::string& token);
std::optional<NStage> parse_n_stage(const std::string& token);
std::string to_string(TStage stage);
std::string to_string(RiskGroup group);

/// Fills missing SM/ECE/SVI/LNI from pathological staging: ECE for
/// pT >= T3a, SVI for pT >= T3b (editions 5/8) or >= T3c (edition 4),
/// SM positive for pT >= T3, LNI from pN1. Explicit values are never
/// overwritten; without a stage token nothing is inferred.
ClinRecord infer_surrogates(const ClinRecord& record);

/// CAPRA-S points: PSA 0/1/2/3 per band, Gleason 0/1/2/3, SM+ 2, SVI 2,
/// ECE 1, LNI 1; groups 0-2 / 3-5 / >=6. Throws DataError when a component
/// is still missing.
CapraScore score(const ClinRecord& record);

/// Cohort-level imputation: numeric fields get the cohort median,
/// categorical fields the cohort mode (ties resolved toward the benign
/// value). Throws DataError when a field needed by some record is missing
/// in every record.
std::vector<ClinRecord> impute_cohort(std::span<const ClinRecord> records);

}  // namespace bcrisk::capra
