#include "bcrisk/capra.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "bcrisk/errors.hpp"
#include "bcrisk/quantile.hpp"

namespace bcrisk::capra {

namespace {

const std::array<std::pair<std::string, TStage>, 9> kStageVocabulary = {{
    {"t2", TStage::T2},
    {"t2a", TStage::T2a},
    {"t2b", TStage::T2b},
    {"t2c", TStage::T2c},
    {"t3", TStage::T3},
    {"t3a", TStage::T3a},
    {"t3b", TStage::T3b},
    {"t3c", TStage::T3c},
    {"t4", TStage::T4},
}};

std::string normalize_token(const std::string& token) {
    std::string out;
    for (char c : token) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!out.empty() && out.front() == 'p') out.erase(out.begin());
    return out;
}

std::string vocabulary_list() {
    std::string list;
    for (const auto& [token, stage] : kStageVocabulary) {
        if (!list.empty()) list += ", ";
        list += "T" + token.substr(1);
    }
    return list;
}

int psa_points(double psa) {
    if (psa <= 6.0) return 0;
    if (psa <= 10.0) return 1;
    if (psa <= 20.0) return 2;
    return 3;
}

// Table rows: total <= 6 scores 0, 3+4 scores 1, 4+3 scores 2, totals 8-10
// score 3. Off-table total-7 splits (2+5, 5+2) follow the dominant pattern.
int gleason_points(int primary, int secondary) {
    const int total = primary + secondary;
    if (total <= 6) return 0;
    if (total >= 8) return 3;
    return primary <= secondary ? 1 : 2;
}

}  // namespace

std::optional<TStage> parse_t_stage(const std::string& token) {
    const std::string key = normalize_token(token);
    if (key.empty()) return std::nullopt;
    for (const auto& [text, stage] : kStageVocabulary) {
        if (key == text) return stage;
    }
    throw DataError("unknown pT stage '" + token + "' (expected one of: " + vocabulary_list() +
                    ", with optional 'p' prefix)");
}

std::optional<NStage> parse_n_stage(const std::string& token) {
    const std::string key = normalize_token(token);
    if (key.empty() || key == "nx") return std::nullopt;
    if (key == "n0") return NStage::N0;
    if (key == "n1") return NStage::N1;
    throw DataError("unknown pN stage '" + token + "' (expected N0, N1 or NX)");
}

std::string to_string(TStage stage) {
    for (const auto& [text, s] : kStageVocabulary) {
        if (s == stage) {
            std::string out = text;
            out[0] = 'T';
            return out;
        }
    }
    return "?";
}

std::string to_string(RiskGroup group) {
    switch (group) {
        case RiskGroup::Low: return "low";
        case RiskGroup::Intermediate: return "intermediate";
        case RiskGroup::High: return "high";
    }
    return "?";
}

ClinRecord infer_surrogates(const ClinRecord& record) {
    ClinRecord out = record;
    if (record.pt_stage) {
        const TStage stage = *record.pt_stage;
        if (!out.ece) {
            out.ece = stage >= TStage::T3a ? Flag::Yes : Flag::No;
            out.provenance.ece_surrogate = true;
        }
        if (!out.svi) {
            const TStage threshold = record.ajcc_edition == 4 ? TStage::T3c : TStage::T3b;
            out.svi = stage >= threshold ? Flag::Yes : Flag::No;
            out.provenance.svi_surrogate = true;
        }
        if (!out.surgical_margin) {
            out.surgical_margin = stage >= TStage::T3 ? Flag::Yes : Flag::No;
            out.provenance.sm_surrogate = true;
        }
    }
    if (!out.lni && record.pn_stage) {
        out.lni = *record.pn_stage == NStage::N1 ? Flag::Yes : Flag::No;
        out.provenance.lni_surrogate = true;
    }
    return out;
}

CapraScore score(const ClinRecord& record) {
    auto require = [&](bool present, const char* field) {
        if (!present) {
            throw DataError("capra: record '" + record.patient_id + "' missing " + field +
                            " after surrogate inference and imputation");
        }
    };
    require(record.psa.has_value(), "PSA");
    require(record.gleason_primary.has_value() && record.gleason_secondary.has_value(),
            "Gleason pattern");
    require(record.surgical_margin.has_value(), "surgical margin status");
    require(record.svi.has_value(), "SVI");
    require(record.ece.has_value(), "ECE");
    require(record.lni.has_value(), "LNI");

    if (*record.psa < 0.0) throw DataError("capra: negative PSA");
    for (int g : {*record.gleason_primary, *record.gleason_secondary}) {
        if (g < 1 || g > 5) throw DataError("capra: Gleason pattern outside 1..5");
    }

    CapraScore s;
    s.psa_points = psa_points(*record.psa);
    s.gleason_points = gleason_points(*record.gleason_primary, *record.gleason_secondary);
    s.sm_points = *record.surgical_margin == Flag::Yes ? 2 : 0;
    s.svi_points = *record.svi == Flag::Yes ? 2 : 0;
    s.ece_points = *record.ece == Flag::Yes ? 1 : 0;
    s.lni_points = *record.lni == Flag::Yes ? 1 : 0;
    s.points = s.psa_points + s.gleason_points + s.sm_points + s.svi_points + s.ece_points +
               s.lni_points;
    s.group = s.points <= 2 ? RiskGroup::Low
                            : (s.points <= 5 ? RiskGroup::Intermediate : RiskGroup::High);
    s.provenance = record.provenance;
    return s;
}

namespace {

std::optional<Flag> mode_flag(std::span<const ClinRecord> records,
                              std::optional<Flag> ClinRecord::* field) {
    int yes = 0, no = 0;
    for (const auto& r : records) {
        if (r.*field == Flag::Yes) ++yes;
        if (r.*field == Flag::No) ++no;
    }
    if (yes == 0 && no == 0) return std::nullopt;
    return yes > no ? Flag::Yes : Flag::No;  // tie resolves to the benign value
}

std::optional<int> mode_gleason(std::span<const ClinRecord> records,
                                std::optional<int> ClinRecord::* field) {
    std::map<int, int> counts;
    for (const auto& r : records) {
        if (r.*field) ++counts[*(r.*field)];
    }
    if (counts.empty()) return std::nullopt;
    int best = 0, best_count = 0;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {  // map order makes ties resolve to the smaller pattern
            best = value;
            best_count = count;
        }
    }
    return best;
}

}  // namespace

std::vector<ClinRecord> impute_cohort(std::span<const ClinRecord> records) {
    if (records.empty()) throw DataError("impute_cohort: empty cohort");

    std::vector<double> psa_observed;
    for (const auto& r : records) {
        if (r.psa) psa_observed.push_back(*r.psa);
    }
    const auto sm_mode = mode_flag(records, &ClinRecord::surgical_margin);
    const auto ece_mode = mode_flag(records, &ClinRecord::ece);
    const auto svi_mode = mode_flag(records, &ClinRecord::svi);
    const auto lni_mode = mode_flag(records, &ClinRecord::lni);
    const auto gp_mode = mode_gleason(records, &ClinRecord::gleason_primary);
    const auto gs_mode = mode_gleason(records, &ClinRecord::gleason_secondary);

    auto fill_flag = [](std::optional<Flag>& slot, const std::optional<Flag>& mode, bool& flag,
                        const char* name) {
        if (slot) return;
        if (!mode) throw DataError(std::string("impute_cohort: ") + name +
                                   " missing in every record");
        slot = mode;
        flag = true;
    };

    std::vector<ClinRecord> out(records.begin(), records.end());
    for (auto& r : out) {
        if (!r.psa) {
            if (psa_observed.empty()) throw DataError("impute_cohort: PSA missing in every record");
            r.psa = median(psa_observed);
            r.provenance.psa_imputed = true;
        }
        if (!r.gleason_primary || !r.gleason_secondary) {
            if (!gp_mode || !gs_mode) {
                throw DataError("impute_cohort: Gleason pattern missing in every record");
            }
            if (!r.gleason_primary) r.gleason_primary = gp_mode;
            if (!r.gleason_secondary) r.gleason_secondary = gs_mode;
            r.provenance.gleason_imputed = true;
        }
        fill_flag(r.surgical_margin, sm_mode, r.provenance.sm_imputed, "surgical margin");
        fill_flag(r.ece, ece_mode, r.provenance.ece_imputed, "ECE");
        fill_flag(r.svi, svi_mode, r.provenance.svi_imputed, "SVI");
        fill_flag(r.lni, lni_mode, r.provenance.lni_imputed, "LNI");
    }
    return out;
}

}  // namespace bcrisk::capra
