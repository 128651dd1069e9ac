#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcrisk/capra.hpp"
#include "bcrisk/interpret.hpp"
#include "bcrisk/mil.hpp"
#include "bcrisk/tiling.hpp"

namespace bcrisk::io {

/// Stamped into every report so outputs are reproducible from (inputs,
/// config, seed) alone. No timestamps by design.
struct Provenance {
    std::string version;
    std::uint64_t seed = 0;
    std::string config_hash;

    std::vector<std::string> comment_lines() const;
};

/// One row of the cohort CSV. Clinical columns land in a ClinRecord; empty
/// cells stay missing.
struct CohortRow {
    std::string patient_id;
    double time_months = 0.0;
    bool event = false;
    capra::ClinRecord clinical;
    std::optional<int> isup;
    std::optional<int> surgery_year;
};

/// Cohort CSV schema: patient_id,time_months,event,psa,gleason_primary,
/// gleason_secondary,pt_stage,pn_stage,sm,ece,svi,lni,isup,surgery_year,
/// ajcc_edition. Malformed rows raise DataError naming the line number.
std::vector<CohortRow> read_cohort_csv(const std::filesystem::path& path);

struct ScoreRow {
    std::string patient_id;
    double score = 0.0;
};

/// Two-column CSV (patient_id,score); '#' lines are ignored on read.
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRow> rows,
                      const Provenance& provenance);

/// Bag directory layout: manifest.json naming the patient, dimension and
/// per-region CSV files (one 64 x d matrix each).
mil::FeatureBag read_bag(const std::filesystem::path& directory);
void write_bag(const std::filesystem::path& directory, const mil::FeatureBag& bag);

/// All immediate subdirectories containing a manifest.json, sorted by name.
std::vector<mil::FeatureBag> read_bag_collection(const std::filesystem::path& root);

void write_params_json(const std::filesystem::path& path, const mil::AggregatorParams& params,
                       const Provenance& provenance);
mil::AggregatorParams read_params_json(const std::filesystem::path& path);

void write_tileplan_json(const std::filesystem::path& path, const tiling::TilePlan& plan,
                         std::span<const tiling::TissueCrop> crops, const Provenance& provenance);

/// Slide manifest for tile planning: {"patient_id": ..., "slides": [{"id",
/// "width", "height", "spacings": [...], "mask": optional pgm path}]}.
/// Box and mask are interpreted at the spacing chosen from "spacings".
struct SlideEntry {
    std::string id;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> spacings;
    std::optional<std::filesystem::path> mask_path;
};

struct SlideManifest {
    std::string patient_id;
    std::vector<SlideEntry> slides;
};

SlideManifest read_slide_manifest(const std::filesystem::path& path);

/// Attention stack JSON: {"gamma": ..., "transformers": [{"frozen": bool,
/// "width", "height", "values": [...]} or {"frozen": bool, "pgm": path}]}.
interpret::AttentionStack read_attention_stack(const std::filesystem::path& path);

}  // namespace bcrisk::io
