#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bcrisk/mil.hpp"
#include "bcrisk/raster.hpp"

namespace bcrisk::interpret {

/// Signed leave-one-tile-out contribution. raw > 0 marks a risk-increasing
/// tile (occluding it lowers the predicted risk).
struct ContributionScore {
    std::string patient_id;
    std::size_t region = 0;
    std::size_t tile = 0;
    double raw = 0.0;
    double clipped = 0.0;     // raw clamped to [q5, q95]
    double normalized = 0.0;  // clipped / max |clipped|, in [-1, 1]
};

/// Risk functional over a bag; production code passes mil::risk bound to
/// trained parameters, tests may pass any bag -> scalar map.
using RiskModel = std::function<double(const mil::FeatureBag&)>;

struct OcclusionResult {
    std::vector<ContributionScore> all;        // every tile, bag order
    std::vector<ContributionScore> top_positive;  // K most risk-increasing
    std::vector<ContributionScore> top_negative;  // K most risk-lowering
    double baseline_risk = 0.0;
};

/// Removes tiles one at a time (a region losing its last tile drops out of
/// the bag) and scores each as baseline - occluded risk. Selection needs at
/// least 2K tiles so the top and bottom sets stay disjoint.
OcclusionResult occlusion_scores(const mil::FeatureBag& bag, const RiskModel& model,
                                 std::size_t top_k = 10);

/// Cohort-level clipping at the 5th/95th percentile of all raw scores, then
/// normalization by the maximum absolute clipped value. All-zero input
/// yields all-zero output.
void normalize_contributions(std::span<ContributionScore> cohort_scores);

/// One attention raster per transformer in the hierarchy.
struct AttentionRaster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;  // row-major, >= 0
    bool frozen = false;

    double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

struct AttentionStack {
    std::vector<AttentionRaster> transformers;
    double gamma = 1.0;
};

/// Multiplicative factorization across the hierarchy: each transformer
/// contributes its raster raised to gamma (trained) or 1-gamma (frozen), so
/// gamma = 1 makes frozen transformers exactly neutral. The product is
/// min-max normalized to [0,1] at the slide level.
std::vector<double> factorized_attention(const AttentionStack& stack);

struct Heatmap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> smoothed;     // after Gaussian smoothing
    std::vector<double> thresholded;  // values below the threshold zeroed
    raster::RgbImage image;           // diverging ramp, for 0.5-alpha overlay
};

/// Gaussian smoothing (normalized discrete kernel), sub-threshold
/// suppression and a blue-white-red ramp over the surviving scores.
Heatmap render_heatmap(std::span<const double> raster_values, std::size_t width,
                       std::size_t height, double threshold = 0.5, double sigma = 2.0);

}  // namespace bcrisk::interpret
