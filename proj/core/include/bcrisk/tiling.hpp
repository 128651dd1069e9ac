#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcrisk/raster.hpp"

namespace bcrisk::tiling {

inline constexpr std::size_t kRegionPixels = 2048;
inline constexpr std::size_t kTilePixels = 256;
inline constexpr std::size_t kTilesPerSide = kRegionPixels / kTilePixels;  // 8
inline constexpr std::size_t kTilesPerRegion = kTilesPerSide * kTilesPerSide;  // 64
inline constexpr double kTargetSpacing = 0.50;  // mpp

/// One slide's tissue crop. The bounding box is given in pixels at the
/// crop's native spacing; the mask (if present) is crop-local at the same
/// resolution. resize_factor comes from choose_spacing: 1.0 when the native
/// spacing sits inside the tolerance band, native/target otherwise.
struct TissueCrop {
    std::string slide_id;
    std::size_t width = 0;   // native pixels
    std::size_t height = 0;  // native pixels
    double native_spacing = kTargetSpacing;  // mpp
    double resize_factor = 1.0;  // canvas px per native px
    raster::Image mask;  // empty mask = fully tissue
};

struct Placement {
    std::size_t crop_index = 0;
    std::size_t x = 0;  // canvas pixels
    std::size_t y = 0;
    std::size_t width = 0;   // canvas pixels after spacing resize
    std::size_t height = 0;
    double resize_factor = 1.0;  // canvas px per native px (native/target spacing)
};

struct Packing {
    std::size_t canvas_width = 0;
    std::size_t canvas_height = 0;
    std::vector<Placement> placements;
};

struct SpacingPolicy {
    double target = kTargetSpacing;
    double tolerance = 0.05;  // accept native spacings in target * (1 +- tolerance)
};

struct SpacingChoice {
    double spacing = kTargetSpacing;  // chosen native spacing
    double resize_factor = 1.0;       // canvas px per native px
};

struct Tile {
    std::size_t x = 0;  // canvas pixels
    std::size_t y = 0;
    double coverage = 0.0;  // tissue fraction
    bool kept = true;       // false only when a tile-level threshold applies
};

struct Region {
    std::size_t x = 0;  // canvas pixels, multiples of kRegionPixels
    std::size_t y = 0;
    double coverage = 0.0;
    /// Dominant source crop (greatest overlap), with the extraction box in
    /// that crop's native pixels; -1 when the region touches no crop.
    int source_crop = -1;
    double source_x = 0.0, source_y = 0.0, source_size = 0.0;  // native px
    double resize_factor = 1.0;
    std::vector<Tile> tiles;  // exactly kTilesPerRegion entries, row-major
};

struct TilePlan {
    Packing packing;
    std::vector<Region> regions;  // row-major over the canvas grid
    double region_min_coverage = 0.01;
    std::optional<double> tile_min_coverage;  // set in pretraining mode
};

/// Shelf packing: crops sorted by decreasing height placed left-to-right on
/// shelves; a new shelf opens when the configured maximum width (default
/// sqrt(total area) * 1.2, never below the widest crop) would be exceeded.
/// Placements never overlap and the result is deterministic.
Packing pack(std::span<const TissueCrop> crops, std::optional<double> max_width = std::nullopt);

/// Level selection for one slide: any native spacing inside the tolerance
/// band picks the one closest to target (resize 1); otherwise the largest
/// spacing below the band (the finest acceptable level nearest target) with
/// resize = native/target. Throws NumericError when only coarser levels
/// exist.
SpacingChoice choose_spacing(const SpacingPolicy& policy, std::span<const double> native_spacings);

/// Region/tile grid over a packed canvas: full 2048-px regions anchored at
/// the origin, kept when tissue coverage >= region_min_coverage, each
/// unrolled into 64 tiles of 256 px. tile_min_coverage flags low-content
/// tiles without changing the 64-slot structure.
TilePlan plan_tiles(const Packing& packing, std::span<const TissueCrop> crops,
                    double region_min_coverage = 0.01,
                    std::optional<double> tile_min_coverage = std::nullopt);

}  // namespace bcrisk::tiling
