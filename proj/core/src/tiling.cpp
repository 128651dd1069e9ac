#include "bcrisk/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcrisk/errors.hpp"

namespace bcrisk::tiling {

namespace {

std::size_t scaled(std::size_t native, double factor) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(native) * factor));
}

bool crop_tissue_at(const TissueCrop& crop, std::size_t nx, std::size_t ny) {
    if (crop.mask.pixels.empty()) return true;  // maskless crop counts as tissue
    return crop.mask.at(std::min(nx, crop.mask.width - 1),
                        std::min(ny, crop.mask.height - 1)) != 0;
}

}  // namespace

Packing pack(std::span<const TissueCrop> crops, std::optional<double> max_width) {
    if (crops.empty()) throw DataError("pack: no crops");

    struct Item {
        std::size_t index;
        std::size_t w, h;  // canvas pixels
        double factor;
    };
    std::vector<Item> items;
    items.reserve(crops.size());
    double total_area = 0.0;
    std::size_t widest = 0;
    for (std::size_t i = 0; i < crops.size(); ++i) {
        const double f = crops[i].resize_factor;
        if (!(f > 0.0)) throw DataError("pack: non-positive resize factor");
        Item it{i, scaled(crops[i].width, f), scaled(crops[i].height, f), f};
        if (it.w == 0 || it.h == 0) throw DataError("pack: crop with empty extent");
        total_area += static_cast<double>(it.w) * static_cast<double>(it.h);
        widest = std::max(widest, it.w);
        items.push_back(it);
    }

    std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        if (a.h != b.h) return a.h > b.h;
        if (a.w != b.w) return a.w > b.w;
        return a.index < b.index;
    });

    // Shelf width: caller override or the area heuristic, never below the
    // widest crop.
    std::size_t shelf_width = static_cast<std::size_t>(
        std::ceil(max_width.value_or(std::sqrt(total_area) * 1.2)));
    shelf_width = std::max(shelf_width, widest);

    Packing packing;
    std::size_t cursor_x = 0, cursor_y = 0, shelf_height = 0;
    for (const Item& it : items) {
        if (cursor_x + it.w > shelf_width) {
            cursor_x = 0;
            cursor_y += shelf_height;
            shelf_height = 0;
        }
        packing.placements.push_back(
            {it.index, cursor_x, cursor_y, it.w, it.h, it.factor});
        cursor_x += it.w;
        shelf_height = std::max(shelf_height, it.h);
        packing.canvas_width = std::max(packing.canvas_width, cursor_x);
    }
    packing.canvas_height = cursor_y + shelf_height;

    // Report placements in the caller's crop order.
    std::sort(packing.placements.begin(), packing.placements.end(),
              [](const Placement& a, const Placement& b) { return a.crop_index < b.crop_index; });
    return packing;
}

SpacingChoice choose_spacing(const SpacingPolicy& policy,
                             std::span<const double> native_spacings) {
    if (native_spacings.empty()) throw DataError("choose_spacing: no native spacings");
    const double lo = policy.target * (1.0 - policy.tolerance);
    const double hi = policy.target * (1.0 + policy.tolerance);

    // Inside the tolerance band: take the spacing closest to the target.
    double best_in_band = 0.0;
    bool found_in_band = false;
    for (double s : native_spacings) {
        if (s < lo || s > hi) continue;
        if (!found_in_band || std::abs(s - policy.target) < std::abs(best_in_band - policy.target) ||
            (std::abs(s - policy.target) == std::abs(best_in_band - policy.target) &&
             s < best_in_band)) {
            best_in_band = s;
            found_in_band = true;
        }
    }
    if (found_in_band) return {best_in_band, 1.0};

    // Otherwise the finest acceptable level nearest the target: the largest
    // spacing below the band, extracted bigger and resized down.
    double best_below = 0.0;
    bool found_below = false;
    for (double s : native_spacings) {
        if (s < lo && s > best_below) {
            best_below = s;
            found_below = true;
        }
    }
    if (!found_below) {
        throw NumericError("choose_spacing: no native spacing at or below " +
                           std::to_string(hi) + " mpp");
    }
    return {best_below, best_below / policy.target};
}

TilePlan plan_tiles(const Packing& packing, std::span<const TissueCrop> crops,
                    double region_min_coverage, std::optional<double> tile_min_coverage) {
    // Canvas-resolution tissue mask assembled from the placed crops.
    raster::Image canvas = raster::Image::filled(packing.canvas_width, packing.canvas_height, 0);
    for (const Placement& pl : packing.placements) {
        const TissueCrop& crop = crops[pl.crop_index];
        for (std::size_t cy = 0; cy < pl.height; ++cy) {
            for (std::size_t cx = 0; cx < pl.width; ++cx) {
                const auto nx = static_cast<std::size_t>(static_cast<double>(cx) / pl.resize_factor);
                const auto ny = static_cast<std::size_t>(static_cast<double>(cy) / pl.resize_factor);
                if (crop_tissue_at(crop, nx, ny)) {
                    canvas.at(pl.x + cx, pl.y + cy) = 1;
                }
            }
        }
    }

    TilePlan plan;
    plan.packing = packing;
    plan.region_min_coverage = region_min_coverage;
    plan.tile_min_coverage = tile_min_coverage;

    // Full regions only, anchored at the canvas origin; border remainders
    // are discarded.
    const std::size_t regions_x = packing.canvas_width / kRegionPixels;
    const std::size_t regions_y = packing.canvas_height / kRegionPixels;
    constexpr double region_area = static_cast<double>(kRegionPixels * kRegionPixels);
    constexpr double tile_area = static_cast<double>(kTilePixels * kTilePixels);

    for (std::size_t ry = 0; ry < regions_y; ++ry) {
        for (std::size_t rx = 0; rx < regions_x; ++rx) {
            Region region;
            region.x = rx * kRegionPixels;
            region.y = ry * kRegionPixels;

            // Tiles partition the region exactly, so region coverage is the
            // sum of tile tissue counts.
            std::size_t region_count = 0;
            region.tiles.reserve(kTilesPerRegion);
            for (std::size_t ty = 0; ty < kTilesPerSide; ++ty) {
                for (std::size_t tx = 0; tx < kTilesPerSide; ++tx) {
                    Tile tile;
                    tile.x = region.x + tx * kTilePixels;
                    tile.y = region.y + ty * kTilePixels;
                    std::size_t count = 0;
                    for (std::size_t py = 0; py < kTilePixels; ++py) {
                        const std::uint8_t* row = canvas.pixels.data() +
                                                  (tile.y + py) * canvas.width + tile.x;
                        count += std::accumulate(row, row + kTilePixels, std::size_t{0});
                    }
                    tile.coverage = static_cast<double>(count) / tile_area;
                    tile.kept = !tile_min_coverage || tile.coverage >= *tile_min_coverage;
                    region_count += count;
                    region.tiles.push_back(tile);
                }
            }
            region.coverage = static_cast<double>(region_count) / region_area;
            if (region.coverage < region_min_coverage) continue;

            // Dominant source crop by overlap area; extraction box in that
            // crop's native pixels.
            std::size_t best_overlap = 0;
            for (const Placement& pl : packing.placements) {
                const std::size_t x0 = std::max(region.x, pl.x);
                const std::size_t y0 = std::max(region.y, pl.y);
                const std::size_t x1 = std::min(region.x + kRegionPixels, pl.x + pl.width);
                const std::size_t y1 = std::min(region.y + kRegionPixels, pl.y + pl.height);
                if (x0 >= x1 || y0 >= y1) continue;
                const std::size_t overlap = (x1 - x0) * (y1 - y0);
                if (overlap > best_overlap) {
                    best_overlap = overlap;
                    region.source_crop = static_cast<int>(pl.crop_index);
                    region.resize_factor = pl.resize_factor;
                    region.source_x =
                        (static_cast<double>(region.x) - static_cast<double>(pl.x)) /
                        pl.resize_factor;
                    region.source_y =
                        (static_cast<double>(region.y) - static_cast<double>(pl.y)) /
                        pl.resize_factor;
                    region.source_size = static_cast<double>(kRegionPixels) / pl.resize_factor;
                }
            }
            plan.regions.push_back(std::move(region));
        }
    }
    return plan;
}

}  // namespace bcrisk::tiling
