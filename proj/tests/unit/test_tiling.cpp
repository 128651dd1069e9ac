#include <doctest.h>

#include <set>

#include "bcrisk/errors.hpp"
#include "bcrisk/rng.hpp"
#include "bcrisk/tiling.hpp"

using namespace bcrisk;
using tiling::Packing;
using tiling::SpacingPolicy;
using tiling::TissueCrop;

namespace {

TissueCrop solid_crop(const std::string& id, std::size_t w, std::size_t h, double factor = 1.0) {
    TissueCrop c;
    c.slide_id = id;
    c.width = w;
    c.height = h;
    c.resize_factor = factor;
    return c;
}

bool overlap(const tiling::Placement& a, const tiling::Placement& b) {
    return a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height &&
           b.y < a.y + a.height;
}

}  // namespace

TEST_CASE("single crop packs at the origin") {
    const std::vector<TissueCrop> crops = {solid_crop("s0", 300, 140)};
    const auto packing = tiling::pack(crops);
    CHECK(packing.canvas_width == 300);
    CHECK(packing.canvas_height == 140);
    REQUIRE(packing.placements.size() == 1);
    CHECK(packing.placements[0].x == 0);
    CHECK(packing.placements[0].y == 0);
}

TEST_CASE("two square crops sit side by side under the width cap") {
    const std::vector<TissueCrop> crops = {solid_crop("a", 100, 100), solid_crop("b", 100, 100)};
    const auto packing = tiling::pack(crops, 250.0);
    CHECK(packing.canvas_width == 200);
    CHECK(packing.canvas_height == 100);
    std::set<std::size_t> xs;
    for (const auto& pl : packing.placements) {
        CHECK(pl.y == 0);
        xs.insert(pl.x);
    }
    CHECK(xs == std::set<std::size_t>{0, 100});
}

TEST_CASE("a narrow cap forces a second shelf") {
    const std::vector<TissueCrop> crops = {solid_crop("a", 100, 100), solid_crop("b", 100, 100)};
    const auto packing = tiling::pack(crops, 150.0);
    CHECK(packing.canvas_width == 100);
    CHECK(packing.canvas_height == 200);
}

TEST_CASE("packing is overlap-free and deterministic on 1000 random crop sets") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<TissueCrop> crops;
        const std::size_t count = 1 + rng.next_below(12);
        for (std::size_t i = 0; i < count; ++i) {
            crops.push_back(solid_crop("s" + std::to_string(i), 20 + rng.next_below(400),
                                       20 + rng.next_below(400)));
        }
        const auto packing = tiling::pack(crops);
        const auto again = tiling::pack(crops);
        for (std::size_t i = 0; i < packing.placements.size(); ++i) {
            CHECK(packing.placements[i].x == again.placements[i].x);
            CHECK(packing.placements[i].y == again.placements[i].y);
            for (std::size_t j = i + 1; j < packing.placements.size(); ++j) {
                CHECK_FALSE(overlap(packing.placements[i], packing.placements[j]));
            }
            // placements stay inside the canvas
            CHECK(packing.placements[i].x + packing.placements[i].width <= packing.canvas_width);
            CHECK(packing.placements[i].y + packing.placements[i].height <= packing.canvas_height);
        }
    }
}

TEST_CASE("spacing selection") {
    const SpacingPolicy policy;  // target 0.50, tolerance 5%
    SUBCASE("in-band spacing is accepted without resampling") {
        const auto choice = tiling::choose_spacing(policy, std::vector<double>{0.51});
        CHECK(choice.spacing == 0.51);
        CHECK(choice.resize_factor == 1.0);
    }
    SUBCASE("finer level is resampled toward the target") {
        const auto choice = tiling::choose_spacing(policy, std::vector<double>{0.25, 0.55});
        CHECK(choice.spacing == 0.25);
        CHECK(choice.resize_factor == 0.5);
    }
    SUBCASE("only coarser levels is an error") {
        CHECK_THROWS_AS(tiling::choose_spacing(policy, std::vector<double>{0.60}), NumericError);
    }
    SUBCASE("closest in-band spacing wins") {
        const auto choice =
            tiling::choose_spacing(policy, std::vector<double>{0.48, 0.505, 0.52});
        CHECK(choice.spacing == 0.505);
    }
    SUBCASE("largest below-band spacing wins when none is in band") {
        const auto choice =
            tiling::choose_spacing(policy, std::vector<double>{0.10, 0.25, 0.46, 0.60});
        CHECK(choice.spacing == 0.46);
        CHECK(choice.resize_factor == 0.46 / 0.50);
    }
    SUBCASE("effective spacing after resize is the target") {
        const auto choice = tiling::choose_spacing(policy, std::vector<double>{0.23, 0.56});
        CHECK(choice.spacing / choice.resize_factor == doctest::Approx(0.50).epsilon(1e-9));
    }
}

TEST_CASE("full-tissue 4096 canvas yields 4 regions and 256 tiles") {
    const std::vector<TissueCrop> crops = {solid_crop("s0", 4096, 4096)};
    const auto packing = tiling::pack(crops);
    const auto plan = tiling::plan_tiles(packing, crops);
    REQUIRE(plan.regions.size() == 4);
    std::size_t tiles = 0;
    for (const auto& region : plan.regions) {
        CHECK(region.coverage == 1.0);
        CHECK(region.tiles.size() == tiling::kTilesPerRegion);
        tiles += region.tiles.size();
        for (const auto& tile : region.tiles) CHECK(tile.coverage == 1.0);
    }
    CHECK(tiles == 256);
}

TEST_CASE("zero tissue yields zero regions") {
    TissueCrop crop = solid_crop("s0", 2048, 2048);
    crop.mask = raster::Image::filled(2048, 2048, 0);
    const std::vector<TissueCrop> crops = {crop};
    const auto plan = tiling::plan_tiles(tiling::pack(crops), crops);
    CHECK(plan.regions.empty());
}

TEST_CASE("checkerboard coverage matches a direct pixel count") {
    TissueCrop crop = solid_crop("s0", 2048, 2048);
    crop.mask = raster::Image::filled(2048, 2048, 0);
    for (std::size_t y = 0; y < 2048; ++y) {
        for (std::size_t x = 0; x < 2048; ++x) {
            if ((x + y) % 2 == 0) crop.mask.at(x, y) = 255;
        }
    }
    const std::vector<TissueCrop> crops = {crop};
    const auto plan = tiling::plan_tiles(tiling::pack(crops), crops, 0.01);
    REQUIRE(plan.regions.size() == 1);
    CHECK(plan.regions[0].coverage == 0.5);
    for (const auto& tile : plan.regions[0].tiles) {
        // independent count over the tile's mask window
        std::size_t count = 0;
        for (std::size_t y = tile.y; y < tile.y + tiling::kTilePixels; ++y) {
            for (std::size_t x = tile.x; x < tile.x + tiling::kTilePixels; ++x) {
                if (crop.mask.at(x, y) != 0) ++count;
            }
        }
        CHECK(tile.coverage ==
              static_cast<double>(count) / (tiling::kTilePixels * tiling::kTilePixels));
    }
}

TEST_CASE("tiles partition each kept region exactly") {
    const std::vector<TissueCrop> crops = {solid_crop("s0", 4096, 2048)};
    const auto plan = tiling::plan_tiles(tiling::pack(crops), crops);
    for (const auto& region : plan.regions) {
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& tile : region.tiles) {
            CHECK(tile.x >= region.x);
            CHECK(tile.y >= region.y);
            CHECK(tile.x + tiling::kTilePixels <= region.x + tiling::kRegionPixels);
            CHECK(tile.y + tiling::kTilePixels <= region.y + tiling::kRegionPixels);
            CHECK(seen.insert({tile.x, tile.y}).second);  // no duplicates
        }
        CHECK(seen.size() == tiling::kTilesPerRegion);
    }
}

TEST_CASE("resampled plan carries source boxes at the native level") {
    // 8192 native px at 0.25 mpp, factor 0.5: a 4096 canvas at 0.50 mpp.
    const std::vector<TissueCrop> crops = {solid_crop("s0", 8192, 8192, 0.5)};
    const auto packing = tiling::pack(crops);
    CHECK(packing.canvas_width == 4096);
    const auto plan = tiling::plan_tiles(packing, crops);
    REQUIRE(plan.regions.size() == 4);
    for (const auto& region : plan.regions) {
        CHECK(region.resize_factor == 0.5);
        CHECK(region.source_size == 4096.0);
        CHECK(region.source_crop == 0);
    }
}

TEST_CASE("partial border regions are discarded") {
    const std::vector<TissueCrop> crops = {solid_crop("s0", 2048 + 500, 2048)};
    const auto plan = tiling::plan_tiles(tiling::pack(crops), crops);
    CHECK(plan.regions.size() == 1);  // the 500-px remainder column is dropped
}

TEST_CASE("tile-level threshold flags low-content tiles without changing the grid") {
    TissueCrop crop = solid_crop("s0", 2048, 2048);
    crop.mask = raster::Image::filled(2048, 2048, 0);
    // fill the left half only
    for (std::size_t y = 0; y < 2048; ++y) {
        for (std::size_t x = 0; x < 1024; ++x) crop.mask.at(x, y) = 1;
    }
    const std::vector<TissueCrop> crops = {crop};
    const auto plan = tiling::plan_tiles(tiling::pack(crops), crops, 0.01, 0.25);
    REQUIRE(plan.regions.size() == 1);
    CHECK(plan.regions[0].tiles.size() == tiling::kTilesPerRegion);
    std::size_t kept = 0;
    for (const auto& tile : plan.regions[0].tiles) {
        if (tile.kept) ++kept;
    }
    CHECK(kept == 32);  // exactly the left-half tiles
}
