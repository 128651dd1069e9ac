#include "bcrisk/interpret.hpp"

#include <algorithm>
#include <cmath>

#include "bcrisk/errors.hpp"
#include "bcrisk/quantile.hpp"

namespace bcrisk::interpret {

OcclusionResult occlusion_scores(const mil::FeatureBag& bag, const RiskModel& model,
                                 std::size_t top_k) {
    bag.validate(false);
    if (top_k == 0) throw DataError("occlusion: top_k must be >= 1");
    const std::size_t total = bag.total_tiles();
    if (total < 2) throw DataError("occlusion: bag has fewer than 2 tiles");
    if (total < 2 * top_k) {
        throw DataError("occlusion: bag '" + bag.patient_id + "' has " + std::to_string(total) +
                        " tiles, need at least " + std::to_string(2 * top_k) +
                        " for disjoint top/bottom selection");
    }

    OcclusionResult result;
    result.baseline_risk = model(bag);
    result.all.reserve(total);

    const std::size_t d = bag.feature_dim;
    for (std::size_t r = 0; r < bag.regions.size(); ++r) {
        const std::size_t tiles = bag.tiles_in(r);
        for (std::size_t t = 0; t < tiles; ++t) {
            mil::FeatureBag occluded = bag;
            auto& rows = occluded.regions[r];
            rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(t * d),
                       rows.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
            if (rows.empty()) {
                occluded.regions.erase(occluded.regions.begin() + static_cast<std::ptrdiff_t>(r));
            }
            ContributionScore score;
            score.patient_id = bag.patient_id;
            score.region = r;
            score.tile = t;
            score.raw = result.baseline_risk - model(occluded);
            score.clipped = score.raw;
            result.all.push_back(std::move(score));
        }
    }

    // One descending sort; the two ends stay disjoint for any tie pattern.
    std::vector<std::size_t> order(result.all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (result.all[a].raw != result.all[b].raw) return result.all[a].raw > result.all[b].raw;
        return a < b;
    });
    for (std::size_t k = 0; k < top_k; ++k) {
        result.top_positive.push_back(result.all[order[k]]);
        result.top_negative.push_back(result.all[order[order.size() - 1 - k]]);
    }
    return result;
}

void normalize_contributions(std::span<ContributionScore> cohort_scores) {
    if (cohort_scores.empty()) throw DataError("normalize_contributions: no scores");
    std::vector<double> raw;
    raw.reserve(cohort_scores.size());
    for (const auto& s : cohort_scores) raw.push_back(s.raw);

    const double q5 = quantile(raw, 0.05);
    const double q95 = quantile(raw, 0.95);

    double max_abs = 0.0;
    for (auto& s : cohort_scores) {
        s.clipped = std::clamp(s.raw, q5, q95);
        max_abs = std::max(max_abs, std::abs(s.clipped));
    }
    for (auto& s : cohort_scores) {
        s.normalized = max_abs > 0.0 ? s.clipped / max_abs : 0.0;
    }
}

std::vector<double> factorized_attention(const AttentionStack& stack) {
    if (stack.transformers.empty()) throw DataError("factorized_attention: empty stack");
    const std::size_t w = stack.transformers.front().width;
    const std::size_t h = stack.transformers.front().height;
    for (const auto& t : stack.transformers) {
        if (t.width != w || t.height != h || t.values.size() != w * h) {
            throw DataError("factorized_attention: raster shapes differ");
        }
        for (double v : t.values) {
            if (!(v >= 0.0)) throw DataError("factorized_attention: negative attention score");
        }
    }

    std::vector<double> product(w * h, 1.0);
    for (const auto& t : stack.transformers) {
        // Exponent weighting: gamma on trained transformers, 1-gamma on
        // frozen ones. gamma = 1 makes frozen rasters exactly neutral.
        const double exponent = t.frozen ? 1.0 - stack.gamma : stack.gamma;
        if (exponent == 0.0) continue;
        for (std::size_t i = 0; i < product.size(); ++i) {
            product[i] *= exponent == 1.0 ? t.values[i] : std::pow(t.values[i], exponent);
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(product.begin(), product.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        for (double& v : product) v = (v - lo) / (hi - lo);
    } else {
        std::fill(product.begin(), product.end(), 0.0);
    }
    return product;
}

namespace {

std::vector<double> gaussian_smooth(std::span<const double> values, std::size_t w, std::size_t h,
                                    double sigma) {
    if (sigma <= 0.0) return {values.begin(), values.end()};
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double k = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = k;
        norm += k;
    }
    for (double& k : kernel) k /= norm;

    // Separable convolution with zero padding.
    std::vector<double> tmp(values.size(), 0.0), out(values.size(), 0.0);
    const auto sw = static_cast<std::ptrdiff_t>(w);
    const auto sh = static_cast<std::ptrdiff_t>(h);
    for (std::ptrdiff_t y = 0; y < sh; ++y) {
        for (std::ptrdiff_t x = 0; x < sw; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                const std::ptrdiff_t xx = x + i;
                if (xx < 0 || xx >= sw) continue;
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       values[static_cast<std::size_t>(y * sw + xx)];
            }
            tmp[static_cast<std::size_t>(y * sw + x)] = acc;
        }
    }
    for (std::ptrdiff_t y = 0; y < sh; ++y) {
        for (std::ptrdiff_t x = 0; x < sw; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                const std::ptrdiff_t yy = y + i;
                if (yy < 0 || yy >= sh) continue;
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(yy * sw + x)];
            }
            out[static_cast<std::size_t>(y * sw + x)] = acc;
        }
    }
    return out;
}

// Blue-white-red diverging ramp over [0,1]; zeroed pixels render white so
// the 0.5-alpha overlay leaves the underlying tissue visible.
void ramp(double t, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    auto lerp = [](double a, double c, double u) {
        return static_cast<std::uint8_t>(std::lround(a + (c - a) * u));
    };
    if (t < 0.5) {
        const double u = t / 0.5;
        r = lerp(59, 255, u);
        g = lerp(76, 255, u);
        b = lerp(192, 255, u);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = lerp(255, 180, u);
        g = lerp(255, 4, u);
        b = lerp(255, 38, u);
    }
}

}  // namespace

Heatmap render_heatmap(std::span<const double> raster_values, std::size_t width,
                       std::size_t height, double threshold, double sigma) {
    if (raster_values.size() != width * height) {
        throw DataError("render_heatmap: raster size does not match dimensions");
    }
    Heatmap map;
    map.width = width;
    map.height = height;
    map.smoothed = gaussian_smooth(raster_values, width, height, sigma);
    map.thresholded = map.smoothed;
    for (double& v : map.thresholded) {
        if (v < threshold) v = 0.0;
    }

    map.image.width = width;
    map.image.height = height;
    map.image.pixels.assign(3 * width * height, 255);
    for (std::size_t i = 0; i < map.thresholded.size(); ++i) {
        if (map.thresholded[i] <= 0.0) continue;
        ramp(std::clamp(map.thresholded[i], 0.0, 1.0), map.image.pixels[3 * i],
             map.image.pixels[3 * i + 1], map.image.pixels[3 * i + 2]);
    }
    return map;
}

}  // namespace bcrisk::interpret
