#include "bcrisk/mil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bcrisk/errors.hpp"
#include "bcrisk/rng.hpp"
#include "bcrisk/tiling.hpp"

namespace bcrisk::mil {

namespace {

constexpr int kNumBins = survival::kNumBins;

// Accumulates in ascending value order: the sum depends only on the
// multiset of addends, which is what makes pooling exactly permutation
// invariant.
double ordered_sum(std::vector<double>& addends) {
    std::sort(addends.begin(), addends.end());
    double total = 0.0;
    for (double a : addends) total += a;
    return total;
}

struct Softmax {
    std::vector<double> weights;
};

// Max-shifted softmax with a value-ordered denominator.
Softmax stable_softmax(const std::vector<double>& scores) {
    Softmax s;
    const double peak = *std::max_element(scores.begin(), scores.end());
    s.weights.resize(scores.size());
    std::vector<double> exps(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) exps[i] = std::exp(scores[i] - peak);
    std::vector<double> addends = exps;
    const double z = ordered_sum(addends);
    for (std::size_t i = 0; i < scores.size(); ++i) s.weights[i] = exps[i] / z;
    return s;
}

// Everything the backward pass needs from one forward evaluation.
struct Trace {
    std::vector<std::vector<double>> tile_weights;  // per region
    std::vector<std::vector<double>> pooled;        // per region, d
    std::vector<std::vector<double>> region_embed;  // per region, e
    std::vector<double> region_weights;             // M
    std::vector<double> slide_embed;                // e
    std::vector<double> projected;                  // e
    std::array<double, kNumBins> logits{};
};

Trace run_forward(const FeatureBag& bag, const AggregatorParams& params) {
    const std::size_t d = params.feature_dim;
    const std::size_t e = params.embedding_dim;
    const std::size_t num_regions = bag.regions.size();

    Trace t;
    t.tile_weights.resize(num_regions);
    t.pooled.assign(num_regions, std::vector<double>(d, 0.0));
    t.region_embed.assign(num_regions, std::vector<double>(e, 0.0));

    std::vector<double> region_scores(num_regions, 0.0);
    for (std::size_t r = 0; r < num_regions; ++r) {
        const std::size_t tiles = bag.tiles_in(r);

        std::vector<double> scores(tiles, 0.0);
        for (std::size_t i = 0; i < tiles; ++i) {
            double u = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                u += bag.feature(r, i, j) * params.region_attention[j];
            }
            scores[i] = u;
        }
        t.tile_weights[r] = stable_softmax(scores).weights;

        std::vector<double> addends(tiles);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < tiles; ++i) {
                addends[i] = t.tile_weights[r][i] * bag.feature(r, i, j);
            }
            t.pooled[r][j] = ordered_sum(addends);
        }
        for (std::size_t k = 0; k < e; ++k) {
            double g = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                g += params.region_projection[j * e + k] * t.pooled[r][j];
            }
            t.region_embed[r][k] = g;
        }
        double v = 0.0;
        for (std::size_t k = 0; k < e; ++k) {
            v += t.region_embed[r][k] * params.slide_attention[k];
        }
        region_scores[r] = v;
    }

    t.region_weights = stable_softmax(region_scores).weights;

    t.slide_embed.assign(e, 0.0);
    std::vector<double> addends(num_regions);
    for (std::size_t k = 0; k < e; ++k) {
        for (std::size_t r = 0; r < num_regions; ++r) {
            addends[r] = t.region_weights[r] * t.region_embed[r][k];
        }
        t.slide_embed[k] = ordered_sum(addends);
    }

    t.projected.assign(e, 0.0);
    for (std::size_t k = 0; k < e; ++k) {
        double y = 0.0;
        for (std::size_t j = 0; j < e; ++j) {
            y += params.slide_projection[j * e + k] * t.slide_embed[j];
        }
        t.projected[k] = y;
    }
    for (int b = 0; b < kNumBins; ++b) {
        double z = params.head_bias[b];
        for (std::size_t k = 0; k < e; ++k) {
            z += params.head_weight[k * kNumBins + b] * t.projected[k];
        }
        t.logits[b] = z;
    }
    return t;
}

// Flat layout: region_attention | region_projection | slide_attention |
// slide_projection | head_weight | head_bias.
struct FlatView {
    std::vector<double*> chunks;
    std::vector<std::size_t> sizes;
};

FlatView flat_view(AggregatorParams& p) {
    return {{p.region_attention.data(), p.region_projection.data(), p.slide_attention.data(),
             p.slide_projection.data(), p.head_weight.data(), p.head_bias.data()},
            {p.region_attention.size(), p.region_projection.size(), p.slide_attention.size(),
             p.slide_projection.size(), p.head_weight.size(), p.head_bias.size()}};
}

}  // namespace

std::size_t FeatureBag::total_tiles() const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < regions.size(); ++r) n += tiles_in(r);
    return n;
}

void FeatureBag::validate(bool strict_tiles) const {
    if (feature_dim == 0) throw DataError("bag '" + patient_id + "': feature_dim is 0");
    if (regions.empty()) throw DataError("bag '" + patient_id + "': no regions");
    for (std::size_t r = 0; r < regions.size(); ++r) {
        if (regions[r].empty() || regions[r].size() % feature_dim != 0) {
            throw DataError("bag '" + patient_id + "': region " + std::to_string(r) +
                            " is not a whole number of " + std::to_string(feature_dim) +
                            "-dim tiles");
        }
        if (strict_tiles && tiles_in(r) != tiling::kTilesPerRegion) {
            throw DataError("bag '" + patient_id + "': region " + std::to_string(r) + " has " +
                            std::to_string(tiles_in(r)) + " tiles, expected " +
                            std::to_string(tiling::kTilesPerRegion));
        }
        for (double x : regions[r]) {
            if (!std::isfinite(x)) {
                throw DataError("bag '" + patient_id + "': non-finite feature");
            }
        }
    }
}

void AggregatorParams::validate() const {
    const std::size_t d = feature_dim, e = embedding_dim;
    if (d == 0 || e == 0) throw DataError("aggregator: zero dimension");
    if (region_attention.size() != d || region_projection.size() != d * e ||
        slide_attention.size() != e || slide_projection.size() != e * e ||
        head_weight.size() != e * kNumBins || head_bias.size() != kNumBins) {
        throw DataError("aggregator: parameter shapes inconsistent with d=" + std::to_string(d) +
                        ", e=" + std::to_string(e));
    }
    for (const auto* block : {&region_attention, &region_projection, &slide_attention,
                              &slide_projection, &head_weight, &head_bias}) {
        for (double x : *block) {
            if (!std::isfinite(x)) throw DataError("aggregator: non-finite parameter");
        }
    }
}

std::size_t AggregatorParams::parameter_count() const {
    return region_attention.size() + region_projection.size() + slide_attention.size() +
           slide_projection.size() + head_weight.size() + head_bias.size();
}

void TrainConfig::validate() const {
    if (base_learning_rate < 0.0 || weight_decay < 0.0) {
        throw DataError("train config: negative rate");
    }
    if (halving_period <= 0 || max_epochs <= 0 || patience <= 0 || min_epochs <= 0 ||
        accumulation_steps <= 0 || embedding_dim == 0) {
        throw DataError("train config: all schedule fields must be positive");
    }
    if (patience > max_epochs) throw DataError("train config: patience exceeds max epochs");
    if (!(tuning_fraction > 0.0 && tuning_fraction < 1.0)) {
        throw DataError("train config: tuning fraction must lie in (0,1)");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("train config: alpha outside [0,1]");
}

AggregatorParams initial_params(std::size_t feature_dim, std::size_t embedding_dim,
                                std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "init");
    AggregatorParams p;
    p.feature_dim = feature_dim;
    p.embedding_dim = embedding_dim;

    auto glorot = [&rng](std::vector<double>& block, std::size_t fan_in, std::size_t fan_out,
                         std::size_t count) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        block.resize(count);
        for (double& w : block) w = rng.next_uniform(-bound, bound);
    };
    glorot(p.region_attention, feature_dim, 1, feature_dim);
    glorot(p.region_projection, feature_dim, embedding_dim, feature_dim * embedding_dim);
    glorot(p.slide_attention, embedding_dim, 1, embedding_dim);
    glorot(p.slide_projection, embedding_dim, embedding_dim, embedding_dim * embedding_dim);
    glorot(p.head_weight, embedding_dim, kNumBins, embedding_dim * kNumBins);
    p.head_bias.assign(kNumBins, 0.0);
    return p;
}

survival::HazardVector forward(const FeatureBag& bag, const AggregatorParams& params) {
    params.validate();
    bag.validate(false);
    if (bag.feature_dim != params.feature_dim) {
        throw DataError("forward: bag dimension " + std::to_string(bag.feature_dim) +
                        " does not match model dimension " + std::to_string(params.feature_dim));
    }
    const Trace t = run_forward(bag, params);
    return survival::hazards_from_logits(t.logits);
}

AttentionWeights attention_weights(const FeatureBag& bag, const AggregatorParams& params) {
    params.validate();
    bag.validate(false);
    if (bag.feature_dim != params.feature_dim) {
        throw DataError("attention_weights: bag/model dimension mismatch");
    }
    const Trace t = run_forward(bag, params);
    return {t.tile_weights, t.region_weights};
}

double risk(const FeatureBag& bag, const AggregatorParams& params) {
    return survival::risk_from_hazards(forward(bag, params)).value;
}

std::vector<double> loss_gradient(const FeatureBag& bag, const survival::SurvivalLabel& label,
                                  const AggregatorParams& params, double alpha) {
    const std::size_t d = params.feature_dim;
    const std::size_t e = params.embedding_dim;
    const std::size_t num_regions = bag.regions.size();
    const Trace t = run_forward(bag, params);

    const auto hazards = survival::hazards_from_logits(t.logits);
    const auto dz = survival::nll_gradient(hazards, label, alpha);

    std::vector<double> d_region_attention(d, 0.0);
    std::vector<double> d_region_projection(d * e, 0.0);
    std::vector<double> d_slide_attention(e, 0.0);
    std::vector<double> d_slide_projection(e * e, 0.0);
    std::vector<double> d_head_weight(e * kNumBins, 0.0);
    std::vector<double> d_head_bias(kNumBins, 0.0);

    // Head: z = H^T y + b.
    std::vector<double> dy(e, 0.0);
    for (int b = 0; b < kNumBins; ++b) {
        d_head_bias[b] = dz[b];
        for (std::size_t k = 0; k < e; ++k) {
            d_head_weight[k * kNumBins + b] = t.projected[k] * dz[b];
            dy[k] += params.head_weight[k * kNumBins + b] * dz[b];
        }
    }
    // Slide projection: y = Q^T s.
    std::vector<double> ds(e, 0.0);
    for (std::size_t j = 0; j < e; ++j) {
        for (std::size_t k = 0; k < e; ++k) {
            d_slide_projection[j * e + k] = t.slide_embed[j] * dy[k];
            ds[j] += params.slide_projection[j * e + k] * dy[k];
        }
    }
    // Slide pooling: s = sum_r omega_r g_r.
    std::vector<double> d_omega(num_regions, 0.0);
    std::vector<std::vector<double>> dg(num_regions, std::vector<double>(e, 0.0));
    for (std::size_t r = 0; r < num_regions; ++r) {
        for (std::size_t k = 0; k < e; ++k) {
            d_omega[r] += ds[k] * t.region_embed[r][k];
            dg[r][k] += t.region_weights[r] * ds[k];
        }
    }
    // Softmax over regions.
    double omega_dot = 0.0;
    for (std::size_t r = 0; r < num_regions; ++r) omega_dot += t.region_weights[r] * d_omega[r];
    for (std::size_t r = 0; r < num_regions; ++r) {
        const double dv = t.region_weights[r] * (d_omega[r] - omega_dot);
        for (std::size_t k = 0; k < e; ++k) {
            d_slide_attention[k] += dv * t.region_embed[r][k];
            dg[r][k] += dv * params.slide_attention[k];
        }
    }
    // Region projection and tile pooling, per region.
    for (std::size_t r = 0; r < num_regions; ++r) {
        const std::size_t tiles = bag.tiles_in(r);
        std::vector<double> dp(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < e; ++k) {
                d_region_projection[j * e + k] += t.pooled[r][j] * dg[r][k];
                dp[j] += params.region_projection[j * e + k] * dg[r][k];
            }
        }
        std::vector<double> dw(tiles, 0.0);
        double w_dot = 0.0;
        for (std::size_t i = 0; i < tiles; ++i) {
            for (std::size_t j = 0; j < d; ++j) dw[i] += dp[j] * bag.feature(r, i, j);
            w_dot += t.tile_weights[r][i] * dw[i];
        }
        for (std::size_t i = 0; i < tiles; ++i) {
            const double du = t.tile_weights[r][i] * (dw[i] - w_dot);
            for (std::size_t j = 0; j < d; ++j) {
                d_region_attention[j] += du * bag.feature(r, i, j);
            }
        }
    }

    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    for (const auto* block : {&d_region_attention, &d_region_projection, &d_slide_attention,
                              &d_slide_projection, &d_head_weight, &d_head_bias}) {
        flat.insert(flat.end(), block->begin(), block->end());
    }
    return flat;
}

double grad_check(const FeatureBag& bag, const survival::SurvivalLabel& label,
                  const AggregatorParams& params, double alpha) {
    const std::vector<double> analytic = loss_gradient(bag, label, params, alpha);

    AggregatorParams probe = params;
    FlatView view = flat_view(probe);
    auto loss_at = [&]() {
        return survival::nll_loss(forward(bag, probe), label, alpha);
    };

    double max_rel = 0.0;
    std::size_t flat_index = 0;
    for (std::size_t c = 0; c < view.chunks.size(); ++c) {
        for (std::size_t i = 0; i < view.sizes[c]; ++i, ++flat_index) {
            double& theta = view.chunks[c][i];
            const double saved = theta;
            const double step = 1e-5 * std::max(1.0, std::abs(saved));
            theta = saved + step;
            const double up = loss_at();
            theta = saved - step;
            const double down = loss_at();
            theta = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[flat_index]), 1e-8});
            max_rel = std::max(max_rel, std::abs(numeric - analytic[flat_index]) / denom);
        }
    }
    return max_rel;
}

namespace {

struct Optimizer {
    const TrainConfig& cfg;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t steps = 0;

    explicit Optimizer(const TrainConfig& config, std::size_t count)
        : cfg(config), first_moment(count, 0.0), second_moment(count, 0.0) {}

    void apply(AggregatorParams& params, std::span<const double> grad, double lr,
               bool head_only) {
        ++steps;
        FlatView view = flat_view(params);
        // head block starts after the two attention stages
        const std::size_t head_begin = view.sizes[0] + view.sizes[1] + view.sizes[2] +
                                       view.sizes[3];
        std::size_t flat_index = 0;
        for (std::size_t c = 0; c < view.chunks.size(); ++c) {
            for (std::size_t i = 0; i < view.sizes[c]; ++i, ++flat_index) {
                if (head_only && flat_index < head_begin) continue;
                double& theta = view.chunks[c][i];
                const double g = grad[flat_index] + cfg.weight_decay * theta;
                if (!cfg.adaptive_moments) {
                    theta -= lr * g;
                    continue;
                }
                constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
                auto& m = first_moment[flat_index];
                auto& v = second_moment[flat_index];
                m = beta1 * m + (1.0 - beta1) * g;
                v = beta2 * v + (1.0 - beta2) * g * g;
                const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(steps)));
                const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(steps)));
                theta -= lr * m_hat / (std::sqrt(v_hat) + eps);
            }
        }
    }
};

}  // namespace

TrainResult train(std::span<const FeatureBag> bags,
                  std::span<const survival::SurvivalLabel> labels, const TrainConfig& cfg) {
    cfg.validate();
    if (bags.empty() || bags.size() != labels.size()) {
        throw DataError("train: dataset empty or labels mismatched");
    }
    const std::size_t d = bags.front().feature_dim;
    for (const auto& bag : bags) {
        bag.validate(true);
        if (bag.feature_dim != d) throw DataError("train: inconsistent feature dimensions");
    }

    // Tuning split for early stopping (the paper never specifies its
    // construction; the fraction is part of the config).
    const std::size_t n = bags.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng = Rng::stream(cfg.seed, "tuning-split");
    for (std::size_t i = n; i-- > 1;) {
        std::swap(order[i], order[split_rng.next_below(i + 1)]);
    }
    std::size_t n_tune =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(
                                    cfg.tuning_fraction * static_cast<double>(n))),
                                1, n > 1 ? n - 1 : 1);
    TrainResult result;
    if (n == 1) {
        n_tune = 0;  // degenerate dataset: tune on the training sample
        result.tuning_indices = {0};
        result.train_indices = {0};
    } else {
        result.tuning_indices.assign(order.begin(), order.begin() + n_tune);
        result.train_indices.assign(order.begin() + n_tune, order.end());
        std::sort(result.tuning_indices.begin(), result.tuning_indices.end());
        std::sort(result.train_indices.begin(), result.train_indices.end());
    }

    AggregatorParams params = initial_params(d, cfg.embedding_dim, cfg.seed);
    Optimizer optimizer(cfg, params.parameter_count());

    auto mean_loss = [&](std::span<const std::size_t> idx, const AggregatorParams& p) {
        double total = 0.0;
        for (std::size_t i : idx) {
            total += survival::nll_loss(forward(bags[i], p), labels[i], cfg.alpha);
        }
        return total / static_cast<double>(idx.size());
    };

    result.params = params;
    result.best_tuning_loss = std::numeric_limits<double>::infinity();
    int epochs_since_improvement = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr =
            cfg.base_learning_rate * std::pow(0.5, epoch / cfg.halving_period);

        std::vector<std::size_t> visit = result.train_indices;
        Rng epoch_rng = Rng::stream(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = visit.size(); i-- > 1;) {
            std::swap(visit[i], visit[epoch_rng.next_below(i + 1)]);
        }

        double epoch_loss = 0.0;
        std::vector<double> accumulated(params.parameter_count(), 0.0);
        std::size_t in_batch = 0;
        auto flush = [&]() {
            if (in_batch == 0) return;
            for (double& g : accumulated) g /= static_cast<double>(in_batch);
            optimizer.apply(params, accumulated, lr, cfg.train_head_only);
            std::fill(accumulated.begin(), accumulated.end(), 0.0);
            in_batch = 0;
            try {
                params.validate();
            } catch (const DataError&) {
                throw NumericError("train: parameters diverged at epoch " +
                                   std::to_string(epoch));
            }
        };
        for (std::size_t i : visit) {
            const double sample_loss =
                survival::nll_loss(forward(bags[i], params), labels[i], cfg.alpha);
            if (!std::isfinite(sample_loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", bag '" + bags[i].patient_id + "'");
            }
            epoch_loss += sample_loss;
            const auto grad = loss_gradient(bags[i], labels[i], params, cfg.alpha);
            for (std::size_t g = 0; g < grad.size(); ++g) accumulated[g] += grad[g];
            if (++in_batch == static_cast<std::size_t>(cfg.accumulation_steps)) flush();
        }
        flush();
        result.train_loss_history.push_back(epoch_loss /
                                            static_cast<double>(visit.size()));

        const double tuning_loss = mean_loss(
            n_tune == 0 ? std::span<const std::size_t>(result.train_indices)
                        : std::span<const std::size_t>(result.tuning_indices),
            params);
        if (!std::isfinite(tuning_loss)) {
            throw NumericError("train: non-finite tuning loss at epoch " + std::to_string(epoch));
        }
        result.tuning_loss_history.push_back(tuning_loss);
        result.epochs_completed = epoch + 1;

        if (tuning_loss < result.best_tuning_loss) {
            result.best_tuning_loss = tuning_loss;
            result.params = params;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
        }
        if (epochs_since_improvement >= cfg.patience && epoch + 1 >= cfg.min_epochs) {
            break;
        }
    }
    return result;
}

}  // namespace bcrisk::mil
