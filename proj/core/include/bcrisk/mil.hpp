#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcrisk/survival.hpp"

namespace bcrisk::mil {

/// Hierarchical bag of tile features for one patient: a list of regions,
/// each a (tiles x d) row-major matrix. Training bags carry exactly 64
/// tiles per region; occlusion passes bags with one tile removed.
struct FeatureBag {
    std::string patient_id;
    std::size_t feature_dim = 0;
    std::vector<std::vector<double>> regions;  // region -> tiles*d row-major

    std::size_t tiles_in(std::size_t region) const {
        return regions[region].size() / feature_dim;
    }
    std::size_t total_tiles() const;
    double feature(std::size_t region, std::size_t tile, std::size_t j) const {
        return regions[region][tile * feature_dim + j];
    }

    /// Shape checks; strict_tiles additionally enforces 64 tiles per region.
    void validate(bool strict_tiles) const;
};

/// Two-level attention-pooling aggregator with a linear hazard head:
/// softmax attention over tiles compresses each region to an e-dim
/// embedding, softmax attention over regions pools the slide, and a linear
/// layer maps to the four hazard logits.
struct AggregatorParams {
    std::size_t feature_dim = 0;   // d
    std::size_t embedding_dim = 0; // e
    std::vector<double> region_attention;   // d
    std::vector<double> region_projection;  // d x e row-major
    std::vector<double> slide_attention;    // e
    std::vector<double> slide_projection;   // e x e row-major
    std::vector<double> head_weight;        // e x 4 row-major
    std::vector<double> head_bias;          // 4

    void validate() const;
    std::size_t parameter_count() const;
};

struct TrainConfig {
    double base_learning_rate = 2e-4;
    int halving_period = 20;  // epochs between learning-rate halvings
    double weight_decay = 1e-5;
    int max_epochs = 100;
    int patience = 20;  // consecutive epochs without tuning improvement
    int min_epochs = 50;
    int accumulation_steps = 32;
    std::uint64_t seed = 42;
    double alpha = 0.25;           // loss event up-weighting
    double tuning_fraction = 0.2;  // held-out fraction for early stopping
    std::size_t embedding_dim = 8;
    bool adaptive_moments = false;  // Adam instead of plain gradient descent
    bool train_head_only = false;   // freeze both attention stages

    void validate() const;
};

struct TrainResult {
    AggregatorParams params;  // snapshot with the best tuning loss
    int epochs_completed = 0;
    double best_tuning_loss = 0.0;
    std::vector<double> train_loss_history;   // accumulation-averaged per epoch
    std::vector<double> tuning_loss_history;  // per epoch
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> tuning_indices;
};

/// Deterministic Glorot-uniform initialization from a named seed stream.
AggregatorParams initial_params(std::size_t feature_dim, std::size_t embedding_dim,
                                std::uint64_t seed);

/// Forward pass. All pooling reductions accumulate in value order, so tile
/// order within a region and region order within a bag cannot change the
/// output, bit for bit. Throws DataError on shape mismatch.
survival::HazardVector forward(const FeatureBag& bag, const AggregatorParams& params);

/// Softmax weights from both pooling stages, e.g. for attention rasters.
struct AttentionWeights {
    std::vector<std::vector<double>> tile_weights;  // per region, sums to 1
    std::vector<double> region_weights;             // sums to 1
};

AttentionWeights attention_weights(const FeatureBag& bag, const AggregatorParams& params);

/// risk_from_hazards(forward(bag)).
double risk(const FeatureBag& bag, const AggregatorParams& params);

/// Analytic gradient of the survival loss with respect to every parameter,
/// flattened in the AggregatorParams field order.
std::vector<double> loss_gradient(const FeatureBag& bag, const survival::SurvivalLabel& label,
                                  const AggregatorParams& params, double alpha);

/// Maximum relative error between loss_gradient and central finite
/// differences over all parameters.
double grad_check(const FeatureBag& bag, const survival::SurvivalLabel& label,
                  const AggregatorParams& params, double alpha = 0.25);

/// Gradient descent (or Adam) with the halving schedule, batch size one,
/// gradient accumulation and tuning-loss early stopping. Deterministic for
/// a fixed config. Throws NumericError if the loss turns non-finite.
TrainResult train(std::span<const FeatureBag> bags,
                  std::span<const survival::SurvivalLabel> labels, const TrainConfig& cfg);

}  // namespace bcrisk::mil
