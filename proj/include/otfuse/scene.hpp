#ifndef OTFUSE_SCENE_HPP
#define OTFUSE_SCENE_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "otfuse/types.hpp"

namespace otfuse {

// Ordered category names for the three scene attributes.
struct AttributeSpace {
    std::vector<std::string> weather;
    std::vector<std::string> time_of_day;
    std::vector<std::string> road_type;

    void validate() const;
    std::size_t combination_count() const {
        return weather.size() * time_of_day.size() * road_type.size();
    }
    // weather-major, then time-of-day, then road type
    std::size_t combination_index(std::size_t w, std::size_t d, std::size_t r) const;
    std::array<std::size_t, 3> combination_unpack(std::size_t index) const;
    std::string combination_key(std::size_t index) const;  // "weather|time|road"
};

// Per-attribute marginals plus their tensor-product joint.
struct ScenePosterior {
    DiscreteDistribution pW;
    DiscreteDistribution pD;
    DiscreteDistribution pR;
    DiscreteDistribution joint;
};

// Linear attribute classifier: logits are inner products against text
// embedding rows, softmaxed at temperature tau.
struct LinearHead {
    Matrix text_embeddings;  // categories x embedding_dim
    double tau = 0.07;
};

// Cached per-scene, per-class anchor embeddings covering the full
// attribute product space.
struct PrototypeTable {
    AttributeSpace attribute_space;
    std::size_t embedding_dim = 0;
    std::size_t num_classes = 2;
    // prototypes[combination][class]
    std::vector<std::vector<Vec>> prototypes;
    std::vector<Vec> meta;  // num_classes meta-traversability embeddings
    std::vector<Vec> frozen_text_cls;  // optional, per combination

    void validate() const;
};

DiscreteDistribution classify_attribute(const Vec& cls_embedding, const LinearHead& head);

ScenePosterior infer_scene_posterior(const Vec& cls_embedding, const LinearHead& weather,
                                     const LinearHead& time_of_day,
                                     const LinearHead& road_type);

// Posterior-weighted sum of cached prototypes; no text-encoder call.
// Row k of the result is sum_s joint[s] * prototypes[s][k].
Matrix synthesize_anchor(const ScenePosterior& posterior, const PrototypeTable& table);
Matrix synthesize_anchor(const DiscreteDistribution& joint, const PrototypeTable& table);

struct LabeledEmbedding {
    Vec cls_embedding;
    std::size_t weather;
    std::size_t time_of_day;
    std::size_t road_type;
};

struct TrainResult {
    LinearHead weather;
    LinearHead time_of_day;
    LinearHead road_type;
    std::vector<double> loss_trace;  // summed per-attribute CE per step
};

// Gradient descent on summed per-attribute softmax cross-entropy with the
// analytic gradient; temperatures stay fixed.
TrainResult train_heads(const std::vector<LabeledEmbedding>& dataset,
                        const LinearHead& weather, const LinearHead& time_of_day,
                        const LinearHead& road_type, std::size_t steps,
                        double learning_rate);

// CE of one head on one sample, and its gradient w.r.t. the text-embedding
// rows. Exposed for the finite-difference check.
double head_ce_loss(const LinearHead& head, const Vec& cls, std::size_t label);
Matrix head_ce_gradient(const LinearHead& head, const Vec& cls, std::size_t label);

}  // namespace otfuse

#endif
