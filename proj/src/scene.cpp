#include "otfuse/scene.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "otfuse/tensor.hpp"

namespace otfuse {

void AttributeSpace::validate() const {
    for (const auto* list : {&weather, &time_of_day, &road_type}) {
        if (list->empty()) throw DomainError("attribute list empty");
        std::unordered_set<std::string> seen(list->begin(), list->end());
        if (seen.size() != list->size()) throw DomainError("duplicate attribute name");
    }
}

std::size_t AttributeSpace::combination_index(std::size_t w, std::size_t d,
                                              std::size_t r) const {
    if (w >= weather.size() || d >= time_of_day.size() || r >= road_type.size())
        throw DomainError("attribute index out of range");
    return (w * time_of_day.size() + d) * road_type.size() + r;
}

std::array<std::size_t, 3> AttributeSpace::combination_unpack(std::size_t index) const {
    if (index >= combination_count()) throw DomainError("combination index out of range");
    std::size_t r = index % road_type.size();
    index /= road_type.size();
    std::size_t d = index % time_of_day.size();
    std::size_t w = index / time_of_day.size();
    return {w, d, r};
}

std::string AttributeSpace::combination_key(std::size_t index) const {
    auto [w, d, r] = combination_unpack(index);
    return weather[w] + "|" + time_of_day[d] + "|" + road_type[r];
}

void PrototypeTable::validate() const {
    attribute_space.validate();
    const std::size_t combos = attribute_space.combination_count();
    if (prototypes.size() != combos)
        throw DataError("prototype table does not cover the combination space");
    auto check_vec = [this](const Vec& v) {
        if (v.size() != embedding_dim) throw DataError("prototype dimension mismatch");
        if (!all_finite(v)) throw DataError("non-finite prototype entry");
        if (norm2(v) == 0.0) throw DataError("zero-norm prototype");
    };
    for (const auto& per_class : prototypes) {
        if (per_class.size() != num_classes)
            throw DataError("prototype table missing a class entry");
        for (const Vec& v : per_class) check_vec(v);
    }
    if (meta.size() != num_classes) throw DataError("meta embedding count mismatch");
    for (const Vec& v : meta) check_vec(v);
    if (!frozen_text_cls.empty() && frozen_text_cls.size() != combos)
        throw DataError("frozen block does not cover the combination space");
}

DiscreteDistribution classify_attribute(const Vec& cls_embedding, const LinearHead& head) {
    if (head.text_embeddings.cols != cls_embedding.size())
        throw ShapeError("classify_attribute: embedding dimension mismatch");
    Vec logits(head.text_embeddings.rows);
    for (std::size_t i = 0; i < logits.size(); ++i)
        logits[i] = dot(cls_embedding, head.text_embeddings.row(i));
    return softmax_with_temperature(logits, head.tau);
}

ScenePosterior infer_scene_posterior(const Vec& cls_embedding, const LinearHead& weather,
                                     const LinearHead& time_of_day,
                                     const LinearHead& road_type) {
    DiscreteDistribution pW = classify_attribute(cls_embedding, weather);
    DiscreteDistribution pD = classify_attribute(cls_embedding, time_of_day);
    DiscreteDistribution pR = classify_attribute(cls_embedding, road_type);
    DiscreteDistribution joint = tensor_product_joint(pW, pD, pR);
    return ScenePosterior{std::move(pW), std::move(pD), std::move(pR), std::move(joint)};
}

Matrix synthesize_anchor(const DiscreteDistribution& joint, const PrototypeTable& table) {
    if (joint.size() != table.prototypes.size())
        throw ShapeError("synthesize_anchor: posterior/table combination count mismatch");
    Matrix anchor(table.num_classes, table.embedding_dim);
    for (std::size_t s = 0; s < joint.size(); ++s) {
        const double w = joint[s];
        for (std::size_t k = 0; k < table.num_classes; ++k) {
            const Vec& proto = table.prototypes[s][k];
            for (std::size_t c = 0; c < table.embedding_dim; ++c)
                anchor(k, c) += w * proto[c];
        }
    }
    return anchor;
}

Matrix synthesize_anchor(const ScenePosterior& posterior, const PrototypeTable& table) {
    return synthesize_anchor(posterior.joint, table);
}

double head_ce_loss(const LinearHead& head, const Vec& cls, std::size_t label) {
    if (label >= head.text_embeddings.rows) throw DataError("label out of range");
    DiscreteDistribution p = classify_attribute(cls, head);
    return -std::log(std::max(p[label], 1e-300));
}

Matrix head_ce_gradient(const LinearHead& head, const Vec& cls, std::size_t label) {
    if (label >= head.text_embeddings.rows) throw DataError("label out of range");
    DiscreteDistribution p = classify_attribute(cls, head);
    // dCE/dT_i = (p_i - [i == label]) / tau * cls
    Matrix grad(head.text_embeddings.rows, head.text_embeddings.cols);
    for (std::size_t i = 0; i < grad.rows; ++i) {
        const double coeff = (p[i] - (i == label ? 1.0 : 0.0)) / head.tau;
        for (std::size_t c = 0; c < grad.cols; ++c) grad(i, c) = coeff * cls[c];
    }
    return grad;
}

TrainResult train_heads(const std::vector<LabeledEmbedding>& dataset,
                        const LinearHead& weather, const LinearHead& time_of_day,
                        const LinearHead& road_type, std::size_t steps,
                        double learning_rate) {
    if (dataset.empty()) throw DataError("train_heads: empty dataset");
    TrainResult out{weather, time_of_day, road_type, {}};
    LinearHead* heads[3] = {&out.weather, &out.time_of_day, &out.road_type};
    for (const LabeledEmbedding& s : dataset) {
        std::size_t labels[3] = {s.weather, s.time_of_day, s.road_type};
        for (int a = 0; a < 3; ++a)
            if (labels[a] >= heads[a]->text_embeddings.rows)
                throw DataError("train_heads: label out of range");
    }

    out.loss_trace.reserve(steps);
    const double scale = 1.0 / static_cast<double>(dataset.size());
    for (std::size_t step = 0; step < steps; ++step) {
        double loss = 0.0;
        for (int a = 0; a < 3; ++a) {
            LinearHead& head = *heads[a];
            Matrix grad(head.text_embeddings.rows, head.text_embeddings.cols);
            for (const LabeledEmbedding& s : dataset) {
                std::size_t label = a == 0 ? s.weather : a == 1 ? s.time_of_day : s.road_type;
                loss += head_ce_loss(head, s.cls_embedding, label) * scale;
                Matrix g = head_ce_gradient(head, s.cls_embedding, label);
                for (std::size_t i = 0; i < g.data.size(); ++i) grad.data[i] += g.data[i] * scale;
            }
            for (std::size_t i = 0; i < grad.data.size(); ++i)
                head.text_embeddings.data[i] -= learning_rate * grad.data[i];
        }
        out.loss_trace.push_back(loss);
    }
    return out;
}

}  // namespace otfuse
