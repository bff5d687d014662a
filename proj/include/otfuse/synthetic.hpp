#ifndef OTFUSE_SYNTHETIC_HPP
#define OTFUSE_SYNTHETIC_HPP

#include <cstdint>

#include "otfuse/config.hpp"
#include "otfuse/fusion.hpp"
#include "otfuse/io.hpp"

namespace otfuse {

// Deterministic counter-based RNG (splitmix64 core) so generated data is
// identical across platforms and independent of sample processing order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    double next_uniform();          // [0, 1)
    double next_gaussian();         // Box-Muller

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct SyntheticScene {
    std::size_t combination = 0;
    Vec cls_embedding;
    FeatureMap features_img;
    FeatureMap features_normal;
    Matrix depth;  // the ramp the normal branch was derived from
    PreSegProbs probs_img;
    PreSegProbs probs_normal;
    std::vector<bool> ground_truth;  // true = traversable, row-major
};

// Attribute direction vectors, opposed meta-traversability embeddings, and
// ideal classifier heads, all derived from the config seed.
PrototypeBundle make_prototype_bundle(const ExperimentConfig& cfg);

// One scene for (combination, sample_index); deterministic in (seed,
// combination, index) alone. Ground truth is a connected horizontal band;
// pre-segmentation probabilities are one-hot on the ground truth, and the
// normal branch is lifted from depth_to_normal on a matching depth ramp.
SyntheticScene generate_scene(const ExperimentConfig& cfg, const PrototypeBundle& bundle,
                              std::size_t combination, std::size_t sample_index);

// Labeled CLS embeddings for head training, one per (combination, index).
std::vector<LabeledEmbedding> generate_head_dataset(const ExperimentConfig& cfg,
                                                    const PrototypeBundle& bundle,
                                                    std::size_t per_combination);

}  // namespace otfuse

#endif
