#ifndef OTFUSE_CONFIG_HPP
#define OTFUSE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "otfuse/metrics.hpp"
#include "otfuse/ot.hpp"
#include "otfuse/scene.hpp"

namespace otfuse {

// Full experiment description; the key-value config file maps 1:1 onto
// this. Unknown keys in the file are rejected.
struct ExperimentConfig {
    AttributeSpace attributes{{"sunny", "rainy"}, {"day", "night"}, {"dirt", "gravel"}};
    std::size_t embedding_dim = 8;
    std::size_t grid_height = 16;
    std::size_t grid_width = 16;
    SinkhornConfig sinkhorn{0.01, 5000, 1e-6};
    double lambda = 0.5;
    LossWeights loss_weights;
    std::uint64_t seed = 42;
    // composite keys "weather|time|road"; subset of the combination space
    std::vector<std::string> train_combinations{"sunny|day|dirt", "sunny|day|gravel",
                                                "sunny|night|dirt", "rainy|day|dirt",
                                                "rainy|night|gravel"};
    std::size_t samples_per_combination = 25;
    std::string output_dir = "out";

    void validate() const;
    std::vector<std::size_t> train_combination_indices() const;

    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
};

}  // namespace otfuse

#endif
