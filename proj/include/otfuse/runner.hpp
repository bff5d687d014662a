#ifndef OTFUSE_RUNNER_HPP
#define OTFUSE_RUNNER_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "otfuse/config.hpp"
#include "otfuse/metrics.hpp"
#include "otfuse/synthetic.hpp"

namespace otfuse {

struct DatasetEntry {
    std::size_t id = 0;
    std::size_t combination = 0;
    std::string stem;  // sample file prefix under samples/
};

struct Dataset {
    ExperimentConfig config;
    PrototypeBundle bundle;
    std::vector<DatasetEntry> entries;
    std::filesystem::path root;
};

// Writes config, prototype table, per-sample tensors, and manifest.csv.
Dataset write_dataset(const ExperimentConfig& cfg, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

SyntheticScene load_scene(const Dataset& ds, const DatasetEntry& e);

struct RunOptions {
    std::size_t parallel = 1;
    bool dump_plans = false;
    std::filesystem::path plan_dir;
    // heads to use for posterior inference; empty path = the bundle's heads
    std::filesystem::path heads_path;
};

struct RunOutput {
    EvalReport report;
    std::vector<EvalSample> samples;
};

// Full pipeline per sample: posterior -> anchor -> fuse -> mask -> counts,
// merged in manifest order regardless of worker count.
RunOutput run_pipeline(const Dataset& ds, const RunOptions& opts);

// Known-vs-unknown mIoU bars plus the delta, as a standalone SVG document.
std::string render_delta_svg(const EvalReport& report);

}  // namespace otfuse

#endif
