#ifndef OTFUSE_IO_HPP
#define OTFUSE_IO_HPP

#include <filesystem>
#include <string>

#include "otfuse/fusion.hpp"
#include "otfuse/scene.hpp"
#include "otfuse/types.hpp"

namespace otfuse {

// Prototype table together with the attribute heads it ships with; this is
// the unit the table file stores.
struct PrototypeBundle {
    PrototypeTable table;
    LinearHead weather;
    LinearHead time_of_day;
    LinearHead road_type;
};

// Feature-tensor binary format: magic `FTN1`, three little-endian u32 dims
// (H', W', C), then H'*W'*C little-endian 32-bit floats, row-major,
// channel-last.
void write_feature_map(const std::filesystem::path& path, const FeatureMap& fm);
FeatureMap read_feature_map(const std::filesystem::path& path);

// Textual key-value prototype-table file (values stored at 32-bit
// precision; combination order weather-major).
void write_prototype_bundle(const std::filesystem::path& path, const PrototypeBundle& b);
PrototypeBundle read_prototype_bundle(const std::filesystem::path& path);

void write_heads(const std::filesystem::path& path, const LinearHead& weather,
                 const LinearHead& time_of_day, const LinearHead& road_type);
void read_heads(const std::filesystem::path& path, LinearHead& weather,
                LinearHead& time_of_day, LinearHead& road_type);

// Soft mask as 16-bit binary PGM, binary mask as packed PBM.
void write_mask_pgm(const std::filesystem::path& path, const TraversabilityMask& mask);
void write_mask_pbm(const std::filesystem::path& path, const TraversabilityMask& mask);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace otfuse

#endif
