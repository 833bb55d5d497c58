#pragma once

#include "cesagan/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cesagan/ops.hpp"
#include "cesagan/tensor.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace ad {

// Binary layout, all integers little-endian u32 unless noted:
//   magic "CESAGANK" (8 bytes), version, metadata length, metadata bytes (UTF-8 JSON),
//   tensor count, then per tensor: name length, name, rank, dims..., numel x f32;
//   stats count, then per stats: name length, name, channels, initialized (u8),
//   channels x f32 mean, channels x f32 var.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct NamedStats {
    std::string name;
    RunningStats stats;
};

struct CheckpointData {
    std::string metadata;
    std::vector<NamedTensor> tensors;
    std::vector<NamedStats> stats;
};

void write_checkpoint(std::ostream& out, const CheckpointData& data);
CheckpointData read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::filesystem::path& path);

}  // namespace ad
CESAGAN_NAMESPACE_END
