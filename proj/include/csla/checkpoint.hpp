#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csla/trainer.hpp"

namespace csla {

struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<float> data;

    bool operator==(const Tensor&) const = default;
};

// Container of a JSON manifest plus named float32 arrays. The byte layout is
// safetensors-compatible: u64 little-endian header length, JSON header
// (tensor table plus "__metadata__" holding the manifest), then the raw
// little-endian float32 data of each tensor in name order.
struct TensorArchive {
    nlohmann::json manifest = nlohmann::json::object();
    std::map<std::string, Tensor> tensors;

    const Tensor& at(const std::string& name) const;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive);
TensorArchive decode_archive(std::span<const std::uint8_t> bytes);

// Writes to a temporary sibling file and renames it into place; the
// temporary is removed on failure.
void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

inline constexpr int kCheckpointFormatVersion = 1;

TensorArchive to_archive(const TrainState& state);
TrainState from_archive(const TensorArchive& archive);

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

} // namespace csla
