#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimguard/nnet/tensor.hpp"

namespace vimguard::ckpt {

/// Checkpoint container: magic "VGCK1", u32 header length, canonical JSON
/// header, then raw little-endian f32 blobs. The header holds caller metadata
/// under "meta" and a tensor directory under "tensors" as
/// {name, shape, dtype, offset} with offsets relative to the blob region.
/// Serialization is canonical (sorted JSON keys, insertion-ordered tensors),
/// so write -> read -> write is byte-identical.

struct NamedTensor {
    std::string name;
    const nnet::Tensor32* tensor;
};

void save(const std::filesystem::path& path, const nlohmann::json& meta,
          const std::vector<NamedTensor>& tensors);

struct Loaded {
    nlohmann::json meta;
    std::vector<std::string> order; // tensor names in file order
    std::map<std::string, nnet::Tensor32> tensors;
};

Loaded load(const std::filesystem::path& path);

} // namespace vimguard::ckpt
