#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gbert/model_config.hpp"
#include "gbert/params.hpp"
#include "gbert/tensor.hpp"

namespace gbert {

struct NamedTensor {
    std::string name;
    Shape shape;
    std::vector<double> values;

    bool operator==(const NamedTensor&) const = default;
};

/// In-memory image of a checkpoint file.
///
/// Layout (all integers little-endian):
///   "GBRT"  u32 version
///   config  u64 layers, hidden, heads, ff, vocab, max_len, type_vocab; f64 dropout, init_std
///   u32 count, then per entry  u32 name length, name, u64 value          (metadata)
///   u32 count, then per table  u32 name length, name, u32 n, n × (u32 length, bytes)
///   u32 count, then per tensor u32 name length, name, u32 rank, rank × u64 extent,
///                              row-major f64 values
///   u64 FNV-1a hash of every preceding byte
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    ModelConfig config;
    std::map<std::string, std::uint64_t> meta;
    std::map<std::string, std::vector<std::string>> tables;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
    /// Snapshot of every tensor in `params`, optionally under a name prefix.
    void add_params(const ParamSet& params, const std::string& prefix = "");
    /// Copies stored values into `params`. Throws DataError naming the first
    /// missing or misshapen tensor.
    void restore_params(const ParamSet& params, const std::string& prefix = "") const;

    bool operator==(const Checkpoint&) const = default;
};

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck);
/// Throws DataError on bad magic, version, truncation or hash mismatch.
Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gbert
