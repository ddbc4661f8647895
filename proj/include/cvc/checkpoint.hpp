#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cvc/optim.hpp"

namespace cvc {

// Parameter checkpoint container.
//
//   magic "CVCP" | u32 version (1) | u32 header_count
//   header_count x { u32 key_len, key bytes, u32 val_len, val bytes }
//   u32 param_count
//   param_count x { u32 name_len, name bytes, u32 rank, u64 dims...,
//                   f64 values... }
//
// All integers and floats little-endian. The header block carries model
// metadata (cell kind, dims, vocabulary hash); a plain parameter dump has
// header_count = 0.
using CheckpointHeader = std::map<std::string, std::string>;

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const CheckpointHeader& header = {});

// Loads into a fresh store. Throws CorruptFile on bad magic, truncation or
// malformed records; IoFailure when the file cannot be read.
CheckpointHeader load_checkpoint(const std::filesystem::path& path, ParameterStore& store);

} // namespace cvc
