#pragma once

// Versioned binary parameter blobs, all fields little-endian.
//
// SIREN ("IFSN"):
//   char[4] magic | u32 version | u32 hidden_layers | u32 width | u32 input_dims |
//   u32 output_dims | f64 omega | u64 count | f64[count] parameters (frozen layout)
// Hypernetwork ("IFHN"):
//   char[4] magic | u32 version | SIREN header fields as above (hidden_layers .. omega) |
//   u32 hidden_width | f64 t0 | f64 t1 | u64 count | f64[count] parameters

#include <cstdint>
#include <span>
#include <vector>

#include "iflow/hypernet.hpp"
#include "iflow/siren.hpp"

namespace iflow {

inline constexpr std::uint32_t kBlobVersion = 1;

std::vector<std::uint8_t> write_siren_blob(const SirenParams& params);
SirenParams read_siren_blob(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_hyper_blob(const HyperParams& params);
HyperParams read_hyper_blob(std::span<const std::uint8_t> bytes);

}  // namespace iflow
