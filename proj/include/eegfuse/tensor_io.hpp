#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegfuse/tensor.hpp"

namespace eegfuse {

// On-disk tensor container ("NFT"):
//   magic "NFTENSR1" (8 bytes)
//   u8 dtype code (0 = f32, 1 = f64)
//   u8 rank
//   rank x u64 dims, little-endian
//   payload, row-major little-endian values
//   u32 CRC32 of the payload, little-endian
enum class DType : uint8_t { f32 = 0, f64 = 1 };

inline constexpr char kTensorMagic[8] = {'N', 'F', 'T', 'E', 'N', 'S', 'R', '1'};

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed = 0);

std::vector<uint8_t> encode_tensor(const Tensor& t, DType dtype);
Tensor decode_tensor(const uint8_t* bytes, size_t n, DType* dtype_out = nullptr);

void save_tensor(const Tensor& t, const std::string& path, DType dtype = DType::f64);
Tensor load_tensor(const std::string& path, DType* dtype_out = nullptr);

}  // namespace eegfuse
