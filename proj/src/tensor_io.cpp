#include "eegfuse/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "eegfuse/errors.hpp"

namespace eegfuse {

namespace {

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

void put_u32_le(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64_le(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32_le(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

uint64_t get_u64_le(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed) {
  static const std::array<uint32_t, 256> table = make_crc_table();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> encode_tensor(const Tensor& t, DType dtype) {
  if (!t.all_finite()) throw ValidationError("encode_tensor: tensor contains NaN/Inf");

  std::vector<uint8_t> out;
  const size_t width = dtype == DType::f32 ? 4 : 8;
  out.reserve(8 + 2 + 8 * t.rank() + width * t.size() + 4);
  out.insert(out.end(), kTensorMagic, kTensorMagic + 8);
  out.push_back(static_cast<uint8_t>(dtype));
  out.push_back(static_cast<uint8_t>(t.rank()));
  for (size_t d : t.shape) put_u64_le(out, static_cast<uint64_t>(d));

  const size_t payload_off = out.size();
  if (dtype == DType::f32) {
    for (double v : t.data) put_u32_le(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
  } else {
    for (double v : t.data) put_u64_le(out, std::bit_cast<uint64_t>(v));
  }
  const uint32_t sum = crc32(out.data() + payload_off, out.size() - payload_off);
  put_u32_le(out, sum);
  return out;
}

Tensor decode_tensor(const uint8_t* bytes, size_t n, DType* dtype_out) {
  if (n < 10) throw FormatError("tensor container truncated (header)");
  if (std::memcmp(bytes, kTensorMagic, 8) != 0)
    throw FormatError("tensor container magic mismatch");
  const uint8_t dtype_code = bytes[8];
  if (dtype_code > 1) throw FormatError("tensor container: unknown dtype code");
  const DType dtype = static_cast<DType>(dtype_code);
  const size_t rank = bytes[9];
  if (n < 10 + 8 * rank) throw FormatError("tensor container truncated (dims)");

  std::vector<size_t> dims(rank);
  for (size_t i = 0; i < rank; ++i)
    dims[i] = static_cast<size_t>(get_u64_le(bytes + 10 + 8 * i));

  const size_t width = dtype == DType::f32 ? 4 : 8;
  const size_t count = shape_size(dims);
  const size_t payload_off = 10 + 8 * rank;
  if (n != payload_off + width * count + 4)
    throw FormatError("tensor container: payload length does not match dims");

  const uint32_t stored = get_u32_le(bytes + n - 4);
  const uint32_t actual = crc32(bytes + payload_off, width * count);
  if (stored != actual) throw FormatError("tensor container: checksum mismatch");

  Tensor t(dims);
  const uint8_t* p = bytes + payload_off;
  if (dtype == DType::f32) {
    for (size_t i = 0; i < count; ++i, p += 4)
      t.data[i] = static_cast<double>(std::bit_cast<float>(get_u32_le(p)));
  } else {
    for (size_t i = 0; i < count; ++i, p += 8)
      t.data[i] = std::bit_cast<double>(get_u64_le(p));
  }
  if (dtype_out) *dtype_out = dtype;
  return t;
}

void save_tensor(const Tensor& t, const std::string& path, DType dtype) {
  const std::vector<uint8_t> bytes = encode_tensor(t, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path, DType* dtype_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_tensor(bytes.data(), bytes.size(), dtype_out);
}

}  // namespace eegfuse
