/*
 * Copyright 2026 The serfuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Binary feature container, little-endian:
//   magic "EMF1" (4 ASCII bytes)
//   u32 record_count
//   per record: u16 id_len, id bytes (UTF-8), u32 T, u32 D,
//               T*D f32 values row-major.

#ifndef SERFUSE_FEATURE_IO_HPP_
#define SERFUSE_FEATURE_IO_HPP_

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

inline constexpr char kFeatureMagic[4] = {'E', 'M', 'F', '1'};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

inline void put_f32(std::vector<std::uint8_t>& buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

struct ByteReader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  bool has(std::size_t n) const { return data.size() - pos >= n; }

  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>(data[pos]) |
                      static_cast<std::uint16_t>(data[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    }
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

}  // namespace detail

/// Exact byte size the container format assigns to these records.
inline std::size_t feature_container_size(
    std::span<const FeatureSequence> records) {
  std::size_t n = 4 + 4;
  for (const auto& rec : records) {
    n += 2 + rec.sample_id.size() + 4 + 4 + 4 * rec.rows * rec.cols;
  }
  return n;
}

/// Serializes records in order and returns the byte count written.
/// Rejects any record violating the FeatureSequence invariants (or whose
/// values do not fit a finite f32) before touching the file.
inline std::size_t write_feature_container(
    std::span<const FeatureSequence> records,
    const std::filesystem::path& path) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    validate_feature_sequence(rec);
    if (rec.sample_id.empty() ||
        rec.sample_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw IoFailure("record " + std::to_string(i) +
                      ": sample id length does not fit the container format");
    }
    if (rec.rows > std::numeric_limits<std::uint32_t>::max() ||
        rec.cols > std::numeric_limits<std::uint32_t>::max()) {
      throw IoFailure("record " + std::to_string(i) + ": shape exceeds u32");
    }
    for (double v : rec.values) {
      if (!std::isfinite(static_cast<float>(v))) {
        throw NonFiniteValue("record " + std::to_string(i) +
                             ": value not representable as finite f32");
      }
    }
  }
  if (records.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw IoFailure("record count exceeds u32");
  }

  std::vector<std::uint8_t> buf;
  buf.reserve(feature_container_size(records));
  buf.insert(buf.end(), kFeatureMagic, kFeatureMagic + 4);
  detail::put_u32(buf, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    detail::put_u16(buf, static_cast<std::uint16_t>(rec.sample_id.size()));
    buf.insert(buf.end(), rec.sample_id.begin(), rec.sample_id.end());
    detail::put_u32(buf, static_cast<std::uint32_t>(rec.rows));
    detail::put_u32(buf, static_cast<std::uint32_t>(rec.cols));
    for (double v : rec.values) {
      detail::put_f32(buf, static_cast<float>(v));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoFailure("cannot open \"" + path.string() + "\" for writing");
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw IoFailure("short write to \"" + path.string() + "\"");
  }
  return buf.size();
}

/// Reads a container back into memory, in file order.
inline std::vector<FeatureSequence> read_feature_container(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open \"" + path.string() + "\" for reading");
  }
  std::vector<std::uint8_t> buf(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  detail::ByteReader r{buf};
  if (!r.has(4) || std::memcmp(buf.data(), kFeatureMagic, 4) != 0) {
    throw BadMagic("\"" + path.string() + "\" is not a feature container");
  }
  r.pos = 4;
  if (!r.has(4)) {
    throw TruncatedRecord("\"" + path.string() + "\": missing record count");
  }
  const std::uint32_t count = r.u32();

  std::vector<FeatureSequence> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where =
        "\"" + path.string() + "\" record " + std::to_string(i);
    if (!r.has(2)) throw TruncatedRecord(where + ": missing id length");
    const std::uint16_t id_len = r.u16();
    if (!r.has(id_len)) throw TruncatedRecord(where + ": truncated id");
    FeatureSequence rec;
    rec.sample_id.assign(reinterpret_cast<const char*>(buf.data() + r.pos),
                         id_len);
    r.pos += id_len;
    if (!r.has(8)) throw TruncatedRecord(where + ": missing shape");
    rec.rows = r.u32();
    rec.cols = r.u32();
    if (rec.rows == 0 || rec.cols == 0) {
      throw TruncatedRecord(where + ": zero dimension");
    }
    const std::size_t n = rec.rows * rec.cols;
    if (!r.has(4 * n)) throw TruncatedRecord(where + ": truncated values");
    rec.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw NonFiniteValue(where + ": non-finite value at index " +
                             std::to_string(k));
      }
      rec.values[k] = static_cast<double>(v);
    }
    records.push_back(std::move(rec));
  }
  if (r.pos != buf.size()) {
    throw TruncatedRecord("\"" + path.string() +
                          "\": trailing bytes after last record");
  }
  return records;
}

}  // namespace serfuse

#endif  // SERFUSE_FEATURE_IO_HPP_
