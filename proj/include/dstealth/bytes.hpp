// Copyright 2026 The dstealth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "dstealth/error.hpp"

namespace dstealth {

using Bytes = std::vector<std::uint8_t>;

// Little-endian cursor over a byte span. `underflow_code` is the error code
// raised on a short read so each format can report its own diagnosis
// (MalformedChunk for manifests, BadArchive for zips, ...).
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size,
             std::string_view underflow_code)
      : data_(data), size_(size), code_(underflow_code) {}
  ByteReader(const Bytes& data, std::string_view underflow_code)
      : ByteReader(data.data(), data.size(), underflow_code) {}

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return size_ - pos_; }

  void seek(std::size_t pos) {
    if (pos > size_) fail(code_, "seek past end of data");
    pos_ = pos;
  }

  void skip(std::size_t n) { require(n), pos_ += n; }

  std::uint8_t u8() {
    require(1);
    return data_[pos_++];
  }

  std::uint16_t u16() {
    require(2);
    std::uint16_t v = std::uint16_t(data_[pos_]) |
                      std::uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  Bytes bytes(std::size_t n) {
    require(n);
    Bytes out(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return out;
  }

  const std::uint8_t* ptr() const noexcept { return data_ + pos_; }

 private:
  void require(std::size_t n) {
    if (n > size_ - pos_) fail(code_, "truncated data");
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string_view code_;
};

class ByteWriter {
 public:
  Bytes& buf() noexcept { return buf_; }
  std::size_t size() const noexcept { return buf_.size(); }

  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u16(std::uint16_t v) {
    buf_.push_back(std::uint8_t(v));
    buf_.push_back(std::uint8_t(v >> 8));
  }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }

  void raw(const Bytes& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  void raw(std::string_view s) { raw(s.data(), s.size()); }

  void pad(std::size_t n, std::uint8_t fill = 0) {
    buf_.insert(buf_.end(), n, fill);
  }

  // Patches a previously written u32 (chunk sizes become known late).
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_[at + i] = std::uint8_t(v >> (8 * i));
  }

 private:
  Bytes buf_;
};

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(err::Io, "cannot open " + path);
  in.seekg(0, std::ios::end);
  auto n = in.tellg();
  in.seekg(0);
  Bytes out(static_cast<std::size_t>(n));
  if (n > 0 && !in.read(reinterpret_cast<char*>(out.data()), n))
    fail(err::Io, "cannot read " + path);
  return out;
}

inline void write_file(const std::string& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(err::Io, "cannot open " + path + " for writing");
  if (!data.empty())
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  if (!out.flush()) fail(err::Io, "short write to " + path);
}

}  // namespace dstealth
