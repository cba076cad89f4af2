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

// Zip handling for application packages: whole-archive-in-memory model,
// entry replacement, deterministic rebuild, and 4-byte alignment of stored
// entries via zero-filled local extra fields. Methods 0 and 8 only; no
// Zip64, no encryption.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"

namespace dstealth::apkzip {

enum class Method : std::uint16_t { Stored = 0, Deflated = 8 };

inline constexpr std::uint32_t kLocalSig = 0x04034B50;
inline constexpr std::uint32_t kCentralSig = 0x02014B50;
inline constexpr std::uint32_t kEndSig = 0x06054B50;
// Fixed DOS timestamp (1980-01-01 00:00) keeps rebuilds byte-deterministic.
inline constexpr std::uint16_t kDosTime = 0x0000;
inline constexpr std::uint16_t kDosDate = 0x0021;

struct Entry {
  std::string path;
  Method method = Method::Stored;
  std::uint32_t crc = 0;  // of the decompressed data
  Bytes data;             // decompressed
  std::uint16_t extra_len = 0;  // local extra field length (zero-filled)

  // Source-archive layout, filled by read_archive; informational only.
  std::uint64_t header_offset = 0;
  std::uint64_t data_offset = 0;
  std::uint32_t compressed_size = 0;
};

struct ArchiveModel {
  std::vector<Entry> entries;
  std::string comment;

  const Entry* find(std::string_view path) const {
    for (const auto& e : entries)
      if (e.path == path) return &e;
    return nullptr;
  }
  Entry* find(std::string_view path) {
    for (auto& e : entries)
      if (e.path == path) return &e;
    return nullptr;
  }
};

namespace detail {

inline std::uint32_t crc_of(const Bytes& data) {
  return std::uint32_t(
      ::crc32(0L, data.empty() ? Z_NULL : data.data(), uInt(data.size())));
}

inline Bytes inflate_raw(const std::uint8_t* p, std::size_t n,
                         std::size_t expected, const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK)
    fail(err::BadArchive, "inflate init failed");
  Bytes out(expected + 1);  // spare byte so Z_STREAM_END is reachable
  zs.next_in = const_cast<Bytef*>(p);
  zs.avail_in = uInt(n);
  zs.next_out = out.data();
  zs.avail_out = uInt(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected)
    fail(err::BadArchive, "entry " + path + " does not inflate cleanly");
  out.resize(expected);
  return out;
}

inline Bytes deflate_raw(const Bytes& data) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(err::BadArchive, "deflate init failed");
  Bytes out(deflateBound(&zs, uLong(data.size())));
  zs.next_in = const_cast<Bytef*>(data.empty() ? nullptr : data.data());
  zs.avail_in = uInt(data.size());
  zs.next_out = out.data();
  zs.avail_out = uInt(out.size());
  int rc = deflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) fail(err::BadArchive, "deflate failed");
  out.resize(produced);
  return out;
}

struct EndRecord {
  std::uint16_t entry_count = 0;
  std::uint32_t cd_size = 0;
  std::uint32_t cd_offset = 0;
  std::string comment;
};

inline EndRecord find_end_record(const Bytes& bytes) {
  if (bytes.size() < 22) fail(err::BadArchive, "missing end record");
  std::size_t low =
      bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
  for (std::size_t at = bytes.size() - 22;; --at) {
    if (bytes[at] == 0x50 && bytes[at + 1] == 0x4B && bytes[at + 2] == 0x05 &&
        bytes[at + 3] == 0x06) {
      ByteReader r(bytes.data() + at, bytes.size() - at, err::BadArchive);
      r.skip(4);
      std::uint16_t disk = r.u16();
      std::uint16_t cd_disk = r.u16();
      std::uint16_t disk_entries = r.u16();
      EndRecord e;
      e.entry_count = r.u16();
      e.cd_size = r.u32();
      e.cd_offset = r.u32();
      std::uint16_t clen = r.u16();
      if (disk != 0 || cd_disk != 0 || disk_entries != e.entry_count)
        fail(err::BadArchive, "multi-disk archives unsupported");
      if (e.entry_count == 0xFFFF || e.cd_offset == 0xFFFFFFFFu ||
          e.cd_size == 0xFFFFFFFFu)
        fail(err::BadArchive, "zip64 archives unsupported");
      if (clen > r.remaining()) fail(err::BadArchive, "end record truncated");
      Bytes c = r.bytes(clen);
      e.comment.assign(c.begin(), c.end());
      return e;
    }
    if (at == low) break;
  }
  fail(err::BadArchive, "missing end record");
}

struct CentralRecord {
  std::string path;
  std::uint16_t method = 0;
  std::uint16_t flags = 0;
  std::uint32_t crc = 0;
  std::uint32_t csize = 0;
  std::uint32_t usize = 0;
  std::uint32_t header_offset = 0;
};

inline std::vector<CentralRecord> read_central(const Bytes& bytes,
                                               const EndRecord& end) {
  if (std::uint64_t(end.cd_offset) + end.cd_size > bytes.size())
    fail(err::BadArchive, "central directory out of range");
  ByteReader r(bytes.data() + end.cd_offset, end.cd_size, err::BadArchive);
  std::vector<CentralRecord> out;
  for (std::uint16_t i = 0; i < end.entry_count; ++i) {
    if (r.u32() != kCentralSig)
      fail(err::BadArchive, "bad central directory record");
    r.u16();  // version made by
    r.u16();  // version needed
    CentralRecord c;
    c.flags = r.u16();
    c.method = r.u16();
    r.u16();  // time
    r.u16();  // date
    c.crc = r.u32();
    c.csize = r.u32();
    c.usize = r.u32();
    std::uint16_t nlen = r.u16();
    std::uint16_t elen = r.u16();
    std::uint16_t clen = r.u16();
    r.u16();  // disk number
    r.u16();  // internal attrs
    r.u32();  // external attrs
    c.header_offset = r.u32();
    Bytes name = r.bytes(nlen);
    c.path.assign(name.begin(), name.end());
    r.skip(std::size_t(elen) + clen);
    if (c.csize == 0xFFFFFFFFu || c.usize == 0xFFFFFFFFu ||
        c.header_offset == 0xFFFFFFFFu)
      fail(err::BadArchive, "zip64 archives unsupported");
    out.push_back(std::move(c));
  }
  return out;
}

// Serializes the model; when `boundary` is set, stored entries get their
// extra field recomputed as minimal padding so data starts on the boundary.
inline Bytes write_with_alignment(const ArchiveModel& m,
                                  std::optional<std::uint16_t> boundary) {
  ByteWriter w;
  struct Placed {
    const Entry* e;
    std::uint32_t csize;
    std::uint32_t hoff;
    std::uint16_t extra;
  };
  std::vector<Placed> placed;
  for (const Entry& e : m.entries) {
    Bytes payload =
        e.method == Method::Deflated ? deflate_raw(e.data) : Bytes();
    const Bytes& body = e.method == Method::Deflated ? payload : e.data;
    std::uint16_t extra = e.extra_len;
    if (boundary && e.method == Method::Stored) {
      std::uint64_t doff0 = w.size() + 30 + e.path.size();
      extra = std::uint16_t((*boundary - doff0 % *boundary) % *boundary);
    }
    std::uint32_t hoff = std::uint32_t(w.size());
    w.u32(kLocalSig);
    w.u16(20);  // version needed
    w.u16(0);   // flags
    w.u16(std::uint16_t(e.method));
    w.u16(kDosTime);
    w.u16(kDosDate);
    w.u32(e.crc);
    w.u32(std::uint32_t(body.size()));
    w.u32(std::uint32_t(e.data.size()));
    w.u16(std::uint16_t(e.path.size()));
    w.u16(extra);
    w.raw(e.path);
    w.pad(extra);
    w.raw(body);
    placed.push_back({&e, std::uint32_t(body.size()), hoff, extra});
  }
  std::uint32_t cd_off = std::uint32_t(w.size());
  for (const Placed& p : placed) {
    w.u32(kCentralSig);
    w.u16(20);  // version made by
    w.u16(20);  // version needed
    w.u16(0);   // flags
    w.u16(std::uint16_t(p.e->method));
    w.u16(kDosTime);
    w.u16(kDosDate);
    w.u32(p.e->crc);
    w.u32(p.csize);
    w.u32(std::uint32_t(p.e->data.size()));
    w.u16(std::uint16_t(p.e->path.size()));
    w.u16(0);  // central extra
    w.u16(0);  // comment
    w.u16(0);  // disk number
    w.u16(0);  // internal attrs
    w.u32(0);  // external attrs
    w.u32(p.hoff);
    w.raw(p.e->path);
  }
  std::uint32_t cd_size = std::uint32_t(w.size()) - cd_off;
  w.u32(kEndSig);
  w.u16(0);
  w.u16(0);
  w.u16(std::uint16_t(placed.size()));
  w.u16(std::uint16_t(placed.size()));
  w.u32(cd_size);
  w.u32(cd_off);
  w.u16(std::uint16_t(m.comment.size()));
  w.raw(m.comment);
  return std::move(w.buf());
}

}  // namespace detail

inline ArchiveModel read_archive(const Bytes& bytes) {
  detail::EndRecord end = detail::find_end_record(bytes);
  std::vector<detail::CentralRecord> central = detail::read_central(bytes, end);

  ArchiveModel m;
  m.comment = end.comment;
  for (const auto& c : central) {
    if (m.find(c.path))
      fail(err::BadArchive, "duplicate entry path " + c.path);
    if (c.flags & 0x0001)
      fail(err::BadArchive, "encrypted entry " + c.path + " unsupported");
    if (c.method != 0 && c.method != 8)
      fail(err::UnsupportedMethod,
           "entry " + c.path + " uses method " + std::to_string(c.method));

    ByteReader r(bytes, err::BadArchive);
    r.seek(c.header_offset);
    if (r.u32() != kLocalSig)
      fail(err::BadArchive, "bad local header for " + c.path);
    r.skip(22);  // version..usize: central values are authoritative
    std::uint16_t nlen = r.u16();
    std::uint16_t elen = r.u16();
    r.skip(std::size_t(nlen) + elen);

    Entry e;
    e.path = c.path;
    e.method = Method(c.method);
    e.extra_len = elen;
    e.header_offset = c.header_offset;
    e.data_offset = r.pos();
    e.compressed_size = c.csize;
    if (c.csize > r.remaining())
      fail(err::BadArchive, "entry " + c.path + " data out of range");
    if (e.method == Method::Stored) {
      if (c.csize != c.usize)
        fail(err::BadArchive, "stored entry " + c.path + " size mismatch");
      e.data = r.bytes(c.csize);
    } else {
      e.data = detail::inflate_raw(r.ptr(), c.csize, c.usize, c.path);
    }
    e.crc = detail::crc_of(e.data);
    if (e.crc != c.crc)
      fail(err::CrcMismatch, "entry " + c.path + " fails its checksum");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline ArchiveModel replace_entry(ArchiveModel model, std::string_view path,
                                  Bytes new_data) {
  Entry* e = model.find(path);
  if (!e) fail(err::EntryNotFound, "no entry named " + std::string(path));
  e->data = std::move(new_data);
  e->crc = detail::crc_of(e->data);
  return model;
}

inline Bytes write_archive(const ArchiveModel& model) {
  return detail::write_with_alignment(model, std::nullopt);
}

inline Bytes align_archive(const Bytes& bytes, std::uint16_t boundary = 4) {
  if (boundary == 0) fail(err::BadArchive, "alignment boundary must be > 0");
  return detail::write_with_alignment(read_archive(bytes), boundary);
}

struct AlignmentReport {
  bool ok = true;
  std::vector<std::pair<std::string, std::uint64_t>> violations;
};

inline AlignmentReport check_alignment(const Bytes& bytes,
                                       std::uint16_t boundary = 4) {
  if (boundary == 0) fail(err::BadArchive, "alignment boundary must be > 0");
  detail::EndRecord end = detail::find_end_record(bytes);
  AlignmentReport report;
  for (const auto& c : detail::read_central(bytes, end)) {
    ByteReader r(bytes, err::BadArchive);
    r.seek(c.header_offset);
    if (r.u32() != kLocalSig)
      fail(err::BadArchive, "bad local header for " + c.path);
    r.skip(22);
    std::uint16_t nlen = r.u16();
    std::uint16_t elen = r.u16();
    r.skip(std::size_t(nlen) + elen);
    if (c.method == 0 && r.pos() % boundary != 0)
      report.violations.emplace_back(c.path, r.pos());
  }
  report.ok = report.violations.empty();
  return report;
}

}  // namespace dstealth::apkzip
