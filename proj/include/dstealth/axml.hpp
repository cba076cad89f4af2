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

// Binary Android XML (AXML) and resource-table handling: parse the compiled
// manifest, rewrite the application label, and resolve density-qualified
// icon paths from resources.arsc. Covers exactly what repackaging needs —
// no styles, no bags, no manifest merging.

#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"

namespace dstealth::axml {

inline constexpr std::uint32_t kNoIndex = 0xFFFFFFFFu;

// Chunk type codes.
inline constexpr std::uint16_t kChunkStringPool = 0x0001;
inline constexpr std::uint16_t kChunkTable = 0x0002;
inline constexpr std::uint16_t kChunkXml = 0x0003;
inline constexpr std::uint16_t kChunkStartNamespace = 0x0100;
inline constexpr std::uint16_t kChunkEndNamespace = 0x0101;
inline constexpr std::uint16_t kChunkStartElement = 0x0102;
inline constexpr std::uint16_t kChunkEndElement = 0x0103;
inline constexpr std::uint16_t kChunkCData = 0x0104;
inline constexpr std::uint16_t kChunkResourceMap = 0x0180;
inline constexpr std::uint16_t kChunkTablePackage = 0x0200;
inline constexpr std::uint16_t kChunkTableType = 0x0201;
inline constexpr std::uint16_t kChunkTableTypeSpec = 0x0202;

// Typed-value codes (Res_value.dataType).
namespace vt {
inline constexpr std::uint8_t Reference = 0x01;
inline constexpr std::uint8_t String = 0x03;
inline constexpr std::uint8_t IntDec = 0x10;
inline constexpr std::uint8_t Boolean = 0x12;
}  // namespace vt

// ---------------------------------------------------------------------------
// UTF helpers (the pool stores UTF-8 internally; UTF-16LE pools are
// transcoded on the way in and out)
// ---------------------------------------------------------------------------

inline std::vector<std::uint16_t> utf16_units(std::string_view s) {
  std::vector<std::uint16_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::uint8_t c = std::uint8_t(s[i]);
    std::uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F, extra = 1;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F, extra = 2;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07, extra = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      std::uint8_t cc = std::uint8_t(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    i += std::size_t(extra) + 1;
    if (cp >= 0x10000) {
      cp -= 0x10000;
      out.push_back(std::uint16_t(0xD800 | (cp >> 10)));
      out.push_back(std::uint16_t(0xDC00 | (cp & 0x3FF)));
    } else {
      out.push_back(std::uint16_t(cp));
    }
  }
  return out;
}

inline std::string utf8_from_utf16(const std::vector<std::uint16_t>& units) {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    std::uint32_t cp = units[i];
    if (cp >= 0xD800 && cp < 0xDC00 && i + 1 < units.size() &&
        units[i + 1] >= 0xDC00 && units[i + 1] < 0xE000) {
      cp = 0x10000 + ((cp - 0xD800) << 10) + (units[i + 1] - 0xDC00);
      ++i;
    }
    if (cp < 0x80) {
      out += char(cp);
    } else if (cp < 0x800) {
      out += char(0xC0 | (cp >> 6));
      out += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += char(0xE0 | (cp >> 12));
      out += char(0x80 | ((cp >> 6) & 0x3F));
      out += char(0x80 | (cp & 0x3F));
    } else {
      out += char(0xF0 | (cp >> 18));
      out += char(0x80 | ((cp >> 12) & 0x3F));
      out += char(0x80 | ((cp >> 6) & 0x3F));
      out += char(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// String pool
// ---------------------------------------------------------------------------

struct PoolString {
  std::string text;  // UTF-8
  // Bytes this string's encoded form occupies in the data area; 0 means
  // "natural size". In-place edits keep the original slot and zero-fill the
  // tail, which is what lets a shorter label overwrite a longer one without
  // moving a single other byte.
  std::uint32_t slot = 0;
};

struct StringPool {
  std::vector<PoolString> strings;
  bool utf8 = false;
  bool sorted = false;
  std::vector<std::uint32_t> original_offsets;  // as parsed; informational

  std::size_t size() const noexcept { return strings.size(); }

  const std::string& at(std::uint32_t idx) const {
    if (idx >= strings.size()) fail(err::BadStringPool, "string index out of range");
    return strings[idx].text;
  }

  // Returns the index of `text`, appending it if absent.
  std::uint32_t add(const std::string& text) {
    for (std::uint32_t i = 0; i < strings.size(); ++i)
      if (strings[i].text == text) return i;
    strings.push_back({text, 0});
    return std::uint32_t(strings.size() - 1);
  }
};

namespace detail {

inline std::size_t len8_size(std::size_t n) { return n < 0x80 ? 1 : 2; }
inline std::size_t len16_size(std::size_t n) { return n < 0x8000 ? 2 : 4; }

inline void put_len8(ByteWriter& w, std::size_t n) {
  if (n < 0x80) {
    w.u8(std::uint8_t(n));
  } else if (n < 0x8000) {
    w.u8(std::uint8_t(0x80 | (n >> 8)));
    w.u8(std::uint8_t(n & 0xFF));
  } else {
    fail(err::BadStringPool, "string too long for utf-8 pool");
  }
}

inline void put_len16(ByteWriter& w, std::size_t n) {
  if (n < 0x8000) {
    w.u16(std::uint16_t(n));
  } else if (n < 0x80000000u) {
    w.u16(std::uint16_t(0x8000 | (n >> 16)));
    w.u16(std::uint16_t(n & 0xFFFF));
  } else {
    fail(err::BadStringPool, "string too long for utf-16 pool");
  }
}

}  // namespace detail

// Encoded byte length of `text` in a pool of the given encoding, including
// length prefixes and the terminator.
inline std::size_t encoded_size(const std::string& text, bool utf8_pool) {
  std::size_t units = utf16_units(text).size();
  if (utf8_pool)
    return detail::len8_size(units) + detail::len8_size(text.size()) +
           text.size() + 1;
  return detail::len16_size(units) + 2 * units + 2;
}

namespace detail {

// Lightweight view of one chunk inside a buffer.
struct ChunkView {
  std::uint16_t type = 0;
  std::uint16_t header_size = 0;
  std::uint32_t size = 0;
  const std::uint8_t* data = nullptr;  // chunk start (header included)

  ByteReader reader(std::string_view code) const { return {data, size, code}; }
};

// Reads the next chunk header at `r` and consumes the whole chunk.
inline ChunkView next_chunk(ByteReader& r) {
  ChunkView v;
  if (r.remaining() < 8) fail(err::MalformedChunk, "truncated chunk header");
  v.data = r.ptr();
  v.type = r.u16();
  v.header_size = r.u16();
  v.size = r.u32();
  if (v.header_size < 8 || v.size < v.header_size)
    fail(err::MalformedChunk, "chunk size inconsistent with header");
  if (v.size - 8 > r.remaining())
    fail(err::MalformedChunk, "chunk size overflows container");
  r.skip(v.size - 8);
  return v;
}

inline StringPool parse_string_pool(const ChunkView& c) {
  ByteReader r = c.reader(err::MalformedChunk);
  r.skip(8);
  std::uint32_t count = r.u32();
  std::uint32_t style_count = r.u32();
  std::uint32_t flags = r.u32();
  std::uint32_t strings_start = r.u32();
  std::uint32_t styles_start = r.u32();
  if (c.header_size < 28) fail(err::MalformedChunk, "string pool header too small");
  if (style_count != 0 || styles_start != 0)
    fail(err::BadStringPool, "style spans are not supported");
  if (strings_start > c.size || strings_start < c.header_size + 4ull * count)
    fail(err::MalformedChunk, "string data start out of range");

  StringPool pool;
  pool.utf8 = (flags & 0x100) != 0;
  pool.sorted = (flags & 0x1) != 0;

  r.seek(c.header_size);
  std::vector<std::uint32_t> offsets(count);
  for (auto& o : offsets) o = r.u32();

  const std::size_t region_len = c.size - strings_start;
  for (std::uint32_t off : offsets) {
    if (off >= region_len && !(off == 0 && region_len == 0))
      fail(err::BadStringPool, "string offset out of range");
    ByteReader sr(c.data + strings_start, region_len, err::MalformedChunk);
    sr.seek(off);
    PoolString ps;
    if (pool.utf8) {
      std::uint32_t u16n = sr.u8();
      if (u16n & 0x80) u16n = ((u16n & 0x7F) << 8) | sr.u8();
      std::uint32_t u8n = sr.u8();
      if (u8n & 0x80) u8n = ((u8n & 0x7F) << 8) | sr.u8();
      Bytes raw = sr.bytes(u8n);
      sr.u8();  // terminator
      ps.text.assign(raw.begin(), raw.end());
      (void)u16n;
    } else {
      std::uint32_t n = sr.u16();
      if (n & 0x8000) n = ((n & 0x7FFF) << 16) | sr.u16();
      std::vector<std::uint16_t> units(n);
      for (auto& u : units) u = sr.u16();
      sr.u16();  // terminator
      ps.text = utf8_from_utf16(units);
    }
    ps.slot = std::uint32_t(sr.pos() - off);
    pool.original_offsets.push_back(off);
    pool.strings.push_back(std::move(ps));
  }
  return pool;
}

inline void write_string_pool(ByteWriter& w, const StringPool& pool) {
  const std::size_t start = w.size();
  w.u16(kChunkStringPool);
  w.u16(28);
  const std::size_t size_at = w.size();
  w.u32(0);
  w.u32(std::uint32_t(pool.strings.size()));
  w.u32(0);
  w.u32((pool.utf8 ? 0x100u : 0u) | (pool.sorted ? 0x1u : 0u));
  w.u32(std::uint32_t(28 + 4 * pool.strings.size()));
  w.u32(0);

  std::uint32_t off = 0;
  for (const auto& s : pool.strings) {
    w.u32(off);
    std::size_t natural = encoded_size(s.text, pool.utf8);
    std::size_t slot = s.slot ? s.slot : natural;
    if (slot < natural) fail(err::BadStringPool, "string exceeds reserved slot");
    off += std::uint32_t(slot);
  }
  for (const auto& s : pool.strings) {
    std::size_t before = w.size();
    if (pool.utf8) {
      detail::put_len8(w, utf16_units(s.text).size());
      detail::put_len8(w, s.text.size());
      w.raw(s.text);
      w.u8(0);
    } else {
      auto units = utf16_units(s.text);
      detail::put_len16(w, units.size());
      for (std::uint16_t u : units) w.u16(u);
      w.u16(0);
    }
    std::size_t natural = w.size() - before;
    std::size_t slot = s.slot ? s.slot : natural;
    w.pad(slot - natural);
  }
  w.pad((4 - (w.size() - start) % 4) % 4);
  w.patch_u32(size_at, std::uint32_t(w.size() - start));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// XML document model
// ---------------------------------------------------------------------------

struct Attribute {
  std::uint32_t ns = kNoIndex;         // pool index of the namespace URI
  std::uint32_t name = 0;              // pool index
  std::uint32_t raw_value = kNoIndex;  // pool index or kNoIndex
  std::uint16_t value_size = 8;
  std::uint8_t res0 = 0;
  std::uint8_t value_type = 0;
  std::uint32_t value_data = 0;

  bool operator==(const Attribute&) const = default;
};

struct StartNamespace {
  std::uint32_t line = 0, comment = kNoIndex;
  std::uint32_t prefix = kNoIndex, uri = kNoIndex;
  bool operator==(const StartNamespace&) const = default;
};

struct EndNamespace {
  std::uint32_t line = 0, comment = kNoIndex;
  std::uint32_t prefix = kNoIndex, uri = kNoIndex;
  bool operator==(const EndNamespace&) const = default;
};

struct StartElement {
  std::uint32_t line = 0, comment = kNoIndex;
  std::uint32_t ns = kNoIndex, name = 0;
  std::uint16_t id_index = 0, class_index = 0, style_index = 0;
  std::vector<Attribute> attributes;
  bool operator==(const StartElement&) const = default;
};

struct EndElement {
  std::uint32_t line = 0, comment = kNoIndex;
  std::uint32_t ns = kNoIndex, name = 0;
  bool operator==(const EndElement&) const = default;
};

struct CData {
  std::uint32_t line = 0, comment = kNoIndex;
  std::uint32_t text = 0;
  std::uint16_t value_size = 8;
  std::uint8_t res0 = 0;
  std::uint8_t value_type = 0;
  std::uint32_t value_data = 0;
  bool operator==(const CData&) const = default;
};

// Unrecognized chunk, kept byte-for-byte (header included) and re-emitted
// verbatim so unknown extensions survive a rewrite.
struct RawChunk {
  Bytes bytes;
  bool operator==(const RawChunk&) const = default;
};

using XmlChunk = std::variant<StartNamespace, EndNamespace, StartElement,
                              EndElement, CData, RawChunk>;

struct AxmlDocument {
  StringPool pool;
  bool has_resource_map = false;
  std::vector<std::uint32_t> resource_map;
  std::vector<XmlChunk> chunks;
  std::vector<std::string> warnings;  // e.g. preserved unsupported chunks
};

namespace detail {

inline void check_index(const StringPool& pool, std::uint32_t idx) {
  if (idx != kNoIndex && idx >= pool.size())
    fail(err::MalformedChunk, "string index out of range");
}

inline XmlChunk parse_xml_chunk(const ChunkView& c, const StringPool& pool) {
  ByteReader r = c.reader(err::MalformedChunk);
  r.skip(8);
  std::uint32_t line = r.u32();
  std::uint32_t comment = r.u32();
  check_index(pool, comment);
  r.seek(c.header_size);

  switch (c.type) {
    case kChunkStartNamespace:
    case kChunkEndNamespace: {
      std::uint32_t prefix = r.u32();
      std::uint32_t uri = r.u32();
      check_index(pool, prefix);
      check_index(pool, uri);
      if (c.type == kChunkStartNamespace)
        return StartNamespace{line, comment, prefix, uri};
      return EndNamespace{line, comment, prefix, uri};
    }
    case kChunkStartElement: {
      StartElement e;
      e.line = line;
      e.comment = comment;
      e.ns = r.u32();
      e.name = r.u32();
      std::uint16_t attr_start = r.u16();
      std::uint16_t attr_size = r.u16();
      std::uint16_t attr_count = r.u16();
      e.id_index = r.u16();
      e.class_index = r.u16();
      e.style_index = r.u16();
      check_index(pool, e.ns);
      check_index(pool, e.name);
      if (attr_size < 20)
        fail(err::MalformedChunk, "attribute record too small");
      std::size_t attrs_at = std::size_t(c.header_size) + attr_start;
      if (attrs_at + std::size_t(attr_count) * attr_size > c.size)
        fail(err::MalformedChunk, "attributes overflow element chunk");
      for (std::uint16_t i = 0; i < attr_count; ++i) {
        r.seek(attrs_at + std::size_t(i) * attr_size);
        Attribute a;
        a.ns = r.u32();
        a.name = r.u32();
        a.raw_value = r.u32();
        a.value_size = r.u16();
        a.res0 = r.u8();
        a.value_type = r.u8();
        a.value_data = r.u32();
        check_index(pool, a.ns);
        check_index(pool, a.name);
        check_index(pool, a.raw_value);
        if (a.value_type == vt::String) check_index(pool, a.value_data);
        e.attributes.push_back(a);
      }
      return e;
    }
    case kChunkEndElement: {
      EndElement e;
      e.line = line;
      e.comment = comment;
      e.ns = r.u32();
      e.name = r.u32();
      check_index(pool, e.ns);
      check_index(pool, e.name);
      return e;
    }
    case kChunkCData: {
      CData t;
      t.line = line;
      t.comment = comment;
      t.text = r.u32();
      t.value_size = r.u16();
      t.res0 = r.u8();
      t.value_type = r.u8();
      t.value_data = r.u32();
      check_index(pool, t.text);
      if (t.value_type == vt::String) check_index(pool, t.value_data);
      return t;
    }
    default:
      fail(err::MalformedChunk, "unexpected chunk in xml body");
  }
}

inline void write_xml_chunk(ByteWriter& w, const XmlChunk& chunk) {
  struct Visitor {
    ByteWriter& w;

    void node_header(std::uint16_t type, std::uint32_t size, std::uint32_t line,
                     std::uint32_t comment) {
      w.u16(type);
      w.u16(16);
      w.u32(size);
      w.u32(line);
      w.u32(comment);
    }

    void operator()(const StartNamespace& n) {
      node_header(kChunkStartNamespace, 24, n.line, n.comment);
      w.u32(n.prefix);
      w.u32(n.uri);
    }
    void operator()(const EndNamespace& n) {
      node_header(kChunkEndNamespace, 24, n.line, n.comment);
      w.u32(n.prefix);
      w.u32(n.uri);
    }
    void operator()(const StartElement& e) {
      std::uint32_t size = 36 + 20 * std::uint32_t(e.attributes.size());
      node_header(kChunkStartElement, size, e.line, e.comment);
      w.u32(e.ns);
      w.u32(e.name);
      w.u16(20);  // attribute start
      w.u16(20);  // attribute size
      w.u16(std::uint16_t(e.attributes.size()));
      w.u16(e.id_index);
      w.u16(e.class_index);
      w.u16(e.style_index);
      for (const Attribute& a : e.attributes) {
        w.u32(a.ns);
        w.u32(a.name);
        w.u32(a.raw_value);
        w.u16(a.value_size);
        w.u8(a.res0);
        w.u8(a.value_type);
        w.u32(a.value_data);
      }
    }
    void operator()(const EndElement& e) {
      node_header(kChunkEndElement, 24, e.line, e.comment);
      w.u32(e.ns);
      w.u32(e.name);
    }
    void operator()(const CData& t) {
      node_header(kChunkCData, 28, t.line, t.comment);
      w.u32(t.text);
      w.u16(t.value_size);
      w.u8(t.res0);
      w.u8(t.value_type);
      w.u32(t.value_data);
    }
    void operator()(const RawChunk& rc) { w.raw(rc.bytes); }
  };
  std::visit(Visitor{w}, chunk);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parse / serialize
// ---------------------------------------------------------------------------

inline AxmlDocument parse_axml(const Bytes& bytes) {
  ByteReader top(bytes, err::MalformedChunk);
  detail::ChunkView doc_chunk = detail::next_chunk(top);
  if (doc_chunk.type != kChunkXml)
    fail(err::MalformedChunk, "input is not a compiled xml document");
  if (doc_chunk.size != bytes.size())
    fail(err::MalformedChunk, "document size disagrees with input length");

  AxmlDocument doc;
  ByteReader r(doc_chunk.data + doc_chunk.header_size,
               doc_chunk.size - doc_chunk.header_size, err::MalformedChunk);

  bool have_pool = false;
  while (r.remaining() > 0) {
    detail::ChunkView c = detail::next_chunk(r);
    if (!have_pool) {
      if (c.type != kChunkStringPool)
        fail(err::MalformedChunk, "first chunk must be the string pool");
      doc.pool = detail::parse_string_pool(c);
      have_pool = true;
      continue;
    }
    switch (c.type) {
      case kChunkResourceMap: {
        if (doc.has_resource_map)
          fail(err::MalformedChunk, "duplicate resource map");
        if (c.header_size != 8 || (c.size - 8) % 4 != 0)
          fail(err::MalformedChunk, "resource map layout invalid");
        ByteReader mr = c.reader(err::MalformedChunk);
        mr.skip(8);
        for (std::uint32_t i = 0; i < (c.size - 8) / 4; ++i)
          doc.resource_map.push_back(mr.u32());
        doc.has_resource_map = true;
        break;
      }
      case kChunkStartNamespace:
      case kChunkEndNamespace:
      case kChunkStartElement:
      case kChunkEndElement:
      case kChunkCData:
        doc.chunks.push_back(detail::parse_xml_chunk(c, doc.pool));
        break;
      case kChunkStringPool:
        fail(err::MalformedChunk, "duplicate string pool");
      default: {
        char msg[64];
        std::snprintf(msg, sizeof msg,
                      "UnsupportedChunk: type 0x%04x preserved verbatim",
                      c.type);
        doc.warnings.push_back(msg);
        doc.chunks.push_back(RawChunk{Bytes(c.data, c.data + c.size)});
      }
    }
  }
  if (!have_pool) fail(err::MalformedChunk, "document has no string pool");
  return doc;
}

inline Bytes serialize_axml(const AxmlDocument& doc) {
  ByteWriter w;
  w.u16(kChunkXml);
  w.u16(8);
  w.u32(0);  // patched below
  detail::write_string_pool(w, doc.pool);
  if (doc.has_resource_map) {
    w.u16(kChunkResourceMap);
    w.u16(8);
    w.u32(std::uint32_t(8 + 4 * doc.resource_map.size()));
    for (std::uint32_t id : doc.resource_map) w.u32(id);
  }
  for (const XmlChunk& c : doc.chunks) detail::write_xml_chunk(w, c);
  w.patch_u32(4, std::uint32_t(w.size()));
  return std::move(w.buf());
}

// ---------------------------------------------------------------------------
// Attribute lookup
// ---------------------------------------------------------------------------

struct AttributeValue {
  enum class Kind { String, Reference, IntDec, Boolean, Other };
  Kind kind = Kind::Other;
  std::uint8_t type_code = 0;
  std::uint32_t data = 0;   // pool index / resource id / integer / flag
  std::string text;         // resolved pool string for Kind::String
};

namespace detail {

inline AttributeValue make_value(const StringPool& pool, const Attribute& a) {
  AttributeValue v;
  v.type_code = a.value_type;
  v.data = a.value_data;
  switch (a.value_type) {
    case vt::String:
      v.kind = AttributeValue::Kind::String;
      v.text = pool.at(a.value_data);
      break;
    case vt::Reference:
      v.kind = AttributeValue::Kind::Reference;
      break;
    case vt::IntDec:
      v.kind = AttributeValue::Kind::IntDec;
      break;
    case vt::Boolean:
      v.kind = AttributeValue::Kind::Boolean;
      break;
    default:
      v.kind = AttributeValue::Kind::Other;
  }
  return v;
}

// Finds the first element whose ancestor-name stack equals `path`; calls
// `found` with its StartElement. Returns false if no element matches.
template <typename Doc, typename Fn>
bool find_element(Doc& doc, const std::vector<std::string>& path, Fn&& found) {
  std::vector<std::string> stack;
  for (auto& chunk : doc.chunks) {
    if (auto* e = std::get_if<StartElement>(&chunk)) {
      stack.push_back(doc.pool.at(e->name));
      if (stack.size() == path.size()) {
        bool match = true;
        for (std::size_t i = 0; i < path.size(); ++i)
          if (stack[i] != path[i]) {
            match = false;
            break;
          }
        if (match) {
          found(*e);
          return true;
        }
      }
    } else if (std::holds_alternative<EndElement>(chunk)) {
      if (!stack.empty()) stack.pop_back();
    }
  }
  return false;
}

}  // namespace detail

// Returns the named attribute of the first element matching `element_path`
// (root-to-leaf names). Namespace is ignored; the packaged manifest uses a
// single attribute namespace in practice.
inline AttributeValue get_attribute(const AxmlDocument& doc,
                                    const std::vector<std::string>& element_path,
                                    std::string_view attr_name) {
  std::optional<AttributeValue> result;
  bool matched = detail::find_element(
      doc, element_path, [&](const StartElement& e) {
        for (const Attribute& a : e.attributes)
          if (doc.pool.at(a.name) == attr_name) {
            result = detail::make_value(doc.pool, a);
            return;
          }
      });
  if (!matched) fail(err::ElementNotFound, "no element matches the path");
  if (!result)
    fail(err::AttributeNotFound,
         "element has no attribute named " + std::string(attr_name));
  return *result;
}

// ---------------------------------------------------------------------------
// Label rewrite
// ---------------------------------------------------------------------------

enum class LabelMode { InPlace, Rebuild };

// Rewrites the application label. InPlace overwrites the existing pool
// string inside its original slot (so the output keeps every byte offset,
// the limitation the technique is known for); Rebuild re-serializes the
// pool and accepts any length.
inline AxmlDocument set_label(AxmlDocument doc, const std::string& new_name,
                              LabelMode mode) {
  Attribute* label = nullptr;
  detail::find_element(doc, {"manifest", "application"},
                       [&](StartElement& e) {
                         for (Attribute& a : e.attributes)
                           if (doc.pool.at(a.name) == "label") {
                             label = &a;
                             return;
                           }
                       });
  if (!label) fail(err::LabelNotFound, "application element has no label");

  if (label->value_type == vt::String) {
    std::uint32_t idx = label->value_data;
    PoolString& ps = doc.pool.strings[idx];
    if (mode == LabelMode::InPlace) {
      std::size_t slot = ps.slot ? ps.slot : encoded_size(ps.text, doc.pool.utf8);
      if (encoded_size(new_name, doc.pool.utf8) > slot)
        fail(err::NameTooLong,
             "new name does not fit the existing slot (must encode to the "
             "same length or shorter)");
      ps.slot = std::uint32_t(slot);
      ps.text = new_name;
      return doc;
    }
    std::uint32_t nidx = doc.pool.add(new_name);
    label->value_data = nidx;
    label->raw_value = nidx;
  } else {
    if (mode == LabelMode::InPlace)
      fail(err::LabelIsResourceReference,
           "label is a resource reference; no pool string to edit in place");
    std::uint32_t nidx = doc.pool.add(new_name);
    label->value_type = vt::String;
    label->value_size = 8;
    label->value_data = nidx;
    label->raw_value = nidx;
  }
  // Rebuild: drop reserved slots so the pool re-serializes at natural size.
  for (PoolString& s : doc.pool.strings) s.slot = 0;
  return doc;
}

// ---------------------------------------------------------------------------
// Resource table
// ---------------------------------------------------------------------------

inline std::string density_name(std::uint16_t d) {
  switch (d) {
    case 0: return "default";
    case 120: return "ldpi";
    case 160: return "mdpi";
    case 240: return "hdpi";
    case 320: return "xhdpi";
    case 480: return "xxhdpi";
    case 640: return "xxxhdpi";
    default: return std::to_string(d) + "dpi";
  }
}

inline std::optional<std::uint16_t> density_value(std::string_view name) {
  if (name == "default") return 0;
  if (name == "ldpi") return 120;
  if (name == "mdpi") return 160;
  if (name == "hdpi") return 240;
  if (name == "xhdpi") return 320;
  if (name == "xxhdpi") return 480;
  if (name == "xxxhdpi") return 640;
  return std::nullopt;
}

struct ResValue {
  std::uint16_t density = 0;
  std::string config;  // density qualifier name ("default", "mdpi", ...)
  std::uint8_t value_type = 0;
  std::uint32_t data = 0;
};

struct ResEntry {
  std::uint32_t id = 0;  // full 0xPPTTEEEE resource id
  std::string type_name;
  std::string name;
  std::vector<ResValue> values;  // one per configuration, in table order
};

struct ResPackage {
  std::uint8_t id = 0;
  std::string name;
  std::vector<ResEntry> entries;
};

struct ResourceTable {
  StringPool global;
  std::vector<ResPackage> packages;
  std::vector<std::string> warnings;
};

namespace detail {

inline ResPackage parse_package(const ChunkView& c, const StringPool& global,
                                std::vector<std::string>& warnings) {
  (void)global;
  ByteReader r = c.reader(err::MalformedChunk);
  r.skip(8);
  if (c.header_size < 284)
    fail(err::MalformedChunk, "package header too small");
  ResPackage pkg;
  pkg.id = std::uint8_t(r.u32());
  std::vector<std::uint16_t> name_units;
  for (int i = 0; i < 128; ++i) {
    std::uint16_t u = r.u16();
    if (u && name_units.size() == std::size_t(i)) name_units.push_back(u);
  }
  pkg.name = utf8_from_utf16(name_units);
  std::uint32_t type_strings_at = r.u32();
  r.u32();  // lastPublicType
  std::uint32_t key_strings_at = r.u32();

  StringPool type_pool, key_pool;
  bool have_types = false, have_keys = false;

  ByteReader body(c.data, c.size, err::MalformedChunk);
  body.seek(c.header_size);
  while (body.remaining() > 0) {
    std::size_t at = body.pos();
    ChunkView sc = next_chunk(body);
    switch (sc.type) {
      case kChunkStringPool:
        if (at == type_strings_at) {
          type_pool = parse_string_pool(sc);
          have_types = true;
        } else if (at == key_strings_at) {
          key_pool = parse_string_pool(sc);
          have_keys = true;
        } else {
          warnings.push_back("stray string pool in package skipped");
        }
        break;
      case kChunkTableTypeSpec:
        break;  // per-entry configuration-change flags; nothing to resolve
      case kChunkTableType: {
        if (!have_types || !have_keys)
          fail(err::MalformedChunk, "type data before its string pools");
        ByteReader tr = sc.reader(err::MalformedChunk);
        tr.skip(8);
        std::uint8_t type_id = tr.u8();
        tr.u8();   // flags
        tr.u16();  // reserved
        std::uint32_t entry_count = tr.u32();
        std::uint32_t entries_start = tr.u32();
        std::uint32_t cfg_size = tr.u32();
        if (cfg_size < 8 || 20ull + cfg_size > sc.size)
          fail(err::MalformedChunk, "bad configuration block");
        std::uint16_t density = 0;
        if (cfg_size >= 16) {
          tr.seek(20 + 14);
          density = tr.u16();
        }
        if (type_id == 0 || type_id > type_pool.size())
          fail(err::MalformedChunk, "type id outside the type-name pool");
        if (std::size_t(sc.header_size) + 4ull * entry_count > sc.size ||
            entries_start > sc.size)
          fail(err::MalformedChunk, "entry table overflows type chunk");

        tr.seek(sc.header_size);
        for (std::uint32_t i = 0; i < entry_count; ++i) {
          std::uint32_t off = tr.u32();
          if (off == kNoIndex) continue;
          if (entries_start + 0ull + off + 16 > sc.size)
            fail(err::MalformedChunk, "entry offset out of range");
          ByteReader er(sc.data + entries_start + off, sc.size - entries_start - off,
                        err::MalformedChunk);
          std::uint16_t esize = er.u16();
          std::uint16_t eflags = er.u16();
          std::uint32_t key = er.u32();
          std::uint32_t rid =
              (std::uint32_t(pkg.id) << 24) | (std::uint32_t(type_id) << 16) | i;
          if (eflags & 0x0001) {  // complex (bag) value
            char msg[48];
            std::snprintf(msg, sizeof msg, "bag entry 0x%08x skipped", rid);
            warnings.push_back(msg);
            continue;
          }
          er.seek(esize);
          er.u16();  // value size
          er.u8();   // res0
          std::uint8_t vtype = er.u8();
          std::uint32_t vdata = er.u32();

          ResEntry* entry = nullptr;
          for (auto& e : pkg.entries)
            if (e.id == rid) entry = &e;
          if (!entry) {
            pkg.entries.push_back(
                {rid, type_pool.at(type_id - 1), key_pool.at(key), {}});
            entry = &pkg.entries.back();
          }
          entry->values.push_back(
              {density, density_name(density), vtype, vdata});
        }
        break;
      }
      default: {
        char msg[64];
        std::snprintf(msg, sizeof msg,
                      "unknown package chunk 0x%04x skipped", sc.type);
        warnings.push_back(msg);
      }
    }
  }
  return pkg;
}

}  // namespace detail

inline ResourceTable parse_resource_table(const Bytes& bytes) {
  ByteReader top(bytes, err::MalformedChunk);
  detail::ChunkView table = detail::next_chunk(top);
  if (table.type != kChunkTable)
    fail(err::MalformedChunk, "input is not a resource table");
  if (table.size != bytes.size())
    fail(err::MalformedChunk, "table size disagrees with input length");
  if (table.header_size < 12)
    fail(err::MalformedChunk, "table header too small");

  ResourceTable out;
  ByteReader r(table.data, table.size, err::MalformedChunk);
  r.seek(table.header_size);
  bool have_global = false;
  while (r.remaining() > 0) {
    detail::ChunkView c = detail::next_chunk(r);
    if (c.type == kChunkStringPool && !have_global) {
      out.global = detail::parse_string_pool(c);
      have_global = true;
    } else if (c.type == kChunkTablePackage) {
      if (!have_global)
        fail(err::MalformedChunk, "package before global string pool");
      out.packages.push_back(
          detail::parse_package(c, out.global, out.warnings));
    } else {
      char msg[64];
      std::snprintf(msg, sizeof msg, "unknown table chunk 0x%04x skipped",
                    c.type);
      out.warnings.push_back(msg);
    }
  }
  if (!have_global)
    fail(err::MalformedChunk, "resource table has no string pool");
  return out;
}

struct ResolvedPath {
  std::string density;  // qualifier name
  std::string path;     // archive entry path
};

// Every density-qualified file path configured for `resource_id`. Entries
// that exist but hold non-path values yield an empty list.
inline std::vector<ResolvedPath> resolve_resource_paths(
    const ResourceTable& table, std::uint32_t resource_id) {
  std::uint8_t pkg_id = std::uint8_t(resource_id >> 24);
  const ResPackage* pkg = nullptr;
  for (const auto& p : table.packages)
    if (p.id == pkg_id) pkg = &p;
  if (!pkg) fail(err::ResourceNotFound, "no package for the resource id");

  const ResEntry* entry = nullptr;
  for (const auto& e : pkg->entries)
    if (e.id == resource_id) entry = &e;
  if (!entry) fail(err::ResourceNotFound, "resource id has no entry");

  std::vector<ResolvedPath> out;
  for (const ResValue& v : entry->values) {
    if (v.value_type != vt::String) continue;
    const std::string& s = table.global.at(v.data);
    if (s.rfind("res/", 0) == 0) out.push_back({v.config, s});
  }
  return out;
}

}  // namespace dstealth::axml
