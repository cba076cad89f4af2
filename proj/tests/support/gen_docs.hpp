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

// Random small binary-XML documents for structural roundtrip checks.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "dstealth/axml.hpp"

namespace testgen {

inline dstealth::axml::AxmlDocument random_doc(std::mt19937& rng) {
  using namespace dstealth::axml;
  auto pick = [&](std::uint32_t n) {
    return std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng);
  };

  AxmlDocument doc;
  doc.pool.utf8 = pick(2) == 0;
  doc.pool.sorted = false;

  // Mix of ASCII and multi-byte pieces, including an astral-plane glyph.
  static const char* const pieces[] = {
      "a",       "label", "name",  "ns",         "application",
      "\xc3\xa9" /* é */, "\xe6\x97\xa5" /* 日 */,
      "\xf0\x9f\x98\x80" /* emoji */, "value", "x"};
  std::uint32_t nstr = 1 + pick(12);
  for (std::uint32_t i = 0; i < nstr; ++i) {
    std::string s;
    std::uint32_t parts = pick(4);  // zero parts → empty string
    for (std::uint32_t k = 0; k < parts; ++k)
      s += pieces[pick(std::uint32_t(std::size(pieces)))];
    doc.pool.strings.push_back({s, 0});
  }

  if (pick(2) == 0) {
    doc.has_resource_map = true;
    std::uint32_t n = pick(std::uint32_t(doc.pool.size()) + 1);
    for (std::uint32_t i = 0; i < n; ++i)
      doc.resource_map.push_back(0x01010000u + pick(1000));
  }

  auto str_idx = [&] { return pick(std::uint32_t(doc.pool.size())); };
  auto opt_idx = [&] { return pick(3) == 0 ? kNoIndex : str_idx(); };
  std::uint32_t line = 1;

  bool with_ns = pick(2) == 0;
  std::uint32_t ns_prefix = 0, ns_uri = 0;
  if (with_ns) {
    ns_prefix = str_idx();
    ns_uri = str_idx();
    doc.chunks.push_back(StartNamespace{line++, kNoIndex, ns_prefix, ns_uri});
  }

  std::function<void(int)> gen_tree = [&](int depth) {
    StartElement e;
    e.line = line++;
    e.comment = opt_idx();
    e.ns = pick(4) == 0 ? str_idx() : kNoIndex;
    e.name = str_idx();
    std::uint32_t nattr = pick(4);
    for (std::uint32_t i = 0; i < nattr; ++i) {
      Attribute a;
      a.ns = pick(3) == 0 ? kNoIndex : str_idx();
      a.name = str_idx();
      switch (pick(4)) {
        case 0:
          a.value_type = vt::String;
          a.value_data = str_idx();
          a.raw_value = a.value_data;
          break;
        case 1:
          a.value_type = vt::Reference;
          a.value_data = 0x7F000000u + pick(0xFFFF);
          break;
        case 2:
          a.value_type = vt::IntDec;
          a.value_data = pick(100000);
          break;
        default:
          a.value_type = vt::Boolean;
          a.value_data = pick(2) ? 0xFFFFFFFFu : 0;
      }
      e.attributes.push_back(a);
    }
    std::uint32_t name = e.name, ens = e.ns;
    doc.chunks.push_back(std::move(e));

    if (pick(5) == 0) {
      CData t;
      t.line = line++;
      t.text = str_idx();
      t.value_type = vt::String;
      t.value_data = t.text;
      doc.chunks.push_back(t);
    }
    int kids = depth < 2 ? int(pick(3)) : 0;
    for (int k = 0; k < kids; ++k) gen_tree(depth + 1);

    EndElement x;
    x.line = line++;
    x.ns = ens;
    x.name = name;
    doc.chunks.push_back(x);
  };

  std::uint32_t roots = 1 + pick(2);
  for (std::uint32_t r = 0; r < roots; ++r) gen_tree(0);
  if (with_ns)
    doc.chunks.push_back(EndNamespace{line++, kNoIndex, ns_prefix, ns_uri});
  return doc;
}

inline bool same_pool_texts(const dstealth::axml::StringPool& a,
                            const dstealth::axml::StringPool& b) {
  if (a.size() != b.size() || a.utf8 != b.utf8 || a.sorted != b.sorted)
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.strings[i].text != b.strings[i].text) return false;
  return true;
}

// Structural equality: pool texts, resource map, and the chunk stream.
// Slot bookkeeping and parse warnings are deliberately excluded.
inline bool structurally_equal(const dstealth::axml::AxmlDocument& a,
                               const dstealth::axml::AxmlDocument& b) {
  return same_pool_texts(a.pool, b.pool) &&
         a.has_resource_map == b.has_resource_map &&
         a.resource_map == b.resource_map && a.chunks == b.chunks;
}

}  // namespace testgen
