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

// Text renderings of parsed structures, format-compatible with the
// committed reference dumps (tests/data/*.txt) so parser output can be
// compared against fixtures produced by independent tooling.

#pragma once

#include <cstdio>
#include <string>
#include <variant>

#include "dstealth/apkzip.hpp"
#include "dstealth/axml.hpp"

namespace testdump {

inline std::string attr_value_repr(const dstealth::axml::StringPool& pool,
                                   const dstealth::axml::Attribute& a) {
  namespace vt = dstealth::axml::vt;
  char buf[32];
  switch (a.value_type) {
    case vt::String:
      return "str:" + pool.at(a.value_data);
    case vt::Reference:
      std::snprintf(buf, sizeof buf, "ref:0x%08x", a.value_data);
      return buf;
    case vt::IntDec:
      std::snprintf(buf, sizeof buf, "dec:%u", a.value_data);
      return buf;
    case vt::Boolean:
      return a.value_data ? "bool:true" : "bool:false";
    default:
      std::snprintf(buf, sizeof buf, "raw:0x%08x", a.value_data);
      return buf;
  }
}

inline std::string dump_axml(const dstealth::axml::AxmlDocument& doc) {
  using namespace dstealth::axml;
  std::string out = doc.pool.utf8 ? "axml utf8\n" : "axml utf16\n";
  for (const XmlChunk& chunk : doc.chunks) {
    if (const auto* ns = std::get_if<StartNamespace>(&chunk)) {
      out += "NS " + doc.pool.at(ns->prefix) + "=" + doc.pool.at(ns->uri);
      out += '\n';
    } else if (const auto* xn = std::get_if<EndNamespace>(&chunk)) {
      out += "XNS " + doc.pool.at(xn->prefix) + "\n";
    } else if (const auto* e = std::get_if<StartElement>(&chunk)) {
      out += "E " + doc.pool.at(e->name) + "\n";
      for (const Attribute& a : e->attributes) {
        out += "A " + doc.pool.at(a.name);
        if (doc.has_resource_map && a.name < doc.resource_map.size()) {
          char buf[24];
          std::snprintf(buf, sizeof buf, " id=0x%08x",
                        doc.resource_map[a.name]);
          out += buf;
        }
        out += ' ';
        out += attr_value_repr(doc.pool, a);
        out += '\n';
      }
    } else if (const auto* x = std::get_if<EndElement>(&chunk)) {
      out += "X " + doc.pool.at(x->name) + "\n";
    }
  }
  return out;
}

inline std::string dump_arsc(const dstealth::axml::ResourceTable& table) {
  namespace vt = dstealth::axml::vt;
  std::string out = "arsc\n";
  char buf[40];
  for (const auto& pkg : table.packages) {
    std::snprintf(buf, sizeof buf, "package id=0x%02x name=", pkg.id);
    out += buf;
    out += pkg.name;
    out += '\n';
    for (const auto& e : pkg.entries) {
      for (const auto& v : e.values) {
        std::snprintf(buf, sizeof buf, "entry id=0x%08x ", e.id);
        out += buf;
        out += "type=" + e.type_name + " name=" + e.name +
               " config=" + v.config + " ";
        if (v.value_type == vt::String) {
          const std::string& s = table.global.at(v.data);
          out += (s.rfind("res/", 0) == 0 ? "path:" : "str:") + s;
        } else if (v.value_type == vt::Reference) {
          std::snprintf(buf, sizeof buf, "ref:0x%08x", v.data);
          out += buf;
        } else {
          std::snprintf(buf, sizeof buf, "raw:0x%08x", v.data);
          out += buf;
        }
        out += '\n';
      }
    }
  }
  return out;
}

inline std::string zip_listing(const dstealth::apkzip::ArchiveModel& m) {
  std::string out;
  char buf[64];
  for (const auto& e : m.entries) {
    out += "entry name=" + e.path;
    out += e.method == dstealth::apkzip::Method::Stored ? " method=stored"
                                                        : " method=deflated";
    std::snprintf(buf, sizeof buf, " crc=0x%08x usize=%llu csize=%u", e.crc,
                  (unsigned long long)e.data.size(), e.compressed_size);
    out += buf;
    std::snprintf(buf, sizeof buf, " hoff=%llu doff=%llu extra=%u\n",
                  (unsigned long long)e.header_offset,
                  (unsigned long long)e.data_offset, unsigned(e.extra_len));
    out += buf;
  }
  return out;
}

inline std::string align_report(const dstealth::Bytes& bytes,
                                std::uint16_t boundary = 4) {
  auto r = dstealth::apkzip::check_alignment(bytes, boundary);
  if (r.ok) return "ok\n";
  std::string out;
  char buf[32];
  for (const auto& [name, doff] : r.violations) {
    out += "violation name=" + name;
    std::snprintf(buf, sizeof buf, " doff=%llu\n", (unsigned long long)doff);
    out += buf;
  }
  return out;
}

}  // namespace testdump
