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

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "dstealth/axml.hpp"
#include "support/dump.hpp"
#include "support/gen_docs.hpp"
#include "support/testutil.hpp"

using dstealth::Bytes;
using dstealth::err::AttributeNotFound;
using dstealth::err::BadStringPool;
using dstealth::err::ElementNotFound;
using dstealth::err::LabelIsResourceReference;
using dstealth::err::MalformedChunk;
using dstealth::err::NameTooLong;
using dstealth::err::ResourceNotFound;
using namespace dstealth::axml;
using testutil::code_of;
using testutil::fixture;
using testutil::fixture_text;

static std::uint32_t get_u32(const Bytes& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[at + std::size_t(i)]) << (8 * i);
  return v;
}

static void put_u32(Bytes& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + std::size_t(i)] = std::uint8_t(v >> (8 * i));
}

static std::string replace_line(std::string text, const std::string& from,
                                const std::string& to) {
  std::size_t at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

TEST_CASE("manifest fixtures match the reference dumps") {
  for (const char* name :
       {"manifest.axml", "manifest_utf8.axml", "manifest_reflabel.axml"}) {
    CAPTURE(name);
    AxmlDocument doc = parse_axml(fixture(name));
    CHECK(doc.warnings.empty());
    CHECK(testdump::dump_axml(doc) ==
          fixture_text(std::string(name) + ".dump.txt"));
  }
}

TEST_CASE("resource table fixture matches the reference dump") {
  ResourceTable table = parse_resource_table(fixture("resources.arsc"));
  CHECK(table.warnings.empty());
  CHECK(testdump::dump_arsc(table) == fixture_text("resources.arsc.dump.txt"));
}

TEST_CASE("serialization is the identity on parsed fixtures") {
  for (const char* name :
       {"manifest.axml", "manifest_utf8.axml", "manifest_reflabel.axml"}) {
    CAPTURE(name);
    Bytes original = fixture(name);
    CHECK(serialize_axml(parse_axml(original)) == original);
  }
}

TEST_CASE("parse rejects malformed documents") {
  SECTION("empty input") {
    CHECK(code_of([] { parse_axml({}); }) == MalformedChunk);
  }
  SECTION("string pool chunk size decremented by 4") {
    Bytes b = fixture("manifest.axml");
    // Document header is 8 bytes; the pool chunk follows, its size field at
    // offset 8 + 4.
    put_u32(b, 12, get_u32(b, 12) - 4);
    CHECK(code_of([&] { parse_axml(b); }) == MalformedChunk);
  }
  SECTION("truncated document") {
    Bytes b = fixture("manifest.axml");
    b.resize(b.size() / 2);
    CHECK(code_of([&] { parse_axml(b); }) == MalformedChunk);
  }
  SECTION("first chunk is not a string pool") {
    dstealth::ByteWriter w;
    w.u16(kChunkXml);
    w.u16(8);
    w.u32(8 + 12);
    w.u16(kChunkResourceMap);
    w.u16(8);
    w.u32(12);
    w.u32(0x01010001);
    Bytes b = std::move(w.buf());
    CHECK(code_of([&] { parse_axml(b); }) == MalformedChunk);
  }
  SECTION("string index out of range") {
    std::mt19937 rng(7);
    AxmlDocument doc = testgen::random_doc(rng);
    // Point the first element's name past the pool.
    for (auto& chunk : doc.chunks)
      if (auto* e = std::get_if<StartElement>(&chunk)) {
        e->name = std::uint32_t(doc.pool.size());
        break;
      }
    Bytes b = serialize_axml(doc);
    CHECK(code_of([&] { parse_axml(b); }) == MalformedChunk);
  }
}

TEST_CASE("unknown chunks are preserved verbatim and reported") {
  std::mt19937 rng(11);
  AxmlDocument doc = testgen::random_doc(rng);
  RawChunk unknown;
  {
    dstealth::ByteWriter w;
    w.u16(0x00F0);
    w.u16(8);
    w.u32(12);
    w.u32(0xDEADBEEF);
    unknown.bytes = std::move(w.buf());
  }
  doc.chunks.push_back(unknown);

  Bytes b = serialize_axml(doc);
  AxmlDocument parsed = parse_axml(b);
  REQUIRE(parsed.warnings.size() == 1);
  CHECK(parsed.warnings[0] ==
        "UnsupportedChunk: type 0x00f0 preserved verbatim");
  REQUIRE(!parsed.chunks.empty());
  CHECK(parsed.chunks.back() == XmlChunk(unknown));
  CHECK(serialize_axml(parsed) == b);
}

TEST_CASE("parsed pools record encoding and slot sizes") {
  AxmlDocument utf16 = parse_axml(fixture("manifest.axml"));
  CHECK_FALSE(utf16.pool.utf8);
  AxmlDocument utf8 = parse_axml(fixture("manifest_utf8.axml"));
  CHECK(utf8.pool.utf8);

  // The fixtures carry no slack: every slot is the natural encoded size.
  for (const PoolString& s : utf16.pool.strings)
    CHECK(s.slot == encoded_size(s.text, false));
  for (const PoolString& s : utf8.pool.strings)
    CHECK(s.slot == encoded_size(s.text, true));
}

TEST_CASE("get_attribute resolves paths and attribute kinds") {
  AxmlDocument doc = parse_axml(fixture("manifest.axml"));

  auto package = get_attribute(doc, {"manifest"}, "package");
  CHECK(package.kind == AttributeValue::Kind::String);
  CHECK(package.text == "org.example.fixture");

  auto icon = get_attribute(doc, {"manifest", "application"}, "icon");
  CHECK(icon.kind == AttributeValue::Kind::Reference);
  CHECK(icon.data == 0x7F030000u);

  auto label = get_attribute(doc, {"manifest", "application"}, "label");
  CHECK(label.kind == AttributeValue::Kind::String);
  CHECK(label.text == "FixtureApp");

  auto version = get_attribute(doc, {"manifest"}, "versionCode");
  CHECK(version.kind == AttributeValue::Kind::IntDec);
  CHECK(version.data == 1);

  CHECK(code_of([&] { get_attribute(doc, {"manifest", "nosuch"}, "x"); }) ==
        ElementNotFound);
  CHECK(code_of([&] { get_attribute(doc, {"manifest"}, "nosuch"); }) ==
        AttributeNotFound);
}

TEST_CASE("set_label in place preserves length and every other byte") {
  Bytes original = fixture("manifest.axml");
  AxmlDocument doc = parse_axml(original);

  SECTION("shorter name fits the slot") {
    Bytes out = serialize_axml(set_label(doc, "Notes", LabelMode::InPlace));
    CHECK(out.size() == original.size());
    CHECK(testdump::dump_axml(parse_axml(out)) ==
          replace_line(fixture_text("manifest.axml.dump.txt"),
                       "A label id=0x01010001 str:FixtureApp",
                       "A label id=0x01010001 str:Notes"));
  }
  SECTION("equal-length name") {
    Bytes out =
        serialize_axml(set_label(doc, "Calculator", LabelMode::InPlace));
    REQUIRE(out.size() == original.size());
    // Only string-data bytes may differ: both strings are 10 UTF-16 units,
    // so exactly those 20 bytes are candidates.
    std::size_t diff = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] != original[i]) ++diff;
    CHECK(diff <= 20);
    CHECK(diff > 0);
    auto label = get_attribute(parse_axml(out), {"manifest", "application"},
                               "label");
    CHECK(label.text == "Calculator");
  }
  SECTION("identity edit is byte-identical") {
    Bytes out =
        serialize_axml(set_label(doc, "FixtureApp", LabelMode::InPlace));
    CHECK(out == original);
  }
  SECTION("longer name is rejected") {
    CHECK(code_of([&] {
            set_label(doc, "A Much Longer Application Name",
                      LabelMode::InPlace);
          }) == NameTooLong);
  }
}

TEST_CASE("set_label rebuild accepts arbitrary lengths") {
  Bytes original = fixture("manifest.axml");
  AxmlDocument doc = parse_axml(original);
  const std::string long_name = "A Much Longer Application Name";

  AxmlDocument edited = set_label(doc, long_name, LabelMode::Rebuild);
  Bytes out = serialize_axml(edited);
  CHECK(out.size() > original.size());

  AxmlDocument back = parse_axml(out);
  auto label = get_attribute(back, {"manifest", "application"}, "label");
  CHECK(label.kind == AttributeValue::Kind::String);
  CHECK(label.text == long_name);

  // Element structure is untouched: same chunk stream shape.
  AxmlDocument before = parse_axml(original);
  REQUIRE(back.chunks.size() == before.chunks.size());
  for (std::size_t i = 0; i < back.chunks.size(); ++i)
    CHECK(back.chunks[i].index() == before.chunks[i].index());
}

TEST_CASE("set_label on a reference-valued label") {
  Bytes original = fixture("manifest_reflabel.axml");
  AxmlDocument doc = parse_axml(original);

  CHECK(code_of([&] { set_label(doc, "Notes", LabelMode::InPlace); }) ==
        LabelIsResourceReference);

  AxmlDocument edited = set_label(doc, "Notes", LabelMode::Rebuild);
  auto label = get_attribute(parse_axml(serialize_axml(edited)),
                             {"manifest", "application"}, "label");
  CHECK(label.kind == AttributeValue::Kind::String);
  CHECK(label.text == "Notes");
}

TEST_CASE("equal-length pool string swap changes only string bytes") {
  Bytes original = fixture("manifest.axml");
  AxmlDocument doc = parse_axml(original);
  // Swap any pool string for an equal-unit-count replacement; the output
  // must stay the same length and parse back with the new text.
  for (std::size_t i = 0; i < doc.pool.size(); ++i) {
    const std::string& text = doc.pool.strings[i].text;
    if (text.size() != 7) continue;
    AxmlDocument copy = doc;
    copy.pool.strings[i].text = "0123456";
    Bytes out = serialize_axml(copy);
    REQUIRE(out.size() == original.size());
    CHECK(parse_axml(out).pool.strings[i].text == "0123456");
    return;
  }
  FAIL("fixture pool has no 7-character string to swap");
}

TEST_CASE("resource table resolution") {
  ResourceTable table = parse_resource_table(fixture("resources.arsc"));
  REQUIRE(table.packages.size() == 1);
  CHECK(table.packages[0].id == 0x7F);
  CHECK(table.packages[0].name == "org.example.fixture");

  SECTION("density-qualified icon paths") {
    auto paths = resolve_resource_paths(table, 0x7F030000);
    REQUIRE(paths.size() == 3);
    CHECK(paths[0].density == "mdpi");
    CHECK(paths[0].path == "res/mipmap-mdpi/ic_launcher.png");
    CHECK(paths[1].density == "hdpi");
    CHECK(paths[1].path == "res/mipmap-hdpi/ic_launcher.png");
    CHECK(paths[2].density == "xhdpi");
    CHECK(paths[2].path == "res/mipmap-xhdpi/ic_launcher.png");
  }
  SECTION("non-path entry resolves to an empty list") {
    CHECK(resolve_resource_paths(table, 0x7F020000).empty());
  }
  SECTION("unknown id") {
    CHECK(code_of([&] { resolve_resource_paths(table, 0x7F999999); }) ==
          ResourceNotFound);
  }
}

TEST_CASE("resource table parse rejects malformed input") {
  CHECK(code_of([] { parse_resource_table({}); }) == MalformedChunk);
  Bytes b = fixture("resources.arsc");
  b.resize(b.size() / 2);
  CHECK(code_of([&] { parse_resource_table(b); }) == MalformedChunk);
}

TEST_CASE("generative structural roundtrip") {
  for (std::uint32_t seed = 0; seed < 1000; ++seed) {
    std::mt19937 rng(seed);
    AxmlDocument doc = testgen::random_doc(rng);
    Bytes b = serialize_axml(doc);
    AxmlDocument parsed = parse_axml(b);
    if (!testgen::structurally_equal(doc, parsed)) {
      CAPTURE(seed);
      FAIL("parse(serialize(doc)) lost structure");
    }
    if (serialize_axml(parsed) != b) {
      CAPTURE(seed);
      FAIL("serialization is not a fixed point");
    }
  }
  SUCCEED();
}
