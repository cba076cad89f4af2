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

#include <string>

#include "dstealth/apkzip.hpp"
#include "support/dump.hpp"
#include "support/ref_crypto.hpp"
#include "support/testutil.hpp"

using dstealth::Bytes;
using namespace dstealth::apkzip;
using testutil::code_of;
using testutil::error_of;
using testutil::fixture;
using testutil::fixture_text;

static std::uint32_t eocd_cd_offset(const Bytes& b) {
  // Fixtures carry no archive comment, so the end record is the last 22
  // bytes; the central directory offset sits at +16.
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(b[b.size() - 22 + 16 + std::size_t(i)]) << (8 * i);
  return v;
}

TEST_CASE("fixture listings match the reference zip scanner") {
  for (const char* name :
       {"fixture.apk", "fixture_misaligned.apk", "fixture_signed.apk"}) {
    CAPTURE(name);
    ArchiveModel m = read_archive(fixture(name));
    CHECK(testdump::zip_listing(m) ==
          fixture_text(std::string(name) + ".listing.txt"));
  }
}

TEST_CASE("alignment reports match the reference checker") {
  CHECK(testdump::align_report(fixture("fixture.apk")) ==
        fixture_text("fixture.apk.aligncheck.txt"));
  CHECK(testdump::align_report(fixture("fixture_misaligned.apk")) ==
        fixture_text("fixture_misaligned.apk.aligncheck.txt"));
}

TEST_CASE("entry checksums agree with an independent crc implementation") {
  ArchiveModel m = read_archive(fixture("fixture.apk"));
  REQUIRE(m.find("AndroidManifest.xml"));
  REQUIRE(m.find("resources.arsc"));
  REQUIRE(m.find("classes.dex"));
  for (const char* density : {"mdpi", "hdpi", "xhdpi"})
    REQUIRE(m.find("res/mipmap-" + std::string(density) + "/ic_launcher.png"));
  for (const Entry& e : m.entries) {
    CAPTURE(e.path);
    CHECK(e.crc == refcrypto::crc32(e.data));
  }
}

TEST_CASE("read_archive rejects damaged input") {
  SECTION("empty input") {
    CHECK(code_of([] { read_archive({}); }) == dstealth::err::BadArchive);
  }
  SECTION("payload byte flip is a named checksum failure") {
    Bytes b = fixture("fixture.apk");
    const ArchiveModel m = read_archive(b);
    const Entry* arsc = m.find("resources.arsc");
    REQUIRE(arsc);
    b[arsc->data_offset + 10] ^= 0x01;
    auto [code, message] = error_of([&] { read_archive(b); });
    CHECK(code == dstealth::err::CrcMismatch);
    CHECK(message.find("resources.arsc") != std::string::npos);
  }
  SECTION("encrypted entries are refused") {
    Bytes b = fixture("fixture.apk");
    b[eocd_cd_offset(b) + 8] |= 0x01;  // central flags, low byte
    CHECK(code_of([&] { read_archive(b); }) == dstealth::err::BadArchive);
  }
  SECTION("unsupported compression method") {
    Bytes b = fixture("fixture.apk");
    b[eocd_cd_offset(b) + 10] = 12;  // central method, low byte
    auto [code, message] = error_of([&] { read_archive(b); });
    CHECK(code == dstealth::err::UnsupportedMethod);
    CHECK(message.find("12") != std::string::npos);
  }
  SECTION("zip64 marker in the end record") {
    Bytes b = fixture("fixture.apk");
    for (std::size_t i = 8; i < 12; ++i)  // per-disk and total entry counts
      b[b.size() - 22 + i] = 0xFF;
    CHECK(code_of([&] { read_archive(b); }) == dstealth::err::BadArchive);
  }
}

TEST_CASE("replace_entry updates data and checksum in place") {
  ArchiveModel m = read_archive(fixture("fixture.apk"));

  SECTION("new payload") {
    Bytes icon{1, 2, 3, 4};
    ArchiveModel out =
        replace_entry(m, "res/mipmap-mdpi/ic_launcher.png", icon);
    const Entry* e = out.find("res/mipmap-mdpi/ic_launcher.png");
    REQUIRE(e);
    CHECK(e->data == icon);
    CHECK(e->crc == refcrypto::crc32(icon));
    // Method and position unchanged.
    CHECK(e->method == Method::Stored);
    for (std::size_t i = 0; i < m.entries.size(); ++i)
      CHECK(m.entries[i].path == out.entries[i].path);
  }
  SECTION("identity replacement") {
    Bytes same = m.find("classes.dex")->data;
    ArchiveModel out = replace_entry(m, "classes.dex", same);
    CHECK(write_archive(out) == write_archive(m));
  }
  SECTION("missing path") {
    CHECK(code_of([&] { replace_entry(m, "nonexistent.png", {}); }) ==
          dstealth::err::EntryNotFound);
  }
}

TEST_CASE("write then read is the identity on models") {
  ArchiveModel m = read_archive(fixture("fixture.apk"));
  ArchiveModel back = read_archive(write_archive(m));
  REQUIRE(back.entries.size() == m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CAPTURE(m.entries[i].path);
    CHECK(back.entries[i].path == m.entries[i].path);
    CHECK(back.entries[i].method == m.entries[i].method);
    CHECK(back.entries[i].crc == m.entries[i].crc);
    CHECK(back.entries[i].data == m.entries[i].data);
  }
  CHECK(back.comment == m.comment);
}

TEST_CASE("stored-only archives have a computable exact size") {
  ArchiveModel m;
  auto add = [&](std::string path, Bytes data) {
    Entry e;
    e.path = std::move(path);
    e.method = Method::Stored;
    e.data = std::move(data);
    e.crc = refcrypto::crc32(e.data);
    m.entries.push_back(std::move(e));
  };
  add("a.bin", Bytes(100, 0xAA));
  add("dir/b.bin", Bytes(1, 0x01));
  add("empty", {});

  // Per entry: 30-byte local header + name + extra + data, then a 46-byte
  // central record + name; one 22-byte end record (no comment).
  std::size_t expected = 22;
  for (const Entry& e : m.entries)
    expected += 30 + 46 + 2 * e.path.size() + e.extra_len + e.data.size();
  CHECK(write_archive(m).size() == expected);
}

TEST_CASE("archive comments survive a roundtrip") {
  ArchiveModel m;
  m.comment = "hello";
  Entry e;
  e.path = "x";
  e.data = {1};
  e.crc = refcrypto::crc32(e.data);
  m.entries.push_back(e);
  CHECK(read_archive(write_archive(m)).comment == "hello");
}

TEST_CASE("align_archive repairs the misaligned fixture") {
  Bytes misaligned = fixture("fixture_misaligned.apk");
  REQUIRE_FALSE(check_alignment(misaligned).ok);

  Bytes aligned = align_archive(misaligned);
  CHECK(check_alignment(aligned).ok);

  SECTION("payloads are preserved") {
    ArchiveModel before = read_archive(misaligned);
    ArchiveModel after = read_archive(aligned);
    REQUIRE(after.entries.size() == before.entries.size());
    for (std::size_t i = 0; i < before.entries.size(); ++i) {
      CHECK(after.entries[i].path == before.entries[i].path);
      CHECK(after.entries[i].method == before.entries[i].method);
      CHECK(after.entries[i].data == before.entries[i].data);
    }
  }
  SECTION("alignment is idempotent") {
    CHECK(align_archive(aligned) == aligned);
  }
  SECTION("an aligned archive stays aligned") {
    Bytes b = fixture("fixture.apk");
    CHECK(check_alignment(b).ok);
    CHECK(check_alignment(align_archive(b)).ok);
  }
}

TEST_CASE("empty archive handling") {
  Bytes b = write_archive(ArchiveModel{});
  CHECK(b.size() == 22);
  CHECK(read_archive(b).entries.empty());
  CHECK(check_alignment(b).ok);
  CHECK(align_archive(b) == b);
}

TEST_CASE("archives with zero stored entries are untouched by alignment") {
  ArchiveModel m;
  Entry e;
  e.path = "deflated.txt";
  e.method = Method::Deflated;
  e.data = Bytes(300, 'x');
  e.crc = refcrypto::crc32(e.data);
  m.entries.push_back(e);
  Bytes b = write_archive(m);
  Bytes a = align_archive(b);
  CHECK(read_archive(a).entries[0].data == e.data);
  CHECK(a == b);
}
