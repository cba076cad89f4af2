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

// Archive-manifest (v1) signing: SHA-256 digest manifest, signature file,
// and a detached DER CMS SignedData block, all under META-INF/. The text
// formats are bit-exact (CRLF, 72-byte lines, continuation lines) so
// reference verifiers accept the output.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <openssl/bio.h>
#include <openssl/cms.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/sha.h>
#include <openssl/x509.h>

#include "dstealth/apkzip.hpp"
#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"

namespace dstealth::signer {

struct SigningMaterial {
  std::shared_ptr<EVP_PKEY> key;
  std::shared_ptr<X509> cert;
  std::string alias = "CERT";
};

// Loads PEM key + certificate and checks they belong together.
inline SigningMaterial load_material(const std::string& key_pem,
                                     const std::string& cert_pem,
                                     std::string alias = "CERT") {
  BIO* kb = BIO_new_mem_buf(key_pem.data(), int(key_pem.size()));
  EVP_PKEY* key = PEM_read_bio_PrivateKey(kb, nullptr, nullptr, nullptr);
  BIO_free(kb);
  if (!key) fail(err::BadKey, "cannot parse the private key PEM");

  BIO* cb = BIO_new_mem_buf(cert_pem.data(), int(cert_pem.size()));
  X509* cert = PEM_read_bio_X509(cb, nullptr, nullptr, nullptr);
  BIO_free(cb);
  if (!cert) {
    EVP_PKEY_free(key);
    fail(err::BadKey, "cannot parse the certificate PEM");
  }

  SigningMaterial m{{key, EVP_PKEY_free}, {cert, X509_free}, std::move(alias)};
  if (X509_check_private_key(m.cert.get(), m.key.get()) != 1)
    fail(err::KeyMismatch,
         "certificate public key does not match the private key");
  return m;
}

namespace detail {

inline std::string base64(const std::uint8_t* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                data, int(n));
  out.resize(std::size_t(written));
  return out;
}

inline std::string sha256_b64(const Bytes& data) {
  std::uint8_t digest[SHA256_DIGEST_LENGTH];
  SHA256(data.empty() ? reinterpret_cast<const std::uint8_t*>("") : data.data(),
         data.size(), digest);
  return base64(digest, sizeof digest);
}

inline std::string sha256_b64(std::string_view text) {
  Bytes b(text.begin(), text.end());
  return sha256_b64(b);
}

// Emits `line` wrapped to the 72-byte limit: continuations start with a
// single space, every physical line ends with CRLF.
inline void wrap72(std::string& out, std::string_view line) {
  std::size_t i = 0;
  bool first = true;
  do {
    std::size_t limit = first ? 72 : 71;
    std::size_t take = std::min(limit, line.size() - i);
    if (!first) out += ' ';
    out.append(line.data() + i, take);
    out += "\r\n";
    i += take;
    first = false;
  } while (i < line.size());
}

inline bool ieq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower((unsigned char)a[i]) != std::tolower((unsigned char)b[i]))
      return false;
  return true;
}

// Direct children of META-INF/ that belong to a v1 signature set.
inline bool is_signing_entry(std::string_view path) {
  if (path.rfind("META-INF/", 0) != 0) return false;
  std::string_view rest = path.substr(9);
  if (rest.find('/') != std::string_view::npos) return false;
  if (ieq(rest, "MANIFEST.MF")) return true;
  auto has_suffix = [&](std::string_view sfx) {
    return rest.size() > sfx.size() &&
           ieq(rest.substr(rest.size() - sfx.size()), sfx);
  };
  return has_suffix(".SF") || has_suffix(".RSA") || has_suffix(".DSA") ||
         has_suffix(".EC");
}

}  // namespace detail

struct ManifestSection {
  std::string name;
  std::string digest_b64;  // SHA-256 of the entry's decompressed bytes
};

struct DigestManifest {
  std::vector<ManifestSection> sections;

  std::string text() const {
    std::string out;
    detail::wrap72(out, "Manifest-Version: 1.0");
    detail::wrap72(out, "Created-By: 1.0 (dstealth)");
    out += "\r\n";
    for (const auto& s : sections) {
      detail::wrap72(out, "Name: " + s.name);
      detail::wrap72(out, "SHA-256-Digest: " + s.digest_b64);
      out += "\r\n";
    }
    return out;
  }
};

// One digest section per entry outside META-INF/, in archive order.
inline DigestManifest compute_entry_digests(const apkzip::ArchiveModel& m) {
  DigestManifest manifest;
  for (const auto& e : m.entries) {
    if (e.path.rfind("META-INF/", 0) == 0) continue;
    manifest.sections.push_back({e.path, detail::sha256_b64(e.data)});
  }
  return manifest;
}

namespace detail {

inline std::string build_sf(const std::string& manifest_text) {
  // Per-section digests cover each section's exact bytes: the Name: line
  // through the blank line that closes the section, inclusive.
  std::string out;
  wrap72(out, "Signature-Version: 1.0");
  wrap72(out, "SHA-256-Digest-Manifest: " + sha256_b64(manifest_text));
  out += "\r\n";

  std::size_t pos = manifest_text.find("\r\n\r\n");
  if (pos == std::string::npos) return out;
  pos += 4;  // first named section
  while (pos < manifest_text.size()) {
    std::size_t end = manifest_text.find("\r\n\r\n", pos);
    std::size_t sec_end =
        end == std::string::npos ? manifest_text.size() : end + 4;
    std::string_view section(manifest_text.data() + pos, sec_end - pos);

    // Reassemble the logical Name: line (may be wrapped).
    std::string name_line;
    std::size_t lp = 0;
    bool first = true;
    while (lp < section.size()) {
      std::size_t le = section.find("\r\n", lp);
      if (le == std::string_view::npos) le = section.size();
      std::string_view phys = section.substr(lp, le - lp);
      if (first) {
        name_line.assign(phys);
        first = false;
      } else if (!phys.empty() && phys[0] == ' ') {
        name_line.append(phys.substr(1));
      } else {
        break;
      }
      lp = le + 2;
    }
    if (name_line.rfind("Name: ", 0) == 0) {
      wrap72(out, name_line);
      wrap72(out, "SHA-256-Digest: " + sha256_b64(section));
      out += "\r\n";
    }
    pos = sec_end;
  }
  return out;
}

inline Bytes cms_sign_detached(const Bytes& content,
                               const SigningMaterial& mat) {
  BIO* in = BIO_new_mem_buf(content.data(), int(content.size()));
  if (!in) fail(err::Io, "bio alloc failed");
  unsigned int flags = CMS_DETACHED | CMS_BINARY | CMS_PARTIAL;
  CMS_ContentInfo* cms = CMS_sign(nullptr, nullptr, nullptr, nullptr, flags);
  if (!cms) {
    BIO_free(in);
    fail(err::Io, "cms alloc failed");
  }
  if (!CMS_add1_signer(cms, mat.cert.get(), mat.key.get(), EVP_sha256(),
                       CMS_NOATTR | CMS_NOSMIMECAP)) {
    CMS_ContentInfo_free(cms);
    BIO_free(in);
    fail(err::KeyMismatch, "signer could not be added (key/cert mismatch?)");
  }
  if (CMS_final(cms, in, nullptr, flags) != 1) {
    CMS_ContentInfo_free(cms);
    BIO_free(in);
    fail(err::Io, "cms finalization failed");
  }
  BIO_free(in);

  unsigned char* der = nullptr;
  int len = i2d_CMS_ContentInfo(cms, &der);
  CMS_ContentInfo_free(cms);
  if (len <= 0) fail(err::Io, "cms encoding failed");
  Bytes out(der, der + len);
  OPENSSL_free(der);
  return out;
}

inline bool cms_verify_detached(const Bytes& block, const Bytes& content) {
  const unsigned char* p = block.data();
  CMS_ContentInfo* cms = d2i_CMS_ContentInfo(nullptr, &p, long(block.size()));
  if (!cms) return false;
  BIO* in = BIO_new_mem_buf(content.data(), int(content.size()));
  int ok = CMS_verify(cms, nullptr, nullptr, in, nullptr,
                      CMS_BINARY | CMS_NO_SIGNER_CERT_VERIFY);
  BIO_free(in);
  CMS_ContentInfo_free(cms);
  return ok == 1;
}

// Minimal jar-manifest parser: logical lines (continuations folded), main
// attributes, and named sections.
struct ParsedManifest {
  std::vector<std::pair<std::string, std::string>> main;
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
  };
  std::vector<Section> sections;

  static std::string find_attr(
      const std::vector<std::pair<std::string, std::string>>& attrs,
      std::string_view key) {
    for (const auto& [k, v] : attrs)
      if (ieq(k, key)) return v;
    return {};
  }
};

inline ParsedManifest parse_manifest(const Bytes& raw) {
  std::string_view text(reinterpret_cast<const char*>(raw.data()), raw.size());
  ParsedManifest pm;

  std::size_t pos = 0;
  bool in_main = true;
  ParsedManifest::Section current;
  std::string pending;  // logical line being assembled

  auto flush_line = [&](std::vector<std::pair<std::string, std::string>>& dst) {
    if (pending.empty()) return;
    std::size_t c = pending.find(": ");
    if (c != std::string::npos)
      dst.emplace_back(pending.substr(0, c), pending.substr(c + 2));
    pending.clear();
  };

  while (pos <= text.size()) {
    std::size_t le = text.find('\n', pos);
    std::string_view phys;
    std::size_t next;
    if (le == std::string_view::npos) {
      phys = text.substr(pos);
      next = text.size() + 1;
    } else {
      phys = text.substr(pos, le - pos);
      next = le + 1;
    }
    if (!phys.empty() && phys.back() == '\r')
      phys = phys.substr(0, phys.size() - 1);

    if (phys.empty()) {  // blank line: section boundary
      if (in_main) {
        flush_line(pm.main);
        in_main = false;
      } else {
        flush_line(current.attrs);
        if (!current.attrs.empty()) {
          current.name = ParsedManifest::find_attr(current.attrs, "Name");
          pm.sections.push_back(std::move(current));
          current = {};
        }
      }
      if (le == std::string_view::npos) break;
      pos = next;
      continue;
    }

    auto& dst = in_main ? pm.main : current.attrs;
    if (phys[0] == ' ') {
      pending.append(phys.substr(1));
    } else {
      flush_line(dst);
      pending.assign(phys);
    }
    if (le == std::string_view::npos) {
      // file ended mid-section
      flush_line(dst);
      if (!in_main && !current.attrs.empty()) {
        current.name = ParsedManifest::find_attr(current.attrs, "Name");
        pm.sections.push_back(std::move(current));
      }
      break;
    }
    pos = next;
  }
  return pm;
}

}  // namespace detail

// Strips any existing v1 signature set, then appends MANIFEST.MF,
// <alias>.SF and <alias>.RSA (all deflated).
inline apkzip::ArchiveModel sign_archive(apkzip::ArchiveModel model,
                                         const SigningMaterial& material) {
  if (!material.key || !material.cert ||
      X509_check_private_key(material.cert.get(), material.key.get()) != 1)
    fail(err::KeyMismatch,
         "certificate public key does not match the private key");

  std::erase_if(model.entries, [](const apkzip::Entry& e) {
    return detail::is_signing_entry(e.path);
  });

  std::string mf = compute_entry_digests(model).text();
  std::string sf = detail::build_sf(mf);
  Bytes sf_bytes(sf.begin(), sf.end());
  Bytes rsa = detail::cms_sign_detached(sf_bytes, material);

  auto append = [&](std::string path, Bytes data) {
    apkzip::Entry e;
    e.path = std::move(path);
    e.method = apkzip::Method::Deflated;
    e.data = std::move(data);
    e.crc = apkzip::detail::crc_of(e.data);
    model.entries.push_back(std::move(e));
  };
  append("META-INF/MANIFEST.MF", Bytes(mf.begin(), mf.end()));
  append("META-INF/" + material.alias + ".SF", std::move(sf_bytes));
  append("META-INF/" + material.alias + ".RSA", std::move(rsa));
  return model;
}

struct VerifyFailure {
  std::string entry;
  std::string reason;
};

struct VerifyReport {
  bool ok = true;
  std::vector<VerifyFailure> failures;
};

// Four checks: the CMS signature over the .SF, the .SF's whole-manifest
// digest, every per-entry manifest digest, and coverage of every
// non-META-INF entry.
inline VerifyReport verify_v1(const Bytes& archive_bytes) {
  apkzip::ArchiveModel m = apkzip::read_archive(archive_bytes);

  const apkzip::Entry* manifest = m.find("META-INF/MANIFEST.MF");
  const apkzip::Entry* sf = nullptr;
  const apkzip::Entry* block = nullptr;
  for (const auto& e : m.entries) {
    if (!detail::is_signing_entry(e.path)) continue;
    std::string_view rest = std::string_view(e.path).substr(9);
    if (rest.size() > 3 &&
        detail::ieq(rest.substr(rest.size() - 3), ".SF") && !sf) {
      sf = &e;
      std::string stem = e.path.substr(0, e.path.size() - 3);
      for (const char* ext : {".RSA", ".DSA", ".EC"})
        if (const auto* b = m.find(stem + ext)) {
          block = b;
          break;
        }
    }
  }
  if (!manifest || !sf || !block)
    fail(err::NotSigned, "archive carries no v1 signature set");

  VerifyReport report;
  auto add = [&](std::string entry, std::string reason) {
    report.failures.push_back({std::move(entry), std::move(reason)});
  };

  if (!detail::cms_verify_detached(block->data, sf->data))
    add(sf->path, "SignatureInvalid");

  detail::ParsedManifest sf_pm = detail::parse_manifest(sf->data);
  std::string declared =
      detail::ParsedManifest::find_attr(sf_pm.main, "SHA-256-Digest-Manifest");
  if (declared.empty() || declared != detail::sha256_b64(manifest->data))
    add(manifest->path, "ManifestDigestMismatch");

  detail::ParsedManifest mf_pm = detail::parse_manifest(manifest->data);
  for (const auto& sec : mf_pm.sections) {
    if (sec.name.empty()) continue;
    std::string digest =
        detail::ParsedManifest::find_attr(sec.attrs, "SHA-256-Digest");
    const apkzip::Entry* e = m.find(sec.name);
    if (!e) {
      add(sec.name, "EntryMissing");
      continue;
    }
    if (digest.empty() || digest != detail::sha256_b64(e->data))
      add(sec.name, "DigestMismatch");
  }

  for (const auto& e : m.entries) {
    if (e.path.rfind("META-INF/", 0) == 0) continue;
    bool covered = false;
    for (const auto& sec : mf_pm.sections)
      if (sec.name == e.path) {
        covered = true;
        break;
      }
    if (!covered) add(e.path, "entry not covered");
  }

  report.ok = report.failures.empty();
  return report;
}

}  // namespace dstealth::signer
