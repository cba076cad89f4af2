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

// Per-file chunked authenticated encryption. A file becomes:
//
//   "DSF1" | 0x01 | nonce_prefix[7] | plain_len u64le      (20-byte header)
//   chunk_0 | chunk_1 | ... | chunk_last
//
// where chunk_i seals up to 4096 plaintext bytes with ChaCha20-Poly1305,
// nonce = nonce_prefix || u32le(i) || final_flag and AAD = header bytes ||
// u32le(i) || final_flag (final_flag 0x01 only on the last chunk). The
// index-and-flag binding rejects reordering, truncation, extension, and
// cross-file splicing. Zero-length files carry one empty final chunk.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <sodium.h>

#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"

namespace dstealth::crypto {

inline constexpr std::size_t kChunkSize = 4096;
inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::size_t kSaltBytes = 16;

using Key = std::array<std::uint8_t, kKeyBytes>;

inline void init() {
  static const int rc = sodium_init();
  if (rc < 0) fail(err::Io, "crypto library initialization failed");
}

inline std::uint64_t chunk_count(std::uint64_t plain_len) {
  return plain_len == 0 ? 1 : (plain_len + kChunkSize - 1) / kChunkSize;
}

inline std::uint64_t ciphertext_length(std::uint64_t plain_len) {
  return kHeaderBytes + plain_len + kTagBytes * chunk_count(plain_len);
}

// ---------------------------------------------------------------------------
// KDF
// ---------------------------------------------------------------------------

struct KdfParams {
  std::uint32_t t = 3;          // passes
  std::uint32_t m_kib = 65536;  // memory, KiB
  std::uint32_t p = 1;          // lanes; the Argon2id backend supports 1 only
};

inline void check_kdf_params(const KdfParams& params) {
  if (params.p != 1)
    fail(err::BadKdfParams, "parallelism must be 1");
  if (params.t < 1) fail(err::BadKdfParams, "at least one pass required");
  if (params.m_kib < 8)
    fail(err::BadKdfParams, "memory must be at least 8 KiB");
}

inline void check_pin(const std::string& pin) {
  if (pin.size() < 4 || pin.size() > 16)
    fail(err::BadPinFormat, "pin must be 4-16 digits");
  for (char c : pin)
    if (c < '0' || c > '9')
      fail(err::BadPinFormat, "pin must contain only decimal digits");
}

inline Key derive_key(const std::string& pin, const Bytes& salt,
                      const KdfParams& params) {
  init();
  check_pin(pin);
  check_kdf_params(params);
  if (salt.size() != kSaltBytes) fail(err::BadHeader, "salt must be 16 bytes");
  Key key;
  if (crypto_pwhash(key.data(), key.size(), pin.data(), pin.size(),
                    salt.data(), params.t,
                    std::size_t(params.m_kib) * 1024,
                    crypto_pwhash_ALG_ARGON2ID13) != 0)
    fail(err::Io, "key derivation ran out of memory");
  return key;
}

// ---------------------------------------------------------------------------
// Raw AEAD (building block; also used for the vault's key check)
// ---------------------------------------------------------------------------

inline Bytes seal_raw(const Key& key,
                      const std::array<std::uint8_t, kNonceBytes>& nonce,
                      const Bytes& aad, const Bytes& plain) {
  init();
  Bytes out(plain.size() + kTagBytes);
  unsigned long long outlen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(
      out.data(), &outlen, plain.data(), plain.size(), aad.data(), aad.size(),
      nullptr, nonce.data(), key.data());
  out.resize(std::size_t(outlen));
  return out;
}

inline std::optional<Bytes> open_raw(
    const Key& key, const std::array<std::uint8_t, kNonceBytes>& nonce,
    const Bytes& aad, const Bytes& sealed) {
  init();
  if (sealed.size() < kTagBytes) return std::nullopt;
  Bytes out(sealed.size() - kTagBytes);
  unsigned long long outlen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(
          out.empty() ? nullptr : out.data(), &outlen, nullptr, sealed.data(),
          sealed.size(), aad.data(), aad.size(), nonce.data(),
          key.data()) != 0)
    return std::nullopt;
  out.resize(std::size_t(outlen));
  return out;
}

// ---------------------------------------------------------------------------
// File header
// ---------------------------------------------------------------------------

struct FileHeader {
  std::array<std::uint8_t, 7> nonce_prefix{};
  std::uint64_t plain_len = 0;

  static FileHeader fresh(std::uint64_t plain_len) {
    init();
    FileHeader h;
    h.plain_len = plain_len;
    randombytes_buf(h.nonce_prefix.data(), h.nonce_prefix.size());
    return h;
  }

  Bytes bytes() const {
    ByteWriter w;
    w.raw("DSF1");
    w.u8(1);
    w.raw(nonce_prefix.data(), nonce_prefix.size());
    w.u64(plain_len);
    return std::move(w.buf());
  }

  static FileHeader parse(const Bytes& raw) {
    if (raw.size() != kHeaderBytes) fail(err::BadHeader, "header truncated");
    if (raw[0] != 'D' || raw[1] != 'S' || raw[2] != 'F' || raw[3] != '1')
      fail(err::BadHeader, "bad magic");
    if (raw[4] != 1) fail(err::BadHeader, "unsupported version");
    FileHeader h;
    for (int i = 0; i < 7; ++i) h.nonce_prefix[std::size_t(i)] = raw[5 + i];
    for (int i = 0; i < 8; ++i)
      h.plain_len |= std::uint64_t(raw[12 + i]) << (8 * i);
    return h;
  }
};

namespace detail {

inline std::array<std::uint8_t, kNonceBytes> chunk_nonce(
    const FileHeader& h, std::uint32_t index, bool final_chunk) {
  std::array<std::uint8_t, kNonceBytes> nonce{};
  for (std::size_t i = 0; i < 7; ++i) nonce[i] = h.nonce_prefix[i];
  for (int i = 0; i < 4; ++i)
    nonce[7 + std::size_t(i)] = std::uint8_t(index >> (8 * i));
  nonce[11] = final_chunk ? 0x01 : 0x00;
  return nonce;
}

inline Bytes chunk_aad(const Bytes& header_bytes, std::uint32_t index,
                       bool final_chunk) {
  Bytes aad = header_bytes;
  for (int i = 0; i < 4; ++i) aad.push_back(std::uint8_t(index >> (8 * i)));
  aad.push_back(final_chunk ? 0x01 : 0x00);
  return aad;
}

}  // namespace detail

// Called after each chunk with cumulative plaintext bytes processed.
using ProgressFn = std::function<void(std::uint64_t)>;

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

// Reads exactly header.plain_len bytes from `in` and writes header plus
// sealed chunks to `out`.
inline void encrypt_stream(const Key& key, const FileHeader& header,
                           std::istream& in, std::ostream& out,
                           const ProgressFn& progress = {}) {
  init();
  Bytes header_bytes = header.bytes();
  out.write(reinterpret_cast<const char*>(header_bytes.data()),
            std::streamsize(header_bytes.size()));
  if (!out) fail(err::Io, "write failed at offset 0");

  const std::uint64_t chunks = chunk_count(header.plain_len);
  std::uint64_t done = 0;
  Bytes plain(kChunkSize);
  for (std::uint64_t i = 0; i < chunks; ++i) {
    const bool last = i + 1 == chunks;
    const std::size_t n = std::size_t(
        last ? header.plain_len - kChunkSize * i : kChunkSize);
    plain.resize(n);
    if (n > 0) {
      in.read(reinterpret_cast<char*>(plain.data()), std::streamsize(n));
      if (std::size_t(in.gcount()) != n)
        fail(err::Io, "short read at offset " + std::to_string(done));
    }
    Bytes sealed =
        seal_raw(key, detail::chunk_nonce(header, std::uint32_t(i), last),
                 detail::chunk_aad(header_bytes, std::uint32_t(i), last),
                 plain);
    out.write(reinterpret_cast<const char*>(sealed.data()),
              std::streamsize(sealed.size()));
    if (!out) fail(err::Io, "write failed at offset " + std::to_string(done));
    done += n;
    if (progress) progress(done);
  }
}

// Inverse of encrypt_stream; authenticates every chunk before emitting it
// and rejects anything after the final-flag chunk.
inline void decrypt_stream(const Key& key, std::istream& in,
                           std::ostream& out,
                           const ProgressFn& progress = {}) {
  init();
  Bytes header_raw(kHeaderBytes);
  in.read(reinterpret_cast<char*>(header_raw.data()), kHeaderBytes);
  if (std::size_t(in.gcount()) != kHeaderBytes)
    fail(err::BadHeader, "header truncated");
  FileHeader header = FileHeader::parse(header_raw);
  Bytes header_bytes = header.bytes();

  const std::uint64_t chunks = chunk_count(header.plain_len);
  std::uint64_t done = 0;
  Bytes sealed;
  for (std::uint64_t i = 0; i < chunks; ++i) {
    const bool last = i + 1 == chunks;
    const std::size_t n = std::size_t(
        last ? header.plain_len - kChunkSize * i : kChunkSize);
    sealed.resize(n + kTagBytes);
    in.read(reinterpret_cast<char*>(sealed.data()),
            std::streamsize(sealed.size()));
    if (std::size_t(in.gcount()) != sealed.size())
      fail(err::TruncatedStream,
           "stream ends before the final chunk (chunk " + std::to_string(i) +
               ")");
    auto plain =
        open_raw(key, detail::chunk_nonce(header, std::uint32_t(i), last),
                 detail::chunk_aad(header_bytes, std::uint32_t(i), last),
                 sealed);
    if (!plain)
      fail(err::AuthFailed,
           "chunk " + std::to_string(i) + " fails authentication");
    if (!plain->empty()) {
      out.write(reinterpret_cast<const char*>(plain->data()),
                std::streamsize(plain->size()));
      if (!out)
        fail(err::Io, "write failed at offset " + std::to_string(done));
    }
    done += n;
    if (progress) progress(done);
  }
  if (in.peek() != std::istream::traits_type::eof())
    fail(err::TrailingData, "data after the final chunk");
}

// ---------------------------------------------------------------------------
// In-memory convenience wrappers
// ---------------------------------------------------------------------------

inline Bytes encrypt_bytes(const Key& key, const Bytes& plain) {
  std::istringstream in(std::string(plain.begin(), plain.end()),
                        std::ios::binary);
  std::ostringstream out(std::ios::binary);
  encrypt_stream(key, FileHeader::fresh(plain.size()), in, out);
  const std::string& s = out.str();
  return Bytes(s.begin(), s.end());
}

inline Bytes decrypt_bytes(const Key& key, const Bytes& cipher) {
  std::istringstream in(std::string(cipher.begin(), cipher.end()),
                        std::ios::binary);
  std::ostringstream out(std::ios::binary);
  decrypt_stream(key, in, out);
  const std::string& s = out.str();
  return Bytes(s.begin(), s.end());
}

}  // namespace dstealth::crypto
