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

// The encrypted file vault: a directory holding vault.meta (KDF salt and
// parameters plus a key check), an encrypted name index, individually
// encrypted files under locked/, and plaintext copies under open/. All
// lock/unlock work flows through a FIFO queue drained by one worker
// thread; cancel empties the pending queue but lets the in-flight task
// finish, so no file is ever left half-written.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "dstealth/bytes.hpp"
#include "dstealth/crypto.hpp"
#include "dstealth/error.hpp"

namespace dstealth::vault {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Metadata
// ---------------------------------------------------------------------------

struct VaultMeta {
  Bytes salt;  // 16 bytes
  crypto::KdfParams params;
  Bytes key_check;  // 32 bytes: AEAD seal of 16 zero bytes (see below)

  Bytes bytes() const {
    ByteWriter w;
    w.raw("DSV1");
    w.u8(1);  // version
    w.u8(1);  // kdf id (Argon2id)
    w.raw(salt);
    w.u32(params.t);
    w.u32(params.m_kib);
    w.u32(params.p);
    w.raw(key_check);
    return std::move(w.buf());
  }

  static VaultMeta parse(const Bytes& raw) {
    if (raw.size() != 66) fail(err::BadHeader, "vault metadata truncated");
    ByteReader r(raw, err::BadHeader);
    Bytes magic = r.bytes(4);
    if (magic != Bytes{'D', 'S', 'V', '1'})
      fail(err::BadHeader, "bad vault magic");
    if (r.u8() != 1) fail(err::BadHeader, "unsupported vault version");
    if (r.u8() != 1) fail(err::BadHeader, "unsupported kdf id");
    VaultMeta m;
    m.salt = r.bytes(16);
    m.params.t = r.u32();
    m.params.m_kib = r.u32();
    m.params.p = r.u32();
    m.key_check = r.bytes(32);
    return m;
  }
};

namespace detail {

inline constexpr char kCheckAad[] = "DSV1-check";

inline Bytes key_check_value(const crypto::Key& key) {
  std::array<std::uint8_t, crypto::kNonceBytes> nonce{};  // all zero
  Bytes aad(kCheckAad, kCheckAad + sizeof kCheckAad - 1);
  return crypto::seal_raw(key, nonce, aad, Bytes(16, 0));
}

inline bool key_check_ok(const crypto::Key& key, const Bytes& check) {
  std::array<std::uint8_t, crypto::kNonceBytes> nonce{};
  Bytes aad(kCheckAad, kCheckAad + sizeof kCheckAad - 1);
  auto opened = crypto::open_raw(key, nonce, aad, check);
  return opened && *opened == Bytes(16, 0);
}

inline void fsync_path(const fs::path& p) {
  int fd = ::open(p.c_str(), O_RDONLY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

inline void atomic_write(const fs::path& path, const Bytes& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp.string(), data);
  fsync_path(tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(err::Io, "cannot replace " + path.string());
}

inline std::string random_stored_name() {
  std::uint8_t raw[8];
  randombytes_buf(raw, sizeof raw);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : raw) {
    out += hex[b >> 4];
    out += hex[b & 0xF];
  }
  return out + ".dsf";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entries and the queue
// ---------------------------------------------------------------------------

enum class EntryState { Locked, Unlocked, Processing };

inline const char* to_string(EntryState s) {
  switch (s) {
    case EntryState::Locked: return "locked";
    case EntryState::Unlocked: return "unlocked";
    case EntryState::Processing: return "processing";
  }
  return "?";
}

struct VaultEntry {
  std::string original_name;
  std::string stored_name;
  std::uint64_t size_plain = 0;
  EntryState state = EntryState::Unlocked;
};

enum class Direction { Lock, Unlock };

inline const char* to_string(Direction d) {
  return d == Direction::Lock ? "lock" : "unlock";
}

struct StatusRow {
  std::string original_name;
  EntryState state = EntryState::Locked;
  std::optional<Direction> pending;  // queued direction, if any
};

// ---------------------------------------------------------------------------
// Vault
// ---------------------------------------------------------------------------

inline VaultMeta init_vault(const fs::path& dir, const std::string& pin,
                            crypto::KdfParams params = {}) {
  crypto::init();
  crypto::check_pin(pin);
  crypto::check_kdf_params(params);
  if (fs::exists(dir / "vault.meta"))
    fail(err::VaultExists, "a vault already exists at " + dir.string());
  if (fs::exists(dir) && !fs::is_empty(dir))
    fail(err::VaultExists, "directory is not empty: " + dir.string());

  fs::create_directories(dir / "locked");
  fs::create_directories(dir / "open");

  VaultMeta meta;
  meta.salt.resize(crypto::kSaltBytes);
  randombytes_buf(meta.salt.data(), meta.salt.size());
  meta.params = params;
  crypto::Key key = crypto::derive_key(pin, meta.salt, params);
  meta.key_check = detail::key_check_value(key);
  detail::atomic_write(dir / "vault.meta", meta.bytes());
  detail::atomic_write(dir / "index.dsi", crypto::encrypt_bytes(key, {}));
  return meta;
}

class Vault {
 public:
  struct Options {
    // Test and UI hooks; both run on the worker thread, outside the vault
    // mutex. on_chunk fires per processed chunk with cumulative plaintext
    // bytes; on_task_complete fires after an entry reaches its final state.
    std::function<void(const std::string&, std::uint64_t)> on_chunk;
    std::function<void(const std::string&, Direction)> on_task_complete;
  };

  static Vault open(const fs::path& dir, const std::string& pin,
                    Options opts = {}) {
    crypto::init();
    if (!fs::exists(dir / "vault.meta"))
      fail(err::NoVault, "no vault at " + dir.string());
    VaultMeta meta = VaultMeta::parse(read_file((dir / "vault.meta").string()));
    crypto::Key key = crypto::derive_key(pin, meta.salt, meta.params);
    if (!detail::key_check_ok(key, meta.key_check))
      fail(err::PinRejected, "pin does not open this vault");
    return Vault(dir, key, std::move(meta), std::move(opts));
  }

  Vault(Vault&&) = delete;
  Vault& operator=(Vault&&) = delete;

  ~Vault() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_work_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  // Enqueues encryption of an external file into the vault. The entry is
  // visible immediately (state Unlocked, pending Lock); the source file is
  // removed only after the ciphertext is safely in place.
  VaultEntry lock_file(const fs::path& source) {
    std::string name = source.filename().string();
    if (name.empty() ||
        name.find('\t') != std::string::npos ||
        name.find('\n') != std::string::npos)
      fail(err::Io, "unusable source file name");
    if (!fs::exists(source))
      fail(err::SourceMissing, "no such file: " + source.string());

    std::lock_guard lk(mu_);
    if (find_entry(name))
      fail(err::DuplicateName, "an entry named " + name + " already exists");
    VaultEntry e;
    e.original_name = name;
    e.stored_name = fresh_stored_name();
    e.size_plain = fs::file_size(source);
    e.state = EntryState::Unlocked;
    entries_.push_back(e);
    pending_.push_back({Direction::Lock, name, source, /*new_entry=*/true});
    cv_work_.notify_one();
    return e;
  }

  VaultEntry unlock_file(const std::string& original_name) {
    std::lock_guard lk(mu_);
    VaultEntry* e = find_entry(original_name);
    if (!e) fail(err::EntryNotFound, "no entry named " + original_name);
    if (e->state != EntryState::Locked)
      fail(err::NotLocked, original_name + " is not locked");
    pending_.push_back({Direction::Unlock, original_name, {}, false});
    cv_work_.notify_one();
    return *e;
  }

  // One re-lock task per Unlocked entry, in index order. Entries that
  // already have a queued task are left alone.
  std::size_t lock_all() {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const VaultEntry& e : entries_) {
      if (e.state != EntryState::Unlocked) continue;
      bool queued = false;
      for (const Task& t : pending_)
        if (t.original_name == e.original_name) queued = true;
      if (queued) continue;
      pending_.push_back({Direction::Lock, e.original_name,
                          dir_ / "open" / e.original_name, false});
      ++n;
    }
    if (n) cv_work_.notify_one();
    return n;
  }

  // Empties the pending queue; the in-flight task (if any) completes.
  std::size_t cancel() {
    std::lock_guard lk(mu_);
    std::size_t n = pending_.size();
    for (const Task& t : pending_) {
      if (!t.new_entry) continue;
      // The file never entered the vault; forget the provisional entry.
      for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].original_name == t.original_name) {
          entries_.erase(entries_.begin() + long(i));
          break;
        }
    }
    pending_.clear();
    return n;
  }

  std::vector<StatusRow> status() {
    std::lock_guard lk(mu_);
    std::vector<StatusRow> rows;
    for (const VaultEntry& e : entries_) {
      StatusRow row{e.original_name, e.state, std::nullopt};
      for (const Task& t : pending_)
        if (t.original_name == e.original_name) {
          row.pending = t.direction;
          break;
        }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  void destroy_entry(const std::string& original_name) {
    std::lock_guard lk(mu_);
    VaultEntry* e = find_entry(original_name);
    if (!e) fail(err::EntryNotFound, "no entry named " + original_name);
    if (e->state != EntryState::Locked)
      fail(err::NotLocked, original_name + " must be locked first");
    std::erase_if(pending_, [&](const Task& t) {
      return t.original_name == original_name;
    });
    fs::remove(dir_ / "locked" / e->stored_name);
    entries_.erase(entries_.begin() + (e - entries_.data()));
    persist_index();
  }

  // Blocks until the queue is empty and no task is in flight.
  void wait_idle() {
    std::unique_lock lk(mu_);
    cv_idle_.wait(lk, [&] { return pending_.empty() && !current_; });
  }

  // Messages from tasks that failed on the worker thread.
  std::vector<std::string> take_errors() {
    std::lock_guard lk(mu_);
    return std::exchange(errors_, {});
  }

  const fs::path& dir() const { return dir_; }

 private:
  struct Task {
    Direction direction;
    std::string original_name;
    fs::path source;  // for Lock tasks
    bool new_entry = false;
  };

  Vault(fs::path dir, crypto::Key key, VaultMeta meta, Options opts)
      : dir_(std::move(dir)),
        key_(key),
        meta_(std::move(meta)),
        opts_(std::move(opts)) {
    load_index();
    worker_ = std::thread([this] { worker_loop(); });
  }

  VaultEntry* find_entry(const std::string& name) {
    for (auto& e : entries_)
      if (e.original_name == name) return &e;
    return nullptr;
  }

  std::string fresh_stored_name() {
    for (;;) {
      std::string s = detail::random_stored_name();
      bool taken = false;
      for (const auto& e : entries_)
        if (e.stored_name == s) taken = true;
      if (!taken) return s;
    }
  }

  void load_index() {
    Bytes cipher = read_file((dir_ / "index.dsi").string());
    Bytes plain = crypto::decrypt_bytes(key_, cipher);
    std::string text(plain.begin(), plain.end());
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string line = text.substr(pos, eol - pos);
      pos = eol + 1;
      if (line.empty()) continue;
      VaultEntry e;
      std::size_t a = line.find('\t');
      std::size_t b = line.find('\t', a + 1);
      std::size_t c = line.find('\t', b + 1);
      if (a == std::string::npos || b == std::string::npos ||
          c == std::string::npos)
        fail(err::BadHeader, "index record malformed");
      e.original_name = line.substr(0, a);
      e.stored_name = line.substr(a + 1, b - a - 1);
      e.size_plain = std::stoull(line.substr(b + 1, c - b - 1));
      std::string state = line.substr(c + 1);
      if (state == "locked")
        e.state = EntryState::Locked;
      else if (state == "unlocked")
        e.state = EntryState::Unlocked;
      else
        fail(err::BadHeader, "index state malformed");
      entries_.push_back(std::move(e));
    }
  }

  // Caller holds mu_. Processing is transient and never persisted; a crash
  // mid-task leaves the entry in its pre-task state.
  void persist_index() {
    std::string text;
    for (const VaultEntry& e : entries_) {
      EntryState s =
          e.state == EntryState::Processing ? EntryState::Locked : e.state;
      if (e.state == EntryState::Processing && pre_task_state_)
        s = *pre_task_state_;
      text += e.original_name;
      text += '\t';
      text += e.stored_name;
      text += '\t';
      text += std::to_string(e.size_plain);
      text += '\t';
      text += to_string(s);
      text += '\n';
    }
    Bytes plain(text.begin(), text.end());
    detail::atomic_write(dir_ / "index.dsi", crypto::encrypt_bytes(key_, plain));
  }

  void worker_loop() {
    std::unique_lock lk(mu_);
    while (true) {
      cv_work_.wait(lk, [&] { return stop_ || !pending_.empty(); });
      if (stop_) return;
      Task task = pending_.front();
      pending_.pop_front();
      current_ = task;

      VaultEntry* e = find_entry(task.original_name);
      if (!e) {  // destroyed while queued; nothing to do
        current_.reset();
        cv_idle_.notify_all();
        continue;
      }
      pre_task_state_ = e->state;
      e->state = EntryState::Processing;

      lk.unlock();
      std::string failure;
      std::uint64_t new_size = 0;
      try {
        new_size = perform(task);
      } catch (const Error& ex) {
        failure = std::string(ex.code()) + ": " + ex.what();
      } catch (const std::exception& ex) {
        failure = std::string("Io: ") + ex.what();
      }
      lk.lock();

      e = find_entry(task.original_name);
      if (e) {
        if (!failure.empty()) {
          if (task.new_entry) {
            entries_.erase(entries_.begin() + (e - entries_.data()));
            e = nullptr;
          } else {
            e->state = *pre_task_state_;
          }
        } else {
          e->state = task.direction == Direction::Lock ? EntryState::Locked
                                                       : EntryState::Unlocked;
          e->size_plain = new_size;
        }
      }
      pre_task_state_.reset();
      if (!failure.empty())
        errors_.push_back(task.original_name + ": " + failure);
      else
        persist_index();
      current_.reset();
      cv_idle_.notify_all();

      if (failure.empty() && opts_.on_task_complete) {
        lk.unlock();
        opts_.on_task_complete(task.original_name, task.direction);
        lk.lock();
      }
    }
  }

  // Runs on the worker thread with mu_ released. Returns the plaintext
  // size that was processed.
  std::uint64_t perform(const Task& task) {
    VaultEntry snapshot;
    {
      std::lock_guard lk(mu_);
      VaultEntry* e = find_entry(task.original_name);
      if (!e) fail(err::EntryNotFound, "entry vanished");
      snapshot = *e;
    }

    auto progress = [&](std::uint64_t done) {
      if (opts_.on_chunk) opts_.on_chunk(task.original_name, done);
    };

    if (task.direction == Direction::Lock) {
      if (!fs::exists(task.source))
        fail(err::SourceMissing, "source disappeared: " + task.source.string());
      std::uint64_t plain_len = fs::file_size(task.source);
      fs::path target = dir_ / "locked" / snapshot.stored_name;
      fs::path staging = target;
      staging += ".tmp";
      {
        std::ifstream in(task.source, std::ios::binary);
        if (!in) fail(err::Io, "cannot read " + task.source.string());
        std::ofstream out(staging, std::ios::binary | std::ios::trunc);
        if (!out) fail(err::Io, "cannot write " + staging.string());
        try {
          crypto::encrypt_stream(key_, crypto::FileHeader::fresh(plain_len),
                                 in, out, progress);
        } catch (...) {
          out.close();
          fs::remove(staging);
          throw;
        }
      }
      detail::fsync_path(staging);
      std::error_code ec;
      fs::rename(staging, target, ec);
      if (ec) fail(err::Io, "cannot move ciphertext into place");
      fs::remove(task.source);
      return plain_len;
    }

    fs::path source = dir_ / "locked" / snapshot.stored_name;
    fs::path target = dir_ / "open" / snapshot.original_name;
    fs::path staging = target;
    staging += ".tmp";
    std::uint64_t plain_len = 0;
    {
      std::ifstream in(source, std::ios::binary);
      if (!in) fail(err::Io, "cannot read " + source.string());
      std::ofstream out(staging, std::ios::binary | std::ios::trunc);
      if (!out) fail(err::Io, "cannot write " + staging.string());
      try {
        crypto::decrypt_stream(key_, in, out, [&](std::uint64_t done) {
          plain_len = done;
          progress(done);
        });
      } catch (...) {
        out.close();
        fs::remove(staging);
        throw;
      }
    }
    detail::fsync_path(staging);
    std::error_code ec;
    fs::rename(staging, target, ec);
    if (ec) fail(err::Io, "cannot move plaintext into place");
    return plain_len;
  }

  fs::path dir_;
  crypto::Key key_;
  VaultMeta meta_;
  Options opts_;

  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_idle_;
  std::vector<VaultEntry> entries_;
  std::deque<Task> pending_;
  std::optional<Task> current_;
  std::optional<EntryState> pre_task_state_;
  std::vector<std::string> errors_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace dstealth::vault
