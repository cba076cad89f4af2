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

// Walk a vault through its whole lifecycle in a scratch directory:
// init, lock a file, list, unlock it again, compare bytes.

#include <cstdio>
#include <filesystem>

#include "dstealth/vault.hpp"

namespace fs = std::filesystem;

int main() {
  fs::path dir = fs::temp_directory_path() / "vault_demo";
  fs::remove_all(dir);

  // Weaker-than-default KDF so the demo runs instantly.
  dstealth::crypto::KdfParams quick{1, 8192, 1};
  dstealth::vault::init_vault(dir, "2468", quick);

  fs::path secret = dir / "open" / "diary.txt";
  dstealth::write_file(secret.string(),
                       dstealth::Bytes{'d', 'e', 'a', 'r', ' ', 'm', 'e'});

  dstealth::vault::Vault::Options opts;
  opts.on_task_complete = [](const std::string& name,
                             dstealth::vault::Direction d) {
    std::printf("done: %s %s\n", dstealth::vault::to_string(d), name.c_str());
  };
  auto vault = dstealth::vault::Vault::open(dir, "2468", std::move(opts));

  vault.lock_file(secret.string());
  vault.wait_idle();
  std::printf("source removed: %s\n", fs::exists(secret) ? "no" : "yes");

  for (const auto& row : vault.status())
    std::printf("entry: %s (%s)\n", row.original_name.c_str(),
                dstealth::vault::to_string(row.state));

  vault.unlock_file("diary.txt");
  vault.wait_idle();

  dstealth::Bytes round = dstealth::read_file(secret.string());
  std::printf("roundtrip: %s\n",
              std::string(round.begin(), round.end()) == "dear me" ? "ok"
                                                                   : "BAD");
  return 0;
}
