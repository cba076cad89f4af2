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

#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"

namespace testutil {

// Error code raised by `f`, or "" if it does not throw a dstealth::Error.
template <typename F>
std::string code_of(F&& f) {
  try {
    f();
  } catch (const dstealth::Error& e) {
    return e.code();
  }
  return "";
}

// {code, message} raised by `f`, or {"", ""} if it does not throw.
template <typename F>
std::pair<std::string, std::string> error_of(F&& f) {
  try {
    f();
  } catch (const dstealth::Error& e) {
    return {e.code(), e.what()};
  }
  return {};
}

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("DSTEALTH_DATA_DIR")) return env;
#ifdef DSTEALTH_DATA_DIR
  return DSTEALTH_DATA_DIR;
#else
  return "tests/data";
#endif
}

inline dstealth::Bytes fixture(const std::string& name) {
  return dstealth::read_file((data_dir() / name).string());
}

inline std::string fixture_text(const std::string& name) {
  dstealth::Bytes b = fixture(name);
  return std::string(b.begin(), b.end());
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int i = 0; i < 100; ++i) {
      auto p = base / ("dstealth_test_" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("cannot create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
