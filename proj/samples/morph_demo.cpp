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

// Rename an application and swap its launcher icon, end to end:
//
//   morph_demo <in.apk> <out.apk> <new-label> [icon.png]

#include <cstdio>

#include "dstealth/morph.hpp"
#include "dstealth/signer.hpp"

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: %s <in.apk> <out.apk> <label> [icon.png]\n",
                 argv[0]);
    return 2;
  }

  dstealth::Bytes apk = dstealth::read_file(argv[1]);

  auto before = dstealth::morph::inspect(apk);
  std::printf("before: package=%s label=%s signed=%s aligned=%s\n",
              before.package_name.c_str(), before.label.c_str(),
              before.is_signed ? "yes" : "no", before.aligned ? "yes" : "no");

  dstealth::morph::MorphSpec spec;
  spec.new_name = argv[3];
  if (argc > 4) spec.icons["all"] = dstealth::read_file(argv[4]);

  // Demo key only; anything signed with it is trivially re-signable.
  auto pem = [](const char* p) {
    dstealth::Bytes b = dstealth::read_file(p);
    return std::string(b.begin(), b.end());
  };
  auto material = dstealth::signer::load_material(
      pem("tests/data/testkey_rsa.pem"), pem("tests/data/testkey_cert.pem"));

  dstealth::Bytes morphed = dstealth::morph::apply_morph(apk, spec, material);
  dstealth::write_file(argv[2], morphed);

  auto after = dstealth::morph::inspect(morphed);
  std::printf("after:  package=%s label=%s signed=%s aligned=%s\n",
              after.package_name.c_str(), after.label.c_str(),
              after.is_signed ? "yes" : "no", after.aligned ? "yes" : "no");
  return 0;
}
