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

// Convenience umbrella: everything the library exports.

#pragma once

#include "dstealth/apkzip.hpp"
#include "dstealth/axml.hpp"
#include "dstealth/bytes.hpp"
#include "dstealth/crypto.hpp"
#include "dstealth/error.hpp"
#include "dstealth/morph.hpp"
#include "dstealth/signer.hpp"
#include "dstealth/vault.hpp"
