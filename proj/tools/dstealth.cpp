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

// Command-line surface for the morphing pipeline and the file vault.
// Exit codes: 0 success, 1 domain error (error name on standard error),
// 2 usage error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <termios.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "dstealth/apkzip.hpp"
#include "dstealth/axml.hpp"
#include "dstealth/error.hpp"
#include "dstealth/morph.hpp"
#include "dstealth/signer.hpp"
#include "dstealth/vault.hpp"
#include "builtin_testkey.hpp"

namespace fs = std::filesystem;
using dstealth::Bytes;
using dstealth::Error;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

std::string read_text(const std::string& path) {
  Bytes b = dstealth::read_file(path);
  return std::string(b.begin(), b.end());
}

// Output files appear atomically: content goes to <out>.tmp first, so a
// failure never leaves a partial file under the requested name.
void write_output(const std::string& path, const Bytes& data) {
  std::string tmp = path + ".tmp";
  dstealth::write_file(tmp, data);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    dstealth::fail(dstealth::err::Io, "cannot move output into place: " + path);
  }
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

fs::path resolve_vault_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  std::string env = env_or_empty("DSV_DIR");
  if (!env.empty()) return env;
  throw UsageError("vault directory required (--vault or DSV_DIR)");
}

std::string prompt_pin() {
  if (!::isatty(STDIN_FILENO))
    throw UsageError("pin required (--pin or DSV_PIN) when not interactive");
  std::fputs("PIN: ", stderr);
  std::fflush(stderr);
  termios before{};
  tcgetattr(STDIN_FILENO, &before);
  termios silent = before;
  silent.c_lflag &= ~tcflag_t(ECHO);
  tcsetattr(STDIN_FILENO, TCSANOW, &silent);
  std::string pin;
  std::getline(std::cin, pin);
  tcsetattr(STDIN_FILENO, TCSANOW, &before);
  std::fputc('\n', stderr);
  return pin;
}

std::string resolve_pin(const std::string& flag) {
  if (!flag.empty()) return flag;
  std::string env = env_or_empty("DSV_PIN");
  if (!env.empty()) return env;
  return prompt_pin();
}

// One process owns a vault directory at a time; the lock file records the
// owner pid and is reclaimed when that process is gone.
class DirLock {
 public:
  void acquire(const fs::path& dir) {
    path_ = dir / ".dsv.lock";
    for (int attempt = 0; attempt < 4; ++attempt) {
      int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0600);
      if (fd >= 0) {
        std::string pid = std::to_string(::getpid()) + "\n";
        ssize_t n = ::write(fd, pid.data(), pid.size());
        (void)n;
        ::close(fd);
        held_ = true;
        return;
      }
      long pid = 0;
      {
        std::ifstream in(path_);
        in >> pid;
      }
      if (pid > 0 && (::kill(pid_t(pid), 0) == 0 || errno == EPERM))
        dstealth::fail(dstealth::err::VaultBusy,
                       "vault is in use by process " + std::to_string(pid));
      std::error_code ec;
      fs::remove(path_, ec);  // stale lock from a dead process
    }
    dstealth::fail(dstealth::err::VaultBusy, "cannot acquire the vault lock");
  }

  ~DirLock() {
    if (held_) {
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }

 private:
  fs::path path_;
  bool held_ = false;
};

dstealth::signer::SigningMaterial load_material_or_builtin(
    const std::string& key_path, const std::string& cert_path) {
  if (key_path.empty() != cert_path.empty())
    throw UsageError("--key and --cert must be given together");
  if (key_path.empty())
    return dstealth::signer::load_material(dstealth::builtin::kTestKeyPem,
                                           dstealth::builtin::kTestCertPem);
  return dstealth::signer::load_material(read_text(key_path),
                                         read_text(cert_path));
}

json report_json(const dstealth::morph::MorphReport& r) {
  json icons = json::object();
  for (const auto& p : r.icon_paths) icons[p.density] = p.path;
  char id[16];
  std::snprintf(id, sizeof id, "0x%08x", r.icon_resource_id);
  return json{{"package", r.package_name},
              {"label", r.label},
              {"label_is_reference", r.label_is_reference},
              {"icon_resource_id", id},
              {"icon_paths", icons},
              {"signed", r.is_signed},
              {"aligned", r.aligned}};
}

void print_report(const dstealth::morph::MorphReport& r) {
  std::printf("package: %s\n", r.package_name.c_str());
  std::printf("label: %s\n", r.label.c_str());
  if (r.icon_resource_id)
    std::printf("icon: 0x%08x\n", r.icon_resource_id);
  for (const auto& p : r.icon_paths)
    std::printf("icon %s: %s\n", p.density.c_str(), p.path.c_str());
  std::printf("signed: %s\n", r.is_signed ? "yes" : "no");
  std::printf("aligned: %s\n", r.aligned ? "yes" : "no");
}

// Drains the queue and reports task failures, which count as domain errors.
int finish_vault_tasks(dstealth::vault::Vault& v, bool no_wait) {
  if (!no_wait) v.wait_idle();
  int rc = 0;
  for (const std::string& e : v.take_errors()) {
    std::fprintf(stderr, "error: %s\n", e.c_str());
    rc = 1;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"application package morphing and an encrypted file vault"};
  app.require_subcommand(1);

  std::function<int()> action;

  // --------------------------- morph ---------------------------------
  CLI::App* morph_cmd = app.add_subcommand("morph", "repackage applications");
  morph_cmd->require_subcommand(1);

  {
    auto* c = morph_cmd->add_subcommand("inspect", "summarize a package");
    auto apk = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    c->add_option("apk", *apk, "package file")->required();
    c->add_flag("--json", *as_json, "machine-readable output");
    c->callback([=, &action] {
      action = [=]() -> int {
        auto report = dstealth::morph::inspect(dstealth::read_file(*apk));
        if (*as_json)
          std::printf("%s\n", report_json(report).dump().c_str());
        else
          print_report(report);
        return 0;
      };
    });
  }

  {
    auto* c = morph_cmd->add_subcommand("apply", "rename / re-icon a package");
    auto apk = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto name = std::make_shared<std::string>();
    auto icon = std::make_shared<std::string>();
    auto icon_density = std::make_shared<std::vector<std::string>>();
    auto mode = std::make_shared<std::string>("rebuild");
    auto key = std::make_shared<std::string>();
    auto cert = std::make_shared<std::string>();
    c->add_option("apk", *apk, "package file")->required();
    c->add_option("-o,--out", *out, "output file")->required();
    c->add_option("--name", *name, "new application label");
    auto* icon_opt =
        c->add_option("--icon", *icon, "image file replacing every density");
    auto* icon_density_opt = c->add_option(
        "--icon-density", *icon_density,
        "density=image replacement (repeatable; ldpi..xxxhdpi)");
    icon_opt->excludes(icon_density_opt);
    c->add_option("--label-mode", *mode, "inplace or rebuild")
        ->check(CLI::IsMember({"inplace", "rebuild"}));
    c->add_option("--key", *key, "signing key PEM (default: bundled test key)");
    c->add_option("--cert", *cert, "signing certificate PEM");
    c->callback([=, &action] {
      action = [=]() -> int {
        dstealth::morph::MorphSpec spec;
        if (!name->empty()) spec.new_name = *name;
        spec.label_mode = *mode == "inplace"
                              ? dstealth::axml::LabelMode::InPlace
                              : dstealth::axml::LabelMode::Rebuild;
        if (!icon->empty())
          spec.icons["all"] = dstealth::read_file(*icon);
        for (const std::string& spec_str : *icon_density) {
          std::size_t eq = spec_str.find('=');
          if (eq == std::string::npos)
            throw UsageError("--icon-density expects density=file");
          std::string density = spec_str.substr(0, eq);
          if (!dstealth::axml::density_value(density) && density != "all")
            throw UsageError("unknown density qualifier: " + density);
          spec.icons[density] = dstealth::read_file(spec_str.substr(eq + 1));
        }
        auto material = load_material_or_builtin(*key, *cert);
        Bytes result = dstealth::morph::apply_morph(dstealth::read_file(*apk),
                                                    spec, material);
        write_output(*out, result);
        std::printf("wrote %s\n", out->c_str());
        return 0;
      };
    });
  }

  {
    auto* c = morph_cmd->add_subcommand("verify", "check the v1 signature");
    auto apk = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    c->add_option("apk", *apk, "package file")->required();
    c->add_flag("--json", *as_json, "machine-readable output");
    c->callback([=, &action] {
      action = [=]() -> int {
        auto report = dstealth::signer::verify_v1(dstealth::read_file(*apk));
        if (*as_json) {
          json failures = json::array();
          for (const auto& f : report.failures)
            failures.push_back({{"entry", f.entry}, {"reason", f.reason}});
          std::printf("%s\n",
                      json{{"ok", report.ok}, {"failures", failures}}
                          .dump()
                          .c_str());
        } else if (report.ok) {
          std::printf("ok\n");
        } else {
          for (const auto& f : report.failures)
            std::fprintf(stderr, "%s: %s\n", f.entry.c_str(),
                         f.reason.c_str());
        }
        return report.ok ? 0 : 1;
      };
    });
  }

  {
    auto* c = morph_cmd->add_subcommand("align", "4-byte-align stored entries");
    auto apk = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto boundary = std::make_shared<unsigned>(4);
    c->add_option("apk", *apk, "package file")->required();
    c->add_option("-o,--out", *out, "output file")->required();
    c->add_option("--boundary", *boundary, "alignment boundary (default 4)");
    c->callback([=, &action] {
      action = [=]() -> int {
        Bytes aligned = dstealth::apkzip::align_archive(
            dstealth::read_file(*apk), std::uint16_t(*boundary));
        write_output(*out, aligned);
        auto check =
            dstealth::apkzip::check_alignment(aligned, std::uint16_t(*boundary));
        std::printf("wrote %s (%s)\n", out->c_str(),
                    check.ok ? "aligned" : "violations remain");
        return check.ok ? 0 : 1;
      };
    });
  }

  // --------------------------- vault ---------------------------------
  CLI::App* vault_cmd = app.add_subcommand("vault", "encrypted file store");
  vault_cmd->require_subcommand(1);
  auto vault_dir = std::make_shared<std::string>();
  auto pin_flag = std::make_shared<std::string>();
  vault_cmd->add_option("--vault", *vault_dir,
                        "vault directory (or env DSV_DIR)");
  vault_cmd->add_option("--pin", *pin_flag, "pin (or env DSV_PIN, or prompt)");

  auto open_vault = [=](dstealth::vault::Vault::Options opts = {}) {
    fs::path dir = resolve_vault_dir(*vault_dir);
    return dstealth::vault::Vault::open(dir, resolve_pin(*pin_flag),
                                        std::move(opts));
  };

  {
    auto* c = vault_cmd->add_subcommand("init", "create a new vault");
    auto t = std::make_shared<unsigned>(3);
    auto m = std::make_shared<unsigned>(65536);
    auto p = std::make_shared<unsigned>(1);
    c->add_option("--kdf-t", *t, "Argon2id passes (default 3)");
    c->add_option("--kdf-m", *m, "Argon2id memory in KiB (default 65536)");
    c->add_option("--kdf-p", *p, "Argon2id lanes (must be 1)");
    c->callback([=, &action] {
      action = [=]() -> int {
        fs::path dir = resolve_vault_dir(*vault_dir);
        dstealth::crypto::KdfParams params{std::uint32_t(*t),
                                           std::uint32_t(*m),
                                           std::uint32_t(*p)};
        dstealth::vault::init_vault(dir, resolve_pin(*pin_flag), params);
        std::printf("initialized %s\n", dir.c_str());
        return 0;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("lock", "encrypt a file into the vault");
    auto file = std::make_shared<std::string>();
    auto no_wait = std::make_shared<bool>(false);
    c->add_option("file", *file, "file to lock")->required();
    c->add_flag("--no-wait", *no_wait, "do not wait for the queue to drain");
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        auto entry = v.lock_file(*file);
        int rc = finish_vault_tasks(v, *no_wait);
        if (rc == 0) std::printf("locked %s\n", entry.original_name.c_str());
        return rc;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("unlock", "decrypt an entry into open/");
    auto name = std::make_shared<std::string>();
    auto no_wait = std::make_shared<bool>(false);
    c->add_option("name", *name, "entry name")->required();
    c->add_flag("--no-wait", *no_wait, "do not wait for the queue to drain");
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        v.unlock_file(*name);
        int rc = finish_vault_tasks(v, *no_wait);
        if (rc == 0) std::printf("unlocked %s\n", name->c_str());
        return rc;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("lock-all", "re-lock every open entry");
    auto no_wait = std::make_shared<bool>(false);
    c->add_flag("--no-wait", *no_wait, "do not wait for the queue to drain");
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        std::size_t n = v.lock_all();
        int rc = finish_vault_tasks(v, *no_wait);
        if (rc == 0) std::printf("locked %zu\n", n);
        return rc;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("cancel", "discard pending tasks");
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        std::printf("discarded %zu\n", v.cancel());
        return 0;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("status", "list entries and states");
    auto as_json = std::make_shared<bool>(false);
    c->add_flag("--json", *as_json, "machine-readable output");
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        auto rows = v.status();
        std::size_t locked = 0, unlocked = 0, processing = 0;
        for (const auto& r : rows) {
          if (r.state == dstealth::vault::EntryState::Locked) ++locked;
          if (r.state == dstealth::vault::EntryState::Unlocked) ++unlocked;
          if (r.state == dstealth::vault::EntryState::Processing) ++processing;
        }
        if (*as_json) {
          json entries = json::array();
          for (const auto& r : rows) {
            json row{{"name", r.original_name},
                     {"state", dstealth::vault::to_string(r.state)}};
            row["pending"] = r.pending
                                 ? json(dstealth::vault::to_string(*r.pending))
                                 : json(nullptr);
            entries.push_back(std::move(row));
          }
          json counts{{"locked", locked},
                      {"unlocked", unlocked},
                      {"processing", processing}};
          std::printf("%s\n", json{{"entries", entries}, {"counts", counts}}
                                  .dump()
                                  .c_str());
        } else {
          for (const auto& r : rows)
            std::printf("%s\t%s%s%s\n", r.original_name.c_str(),
                        dstealth::vault::to_string(r.state),
                        r.pending ? "\tpending " : "",
                        r.pending ? dstealth::vault::to_string(*r.pending)
                                  : "");
          std::printf("locked %zu unlocked %zu processing %zu\n", locked,
                      unlocked, processing);
        }
        return 0;
      };
    });
  }

  {
    auto* c = vault_cmd->add_subcommand("destroy", "delete a locked entry");
    auto name = std::make_shared<std::string>();
    c->add_option("name", *name, "entry name")->required();
    c->callback([=, &action] {
      action = [=]() -> int {
        DirLock lock;
        lock.acquire(resolve_vault_dir(*vault_dir));
        auto v = open_vault();
        v.destroy_entry(*name);
        std::printf("destroyed %s\n", name->c_str());
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
