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

// The morphing pipeline: swap an application package's visible name and
// launcher icon, rebuild the archive, align it, and re-sign it. The
// package identifier is deliberately left untouched.

#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dstealth/apkzip.hpp"
#include "dstealth/axml.hpp"
#include "dstealth/bytes.hpp"
#include "dstealth/error.hpp"
#include "dstealth/signer.hpp"

namespace dstealth::morph {

struct MorphSpec {
  std::optional<std::string> new_name;
  // Density qualifier ("mdpi", ...) or "all" → image bytes. "all" is
  // exclusive with per-density keys.
  std::map<std::string, Bytes> icons;
  axml::LabelMode label_mode = axml::LabelMode::Rebuild;
};

struct MorphReport {
  std::string package_name;
  std::string label;  // inline text, or "@0x........" for a reference
  bool label_is_reference = false;
  std::uint32_t icon_resource_id = 0;  // 0 when the icon is not a reference
  std::vector<axml::ResolvedPath> icon_paths;
  bool is_signed = false;
  bool aligned = false;
};

namespace detail {

inline std::string ref_string(std::uint32_t id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "@0x%08x", id);
  return buf;
}

inline const apkzip::Entry& manifest_entry(const apkzip::ArchiveModel& m) {
  const apkzip::Entry* e = m.find("AndroidManifest.xml");
  if (!e) fail(err::EntryNotFound, "archive has no AndroidManifest.xml");
  return *e;
}

// Density-qualified entry paths for the application icon. A string-valued
// icon attribute resolves to one "default" path without a resource table.
inline std::vector<axml::ResolvedPath> icon_paths(
    const apkzip::ArchiveModel& m, const axml::AttributeValue& icon,
    std::uint32_t* id_out) {
  if (icon.kind == axml::AttributeValue::Kind::String) {
    if (id_out) *id_out = 0;
    return {{"default", icon.text}};
  }
  if (icon.kind != axml::AttributeValue::Kind::Reference)
    fail(err::ResourceNotFound, "icon attribute holds no usable value");
  if (id_out) *id_out = icon.data;
  const apkzip::Entry* arsc = m.find("resources.arsc");
  if (!arsc)
    fail(err::ResourceNotFound,
         "icon is a resource reference but the archive has no resource table");
  axml::ResourceTable table = axml::parse_resource_table(arsc->data);
  return axml::resolve_resource_paths(table, icon.data);
}

}  // namespace detail

inline MorphReport inspect(const Bytes& apk_bytes) {
  apkzip::ArchiveModel m = apkzip::read_archive(apk_bytes);
  axml::AxmlDocument doc = axml::parse_axml(detail::manifest_entry(m).data);

  MorphReport report;
  report.package_name =
      axml::get_attribute(doc, {"manifest"}, "package").text;

  try {
    auto label = axml::get_attribute(doc, {"manifest", "application"}, "label");
    if (label.kind == axml::AttributeValue::Kind::Reference) {
      report.label = detail::ref_string(label.data);
      report.label_is_reference = true;
    } else {
      report.label = label.text;
    }
  } catch (const Error& e) {
    if (e.code() != err::AttributeNotFound) throw;
  }

  try {
    auto icon = axml::get_attribute(doc, {"manifest", "application"}, "icon");
    report.icon_paths =
        detail::icon_paths(m, icon, &report.icon_resource_id);
  } catch (const Error& e) {
    if (e.code() != err::AttributeNotFound) throw;
  }

  try {
    report.is_signed = signer::verify_v1(apk_bytes).ok;
  } catch (const Error& e) {
    if (e.code() != err::NotSigned) throw;
  }
  report.aligned = apkzip::check_alignment(apk_bytes).ok;
  return report;
}

// Pipeline: replace icons, rewrite the label, rebuild, align, sign.
inline Bytes apply_morph(const Bytes& apk_bytes, const MorphSpec& spec,
                         const signer::SigningMaterial& material) {
  if (spec.icons.count("all") && spec.icons.size() > 1)
    throw std::invalid_argument(
        "'all' cannot be combined with per-density icons");

  apkzip::ArchiveModel m = apkzip::read_archive(apk_bytes);
  axml::AxmlDocument doc = axml::parse_axml(detail::manifest_entry(m).data);

  if (!spec.icons.empty()) {
    auto icon = axml::get_attribute(doc, {"manifest", "application"}, "icon");
    std::vector<axml::ResolvedPath> resolved =
        detail::icon_paths(m, icon, nullptr);
    for (const auto& [density, image] : spec.icons) {
      if (density == "all") {
        if (resolved.empty())
          fail(err::UnknownDensity, "no icon entries to replace");
        for (const auto& rp : resolved)
          m = apkzip::replace_entry(std::move(m), rp.path, image);
        continue;
      }
      const axml::ResolvedPath* hit = nullptr;
      for (const auto& rp : resolved)
        if (rp.density == density) hit = &rp;
      if (!hit)
        fail(err::UnknownDensity,
             "no icon variant for density " + density);
      m = apkzip::replace_entry(std::move(m), hit->path, image);
    }
  }

  if (spec.new_name) {
    doc = axml::set_label(std::move(doc), *spec.new_name, spec.label_mode);
    m = apkzip::replace_entry(std::move(m), "AndroidManifest.xml",
                              axml::serialize_axml(doc));
  }

  // Drop any stale signature before computing alignment; the fresh one is
  // appended after the stored entries, so their offsets stay put.
  std::erase_if(m.entries, [](const apkzip::Entry& e) {
    return signer::detail::is_signing_entry(e.path);
  });
  Bytes rebuilt = apkzip::write_archive(m);
  Bytes aligned = apkzip::align_archive(rebuilt, 4);
  apkzip::ArchiveModel final_model =
      signer::sign_archive(apkzip::read_archive(aligned), material);
  return apkzip::write_archive(final_model);
}

}  // namespace dstealth::morph
