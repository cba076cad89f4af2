#!/usr/bin/env python3
# Copyright 2026 The dstealth Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Builds the committed test fixtures and their reference dumps.

Everything the C++ test suite treats as ground truth comes from here: the
binary manifests, the resource table, the package archives, the zip
listings, the alignment reports, and the reference-signed archive. The
writers and dumpers in this file are an independent implementation of the
same byte formats the library handles; they never share code with it.

Run from the repository root:  python3 scripts/gen_fixtures.py

Requires the openssl CLI (for the reference CMS signature) and the test
key generated by scripts/gen_testkey.sh.
"""

import base64
import hashlib
import io
import os
import random
import struct
import subprocess
import sys
import zipfile
import zlib

OUT = sys.argv[1] if len(sys.argv) > 1 else "tests/data"

ANDROID_NS = "http://schemas.android.com/apk/res/android"

# Public android attribute resource ids (from the platform's public.xml).
ATTR_IDS = {
    "label": 0x01010001,
    "icon": 0x01010002,
    "name": 0x01010003,
    "versionCode": 0x0101021B,
}

# ---------------------------------------------------------------------------
# String pools (ResStringPool)
# ---------------------------------------------------------------------------


def _enc_len8(n):
    if n < 0x80:
        return bytes([n])
    assert n < 0x8000
    return bytes([0x80 | (n >> 8), n & 0xFF])


def _enc_len16(n):
    if n < 0x8000:
        return struct.pack("<H", n)
    assert n < 0x80000000
    return struct.pack("<HH", 0x8000 | (n >> 16), n & 0xFFFF)


def enc_string(s, utf8):
    if utf8:
        b = s.encode("utf-8")
        u16n = len(s.encode("utf-16-le")) // 2
        return _enc_len8(u16n) + _enc_len8(len(b)) + b + b"\x00"
    units = s.encode("utf-16-le")
    return _enc_len16(len(units) // 2) + units + b"\x00\x00"


def string_pool(strings, utf8=False):
    data = bytearray()
    offsets = []
    for s in strings:
        offsets.append(len(data))
        data += enc_string(s, utf8)
    data += b"\x00" * ((-len(data)) % 4)
    strings_start = 28 + 4 * len(strings)
    size = strings_start + len(data)
    out = struct.pack(
        "<HHIIIIII", 0x0001, 28, size, len(strings), 0,
        0x100 if utf8 else 0, strings_start, 0,
    )
    out += b"".join(struct.pack("<I", o) for o in offsets)
    return out + bytes(data)


# ---------------------------------------------------------------------------
# Binary XML (AndroidManifest.xml)
# ---------------------------------------------------------------------------

NO_INDEX = 0xFFFFFFFF


class ManifestBuilder:
    """Builds a compiled manifest plus the matching reference dump."""

    def __init__(self, utf8=False):
        self.utf8 = utf8
        self.strings = []
        self.res_map = []  # resource id per leading pool string
        self.dump = ["axml utf8" if utf8 else "axml utf16"]

    def attr_name(self, name):
        # Attribute names with resource ids must occupy the pool head, in
        # resource-map order.
        rid = ATTR_IDS[name]
        if name in self.strings:
            return self.strings.index(name)
        assert len(self.strings) == len(self.res_map), "attr names come first"
        self.strings.append(name)
        self.res_map.append(rid)
        return len(self.strings) - 1

    def s(self, text):
        if text in self.strings[len(self.res_map):]:
            return self.strings.index(text, len(self.res_map))
        self.strings.append(text)
        return len(self.strings) - 1

    def build(self, label_value, package="org.example.fixture"):
        # Pool head / resource map.
        i_versionCode = self.attr_name("versionCode")
        i_label = self.attr_name("label")
        i_icon = self.attr_name("icon")
        i_name = self.attr_name("name")

        i_android = self.s("android")
        i_ns = self.s(ANDROID_NS)
        i_manifest = self.s("manifest")
        i_package_attr = self.s("package")
        i_package_val = self.s(package)
        i_application = self.s("application")
        i_activity = self.s("activity")
        i_main_activity = self.s(".MainActivity")
        i_intent = self.s("intent-filter")
        i_action = self.s("action")
        i_action_main = self.s("android.intent.action.MAIN")
        i_category = self.s("category")
        i_cat_launcher = self.s("android.intent.category.LAUNCHER")

        if label_value[0] == "str":
            i_label_val = self.s(label_value[1])
            label_attr = (i_ns, i_label, i_label_val, 0x03, i_label_val)
            label_dump = "A label id=0x01010001 str:%s" % label_value[1]
        else:
            label_attr = (i_ns, i_label, NO_INDEX, 0x01, label_value[1])
            label_dump = "A label id=0x01010001 ref:0x%08x" % label_value[1]

        body = bytearray()

        def chunk(ctype, hdr_size, payload):
            body.extend(struct.pack("<HHI", ctype, hdr_size, 8 + len(payload)))
            body.extend(payload)

        def start_ns(line, prefix, uri):
            chunk(0x0100, 16, struct.pack("<IIII", line, NO_INDEX, prefix, uri))
            self.dump.append("NS %s=%s" % (self.strings[prefix], self.strings[uri]))

        def end_ns(line, prefix, uri):
            chunk(0x0101, 16, struct.pack("<IIII", line, NO_INDEX, prefix, uri))
            self.dump.append("XNS %s" % self.strings[prefix])

        def start_el(line, name, attrs, dump_attrs):
            payload = struct.pack("<II", line, NO_INDEX)
            payload += struct.pack(
                "<IIHHHHHH", NO_INDEX, name, 20, 20, len(attrs), 0, 0, 0
            )
            for ns, aname, raw, vtype, vdata in attrs:
                payload += struct.pack("<III", ns, aname, raw)
                payload += struct.pack("<HBBI", 8, 0, vtype, vdata)
            chunk(0x0102, 16, payload)
            self.dump.append("E %s" % self.strings[name])
            self.dump.extend(dump_attrs)

        def end_el(line, name):
            chunk(0x0103, 16, struct.pack("<IIII", line, NO_INDEX, NO_INDEX, name))
            self.dump.append("X %s" % self.strings[name])

        start_ns(1, i_android, i_ns)
        start_el(
            2, i_manifest,
            [
                (i_ns, i_versionCode, NO_INDEX, 0x10, 1),
                (NO_INDEX, i_package_attr, i_package_val, 0x03, i_package_val),
            ],
            [
                "A versionCode id=0x0101021b dec:1",
                "A package str:%s" % package,
            ],
        )
        start_el(4, i_application, [label_attr, (i_ns, i_icon, NO_INDEX, 0x01, 0x7F030000)],
                 [label_dump, "A icon id=0x01010002 ref:0x7f030000"])
        start_el(6, i_activity, [(i_ns, i_name, i_main_activity, 0x03, i_main_activity)],
                 ["A name id=0x01010003 str:.MainActivity"])
        start_el(7, i_intent, [], [])
        start_el(8, i_action, [(i_ns, i_name, i_action_main, 0x03, i_action_main)],
                 ["A name id=0x01010003 str:android.intent.action.MAIN"])
        end_el(8, i_action)
        start_el(9, i_category, [(i_ns, i_name, i_cat_launcher, 0x03, i_cat_launcher)],
                 ["A name id=0x01010003 str:android.intent.category.LAUNCHER"])
        end_el(9, i_category)
        end_el(10, i_intent)
        end_el(11, i_activity)
        end_el(12, i_application)
        end_el(13, i_manifest)
        end_ns(13, i_android, i_ns)

        pool = string_pool(self.strings, self.utf8)
        rmap = struct.pack("<HHI", 0x0180, 8, 8 + 4 * len(self.res_map))
        rmap += b"".join(struct.pack("<I", r) for r in self.res_map)
        doc = pool + rmap + bytes(body)
        header = struct.pack("<HHI", 0x0003, 8, 8 + len(doc))
        return header + doc, "\n".join(self.dump) + "\n"


# ---------------------------------------------------------------------------
# Resource table (resources.arsc)
# ---------------------------------------------------------------------------

DENSITIES = {"default": 0, "ldpi": 120, "mdpi": 160, "hdpi": 240,
             "xhdpi": 320, "xxhdpi": 480, "xxxhdpi": 640}


def res_config(density):
    cfg = bytearray(28)
    struct.pack_into("<I", cfg, 0, 28)
    struct.pack_into("<H", cfg, 14, density)
    return bytes(cfg)


def build_arsc():
    paths = ["res/mipmap-%s/ic_launcher.png" % d for d in ("mdpi", "hdpi", "xhdpi")]
    global_strings = paths + ["FixtureApp"]
    type_names = ["attr", "string", "mipmap"]
    key_names = ["app_name", "ic_launcher"]

    def type_spec(type_id, flags):
        return (struct.pack("<HHIBBHI", 0x0202, 16, 16 + 4 * len(flags),
                            type_id, 0, 0, len(flags))
                + b"".join(struct.pack("<I", f) for f in flags))

    def type_chunk(type_id, density, entries):
        # entries: {entry_index: (key_index, value_type, value_data)}
        count = max(entries) + 1
        offsets, blob = [], bytearray()
        for i in range(count):
            if i in entries:
                offsets.append(len(blob))
                key, vtype, vdata = entries[i]
                blob += struct.pack("<HHI", 8, 0, key)
                blob += struct.pack("<HBBI", 8, 0, vtype, vdata)
            else:
                offsets.append(NO_INDEX)
        cfg = res_config(density)
        hs = 20 + len(cfg)
        entries_start = hs + 4 * count
        size = entries_start + len(blob)
        out = struct.pack("<HHIBBHII", 0x0201, hs, size, type_id, 0, 0, count,
                          entries_start)
        out += cfg
        out += b"".join(struct.pack("<I", o) for o in offsets)
        return out + bytes(blob)

    tpool = string_pool(type_names, utf8=True)
    kpool = string_pool(key_names, utf8=True)
    body = bytearray()
    body += tpool
    body += kpool
    body += type_spec(2, [0])
    body += type_chunk(2, 0, {0: (0, 0x03, 3)})          # string/app_name
    body += type_spec(3, [0x0100])                       # varies by density
    body += type_chunk(3, 160, {0: (1, 0x03, 0)})        # mipmap/ic_launcher
    body += type_chunk(3, 240, {0: (1, 0x03, 1)})
    body += type_chunk(3, 320, {0: (1, 0x03, 2)})

    name_utf16 = "org.example.fixture".encode("utf-16-le")
    name_field = name_utf16 + b"\x00" * (256 - len(name_utf16))
    pkg_size = 288 + len(body)
    pkg = struct.pack("<HHII", 0x0200, 288, pkg_size, 0x7F)
    pkg += name_field
    pkg += struct.pack("<IIIII", 288, len(type_names),
                       288 + len(tpool), len(key_names), 0)
    pkg += bytes(body)

    gpool = string_pool(global_strings, utf8=True)
    total = 12 + len(gpool) + len(pkg)
    table = struct.pack("<HHII", 0x0002, 12, total, 1) + gpool + pkg

    dump = [
        "arsc",
        "package id=0x7f name=org.example.fixture",
        "entry id=0x7f020000 type=string name=app_name config=default str:FixtureApp",
    ]
    for d, p in zip(("mdpi", "hdpi", "xhdpi"), paths):
        dump.append(
            "entry id=0x7f030000 type=mipmap name=ic_launcher config=%s path:%s" % (d, p)
        )
    return table, "\n".join(dump) + "\n"


# ---------------------------------------------------------------------------
# Zip writer with alignment control
# ---------------------------------------------------------------------------

DOS_TIME = 0x0000
DOS_DATE = 0x0021  # 1980-01-01


class ZipBuilder:
    def __init__(self):
        self.buf = bytearray()
        self.central = []

    def add(self, name, data, stored, align=None):
        nb = name.encode("utf-8")
        crc = zlib.crc32(data) & 0xFFFFFFFF
        if stored:
            payload, method = data, 0
        else:
            c = zlib.compressobj(6, zlib.DEFLATED, -15)
            payload, method = c.compress(data) + c.flush(), 8
        extra = 0
        if align and stored:
            doff = len(self.buf) + 30 + len(nb)
            extra = (align - doff % align) % align
        hoff = len(self.buf)
        self.buf += struct.pack("<IHHHHHIIIHH", 0x04034B50, 20, 0, method,
                                DOS_TIME, DOS_DATE, crc, len(payload),
                                len(data), len(nb), extra)
        self.buf += nb + b"\x00" * extra + payload
        self.central.append((nb, method, crc, len(payload), len(data), hoff))

    def finish(self, comment=b""):
        cd_off = len(self.buf)
        for nb, method, crc, csize, usize, hoff in self.central:
            self.buf += struct.pack("<IHHHHHHIIIHHHHHII", 0x02014B50, 20, 20, 0,
                                    method, DOS_TIME, DOS_DATE, crc, csize,
                                    usize, len(nb), 0, 0, 0, 0, 0, hoff)
            self.buf += nb
        cd_size = len(self.buf) - cd_off
        n = len(self.central)
        self.buf += struct.pack("<IHHHHIIH", 0x06054B50, 0, 0, n, n, cd_size,
                                cd_off, len(comment))
        self.buf += comment
        return bytes(self.buf)


def scan_local_entries(data):
    """Independent walk of the central directory + local headers."""
    eocd = data.rfind(b"PK\x05\x06")
    assert eocd >= 0
    n, cd_size, cd_off = struct.unpack("<HII", data[eocd + 10:eocd + 20])
    out = []
    pos = cd_off
    for _ in range(n):
        (sig, _, _, _, method, _, _, crc, csize, usize, nlen, elen, clen,
         _, _, _, hoff) = struct.unpack("<IHHHHHHIIIHHHHHII", data[pos:pos + 46])
        assert sig == 0x02014B50
        name = data[pos + 46:pos + 46 + nlen].decode("utf-8")
        pos += 46 + nlen + elen + clen
        lsig, _, _, lmethod = struct.unpack("<IHHH", data[hoff:hoff + 10])
        assert lsig == 0x04034B50
        lnlen, lelen = struct.unpack("<HH", data[hoff + 26:hoff + 30])
        doff = hoff + 30 + lnlen + lelen
        out.append(dict(name=name, method=method, crc=crc, csize=csize,
                        usize=usize, hoff=hoff, doff=doff, extra=lelen))
    return out


def listing(data):
    lines = []
    for e in scan_local_entries(data):
        lines.append(
            "entry name=%s method=%s crc=0x%08x usize=%d csize=%d hoff=%d doff=%d extra=%d"
            % (e["name"], "stored" if e["method"] == 0 else "deflated",
               e["crc"], e["usize"], e["csize"], e["hoff"], e["doff"], e["extra"])
        )
    return "\n".join(lines) + "\n"


def align_report(data, boundary=4):
    lines = []
    for e in scan_local_entries(data):
        if e["method"] == 0 and e["doff"] % boundary != 0:
            lines.append("violation name=%s doff=%d" % (e["name"], e["doff"]))
    if not lines:
        lines = ["ok"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Reference v1 signer (jar-style manifest + openssl CMS)
# ---------------------------------------------------------------------------


def wrap72(line):
    b = line.encode("utf-8")
    out = []
    first = True
    while b:
        take = 72 if first else 71
        out.append((b"" if first else b" ") + b[:take])
        b = b[take:]
        first = False
    return b"\r\n".join(out) + b"\r\n"


def build_manifest(entries):
    head = wrap72("Manifest-Version: 1.0") + wrap72("Created-By: 1.0 (fixtures)")
    blob = head + b"\r\n"
    sections = {}
    for name, data in entries:
        sec = wrap72("Name: " + name)
        sec += wrap72("SHA-256-Digest: " +
                      base64.b64encode(hashlib.sha256(data).digest()).decode())
        sec += b"\r\n"
        sections[name] = sec
        blob += sec
    return blob, sections


def build_sf(manifest_blob, sections):
    blob = wrap72("Signature-Version: 1.0")
    blob += wrap72("SHA-256-Digest-Manifest: " +
                   base64.b64encode(hashlib.sha256(manifest_blob).digest()).decode())
    blob += b"\r\n"
    for name, sec in sections.items():
        blob += wrap72("Name: " + name)
        blob += wrap72("SHA-256-Digest: " +
                       base64.b64encode(hashlib.sha256(sec).digest()).decode())
        blob += b"\r\n"
    return blob


def cms_sign(sf_blob, key_pem, cert_pem, workdir):
    sf_path = os.path.join(workdir, "CERT.SF")
    out_path = os.path.join(workdir, "CERT.RSA")
    with open(sf_path, "wb") as f:
        f.write(sf_blob)
    subprocess.run(
        ["openssl", "cms", "-sign", "-binary", "-md", "sha256",
         "-in", sf_path, "-out", out_path, "-outform", "DER",
         "-signer", cert_pem, "-inkey", key_pem],
        check=True,
    )
    verify = subprocess.run(
        ["openssl", "cms", "-verify", "-binary", "-inform", "DER",
         "-in", out_path, "-content", sf_path, "-noverify", "-out", "/dev/null"],
        capture_output=True, text=True, check=True,
    )
    with open(out_path, "rb") as f:
        return f.read(), verify.stderr.strip()


# ---------------------------------------------------------------------------
# PNG helper
# ---------------------------------------------------------------------------


def make_png(r, g, b):
    def chunk(tag, payload):
        return (struct.pack(">I", len(payload)) + tag + payload +
                struct.pack(">I", zlib.crc32(tag + payload)))

    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0)
    idat = zlib.compress(b"\x00" + bytes([r, g, b]))
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) +
            chunk(b"IDAT", idat) + chunk(b"IEND", b""))


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------


def write(name, data):
    path = os.path.join(OUT, name)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as f:
        f.write(data)
    print("wrote %s (%d bytes)" % (path, len(data)))


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20260823)

    manifest, manifest_dump = ManifestBuilder(utf8=False).build(("str", "FixtureApp"))
    manifest_u8, manifest_u8_dump = ManifestBuilder(utf8=True).build(("str", "FixtureApp"))
    manifest_ref, manifest_ref_dump = ManifestBuilder(utf8=False).build(("ref", 0x7F020000))
    arsc, arsc_dump = build_arsc()

    write("manifest.axml", manifest)
    write("manifest.axml.dump.txt", manifest_dump)
    write("manifest_utf8.axml", manifest_u8)
    write("manifest_utf8.axml.dump.txt", manifest_u8_dump)
    write("manifest_reflabel.axml", manifest_ref)
    write("manifest_reflabel.axml.dump.txt", manifest_ref_dump)
    write("resources.arsc", arsc)
    write("resources.arsc.dump.txt", arsc_dump)

    dex = b"dex\n035\x00" + bytes(rng.getrandbits(8) for _ in range(4096))
    long_name = ("res/raw/a_rather_long_resource_file_name_used_to_exercise_"
                 "manifest_line_wrapping.bin")
    entries = [
        ("AndroidManifest.xml", manifest, False),
        ("classes.dex", dex, False),
        ("resources.arsc", arsc, True),
        ("res/mipmap-mdpi/ic_launcher.png", make_png(0x30, 0x80, 0x30), True),
        ("res/mipmap-hdpi/ic_launcher.png", make_png(0x30, 0x80, 0x90), True),
        ("res/mipmap-xhdpi/ic_launcher.png", make_png(0x90, 0x30, 0x80), True),
        (long_name, bytes(rng.getrandbits(8) for _ in range(64)), False),
        ("assets/notes.txt", b"fixture payload, nothing to see here\n", False),
    ]

    zb = ZipBuilder()
    for name, data, stored in entries:
        zb.add(name, data, stored, align=4)
    apk = zb.finish()
    assert align_report(apk) == "ok\n", "fixture.apk must be aligned"

    zb = ZipBuilder()
    for name, data, stored in entries:
        zb.add(name, data, stored, align=None)
    apk_misaligned = zb.finish()
    assert "violation" in align_report(apk_misaligned), \
        "fixture_misaligned.apk must have at least one misaligned stored entry"

    # Both archives must be readable by stock tooling.
    for blob in (apk, apk_misaligned):
        zf = zipfile.ZipFile(io.BytesIO(blob))
        assert zf.testzip() is None
        assert sorted(zf.namelist()) == sorted(n for n, _, _ in entries)

    write("fixture.apk", apk)
    write("fixture.apk.listing.txt", listing(apk))
    write("fixture.apk.aligncheck.txt", align_report(apk))
    write("fixture_misaligned.apk", apk_misaligned)
    write("fixture_misaligned.apk.listing.txt", listing(apk_misaligned))
    write("fixture_misaligned.apk.aligncheck.txt", align_report(apk_misaligned))

    # Reference-signed archive.
    key_pem = os.path.join(OUT, "testkey_rsa.pem")
    cert_pem = os.path.join(OUT, "testkey_cert.pem")
    if not os.path.exists(key_pem):
        sys.exit("run scripts/gen_testkey.sh first")
    mf_blob, sections = build_manifest([(n, d) for n, d, _ in entries])
    sf_blob = build_sf(mf_blob, sections)
    rsa_blob, verify_msg = cms_sign(sf_blob, key_pem, cert_pem, OUT)
    os.remove(os.path.join(OUT, "CERT.SF"))
    os.remove(os.path.join(OUT, "CERT.RSA"))

    zb = ZipBuilder()
    for name, data, stored in entries:
        zb.add(name, data, stored, align=4)
    zb.add("META-INF/MANIFEST.MF", mf_blob, False)
    zb.add("META-INF/CERT.SF", sf_blob, False)
    zb.add("META-INF/CERT.RSA", rsa_blob, False)
    apk_signed = zb.finish()
    write("fixture_signed.apk", apk_signed)
    write("fixture_signed.apk.listing.txt", listing(apk_signed))

    transcript = [
        "reference signer: scripts/gen_fixtures.py (jar-style manifest; openssl cms)",
        "openssl cms -verify -binary -noverify: " + verify_msg,
        "manifest sha256: " + hashlib.sha256(mf_blob).hexdigest(),
        "signature file sha256: " + hashlib.sha256(sf_blob).hexdigest(),
    ]
    write("fixture_signed.verify.txt", "\n".join(transcript) + "\n")

    write("icon_new.png", make_png(0xC0, 0x20, 0x20))


if __name__ == "__main__":
    main()
