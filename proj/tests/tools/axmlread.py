"""Independent binary-XML reader used to cross-check manifest fixtures.

Implements the resource-XML chunk format from scratch (string pool in
both UTF-16 and UTF-8 variants, resource map, element chunks, typed
values); shares no code with axmlkit.py.
"""

import struct

CHUNK_STRING_POOL = 0x0001
CHUNK_XML = 0x0003
CHUNK_RESOURCE_MAP = 0x0180
CHUNK_NS_START = 0x0100
CHUNK_NS_END = 0x0101
CHUNK_EL_START = 0x0102
CHUNK_EL_END = 0x0103
CHUNK_CDATA = 0x0104

UTF8_FLAG = 0x100


class AxmlError(Exception):
    pass


def _pool(data, off, size):
    (string_count, style_count, flags, strings_start, _styles_start) = \
        struct.unpack_from("<IIIII", data, off + 8)
    header_size = struct.unpack_from("<H", data, off + 2)[0]
    offsets = struct.unpack_from("<%dI" % string_count, data,
                                 off + header_size)
    base = off + strings_start
    strings = []
    if flags & UTF8_FLAG:
        for so in offsets:
            p = base + so
            # utf16 length (skip), utf8 byte length
            u16 = data[p]
            p += 2 if u16 & 0x80 else 1
            blen = data[p]
            if blen & 0x80:
                blen = ((blen & 0x7F) << 8) | data[p + 1]
                p += 2
            else:
                p += 1
            strings.append(data[p:p + blen].decode("utf-8", "replace"))
    else:
        for so in offsets:
            p = base + so
            (n,) = struct.unpack_from("<H", data, p)
            p += 2
            if n & 0x8000:
                (n2,) = struct.unpack_from("<H", data, p)
                n = ((n & 0x7FFF) << 16) | n2
                p += 2
            strings.append(data[p:p + 2 * n].decode("utf-16-le", "replace"))
    return strings


def parse(data):
    if len(data) < 8:
        raise AxmlError("too short")
    ctype, _hs, total = struct.unpack_from("<HHI", data, 0)
    if ctype != CHUNK_XML:
        raise AxmlError("not a binary xml document")
    strings = []
    res_ids = []
    root = None
    stack = []
    off = 8
    end = min(total, len(data))
    while off + 8 <= end:
        t, hs, size = struct.unpack_from("<HHI", data, off)
        if size < 8 or off + size > end:
            raise AxmlError("truncated chunk at %d" % off)
        if t == CHUNK_STRING_POOL:
            strings = _pool(data, off, size)
        elif t == CHUNK_RESOURCE_MAP:
            n = (size - hs) // 4
            res_ids = list(struct.unpack_from("<%dI" % n, data, off + hs))
        elif t == CHUNK_EL_START:
            _line, _comment = struct.unpack_from("<II", data, off + 8)
            ns, name, astart, asize, acount = struct.unpack_from(
                "<IIHHH", data, off + 16)
            el = {"name": strings[name], "attrs": [], "children": []}
            abase = off + 16 + astart
            for i in range(acount):
                ans, aname, rawv = struct.unpack_from(
                    "<III", data, abase + i * asize)
                vsize, res0, dtype, vdata = struct.unpack_from(
                    "<HBBI", data, abase + i * asize + 12)
                nm = strings[aname] if aname < len(strings) else "?"
                rid = res_ids[aname] if aname < len(res_ids) else None
                if dtype == 0x03:
                    value = strings[vdata] if vdata < len(strings) else None
                elif dtype == 0x12:
                    value = bool(vdata)
                elif dtype in (0x10, 0x11):
                    value = vdata
                elif dtype == 0x01:
                    value = ("ref", vdata)
                else:
                    value = ("raw", dtype, vdata)
                el["attrs"].append({
                    "ns": strings[ans] if ans != 0xFFFFFFFF else None,
                    "name": nm, "res_id": rid, "value": value})
            if stack:
                stack[-1]["children"].append(el)
            else:
                root = el
            stack.append(el)
        elif t == CHUNK_EL_END:
            if stack:
                stack.pop()
        elif t in (CHUNK_NS_START, CHUNK_NS_END, CHUNK_CDATA):
            pass
        else:
            pass  # unknown chunk: skip
        off += size
    if root is None:
        raise AxmlError("no root element")
    return root


def find_all(el, name):
    out = []
    if el["name"] == name:
        out.append(el)
    for ch in el["children"]:
        out.extend(find_all(ch, name))
    return out


def attr(el, name, res_id=None):
    for at in el["attrs"]:
        if res_id is not None and at["res_id"] == res_id:
            return at["value"]
        if at["name"] == name:
            return at["value"]
    return None


def summarize(data):
    """Manifest-level digest used as the fixture oracle."""
    root = parse(data)
    if root["name"] != "manifest":
        raise AxmlError("root is %s" % root["name"])
    pkg = attr(root, "package")
    out = {"package": pkg, "permissions": [], "components": [],
           "min_sdk": None, "target_sdk": None,
           "debuggable": None, "allow_backup": None,
           "uses_cleartext_traffic": None, "network_security_config": None}
    for up in find_all(root, "uses-permission"):
        v = attr(up, "name", 0x01010003)
        if v:
            out["permissions"].append(v)
    for us in find_all(root, "uses-sdk"):
        out["min_sdk"] = attr(us, "minSdkVersion", 0x0101020C)
        out["target_sdk"] = attr(us, "targetSdkVersion", 0x01010270)
    for app in find_all(root, "application"):
        out["debuggable"] = attr(app, "debuggable", 0x0101000F)
        out["allow_backup"] = attr(app, "allowBackup", 0x01010280)
        out["uses_cleartext_traffic"] = attr(app, "usesCleartextTraffic",
                                             0x010104EC)
        nsc = attr(app, "networkSecurityConfig", 0x01010527)
        out["network_security_config"] = nsc if nsc is not None else None
    for kind in ("activity", "service", "receiver", "provider"):
        for comp in find_all(root, kind):
            name = attr(comp, "name", 0x01010003)
            if name and name.startswith("."):
                name = (pkg or "") + name
            elif name and "." not in name:
                name = (pkg or "") + "." + name
            entry = {"kind": kind, "name": name,
                     "exported": attr(comp, "exported", 0x01010010),
                     "permission": attr(comp, "permission", 0x01010006),
                     "actions": [], "categories": [], "schemes": []}
            for fl in find_all(comp, "intent-filter"):
                for act in find_all(fl, "action"):
                    v = attr(act, "name", 0x01010003)
                    if v:
                        entry["actions"].append(v)
                for cat in find_all(fl, "category"):
                    v = attr(cat, "name", 0x01010003)
                    if v:
                        entry["categories"].append(v)
                for dt in find_all(fl, "data"):
                    sch = attr(dt, "scheme", 0x01010027)
                    if sch:
                        entry["schemes"].append(sch)
            out["components"].append(entry)
    return out


if __name__ == "__main__":
    import json
    import sys
    with open(sys.argv[1], "rb") as f:
        print(json.dumps(summarize(f.read()), indent=1))
