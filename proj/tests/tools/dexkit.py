"""Minimal DEX assembler for building test fixtures.

Emits structurally valid DEX 035 files from a small symbolic instruction
set: const-string, const/int, new-instance, new-array, fill-array-data,
invoke-*, move-result*, if/goto branches, try/catch and returns. Section
ordering, id sorting, checksum and signature follow the published format.
"""

import hashlib
import struct
import zlib

NO_INDEX = 0xFFFFFFFF

ACC_PUBLIC = 0x0001
ACC_STATIC = 0x0008
ACC_INTERFACE = 0x0200
ACC_ABSTRACT = 0x0400
ACC_CONSTRUCTOR = 0x10000


def uleb128(value):
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def sleb128(value):
    out = bytearray()
    more = True
    while more:
        b = value & 0x7F
        value >>= 7
        if (value == 0 and not (b & 0x40)) or (value == -1 and (b & 0x40)):
            more = False
        else:
            b |= 0x80
        out.append(b)
    return bytes(out)


def mutf8(s):
    out = bytearray()
    for ch in s:
        cp = ord(ch)
        if cp == 0:
            out += b"\xc0\x80"
        elif cp < 0x80:
            out.append(cp)
        elif cp < 0x800:
            out.append(0xC0 | (cp >> 6))
            out.append(0x80 | (cp & 0x3F))
        elif cp < 0x10000:
            out.append(0xE0 | (cp >> 12))
            out.append(0x80 | ((cp >> 6) & 0x3F))
            out.append(0x80 | (cp & 0x3F))
        else:
            cp -= 0x10000
            hi = 0xD800 | (cp >> 10)
            lo = 0xDC00 | (cp & 0x3FF)
            for unit in (hi, lo):
                out.append(0xE0 | (unit >> 12))
                out.append(0x80 | ((unit >> 6) & 0x3F))
                out.append(0x80 | (unit & 0x3F))
    return bytes(out)


def utf16_len(s):
    return sum(2 if ord(c) > 0xFFFF else 1 for c in s)


def param_words(descriptor):
    """Register words consumed by the parameters of a method descriptor."""
    assert descriptor.startswith("(")
    i, words = 1, 0
    while descriptor[i] != ")":
        c = descriptor[i]
        if c in "JD":
            words += 2
            i += 1
        elif c == "L":
            words += 1
            i = descriptor.index(";", i) + 1
        elif c == "[":
            i += 1
            continue
        else:
            words += 1
            i += 1
    return words


def split_params(descriptor):
    assert descriptor.startswith("(")
    params = []
    i = 1
    while descriptor[i] != ")":
        start = i
        while descriptor[i] == "[":
            i += 1
        if descriptor[i] == "L":
            i = descriptor.index(";", i) + 1
        else:
            i += 1
        params.append(descriptor[start:i])
    return params, descriptor[i + 1:]


def shorty_of(descriptor):
    params, ret = split_params(descriptor)

    def sc(d):
        if d.startswith("[") or d.startswith("L"):
            return "L"
        return d

    return sc(ret) + "".join(sc(p) for p in params)


class Insn:
    """One symbolic instruction; encoded once ids are assigned."""

    def __init__(self, kind, **kw):
        self.kind = kind
        self.kw = kw
        self.addr = None  # code units, assigned at layout


class Method:
    def __init__(self, cls, name, descriptor, access, registers):
        self.cls = cls
        self.name = name
        self.descriptor = descriptor
        self.access = access
        self.registers = registers
        self.insns = []
        self.labels = {}
        self.tries = []  # (start_label, end_label, handler_label, type or None)

    # -- emit helpers -------------------------------------------------
    def label(self, name):
        self.labels[name] = len(self.insns)
        return self

    def const_string(self, reg, value):
        self.insns.append(Insn("const-string", reg=reg, value=value))
        return self

    def const_string_raw(self, reg, raw_bytes, utf16_size):
        """const-string whose pool data is arbitrary bytes (bad MUTF-8 tests)."""
        self.insns.append(
            Insn("const-string-raw", reg=reg, raw=raw_bytes, u16=utf16_size))
        return self

    def const4(self, reg, lit):
        self.insns.append(Insn("const4", reg=reg, lit=lit))
        return self

    def const16(self, reg, lit):
        self.insns.append(Insn("const16", reg=reg, lit=lit))
        return self

    def const32(self, reg, lit):
        self.insns.append(Insn("const32", reg=reg, lit=lit))
        return self

    def new_instance(self, reg, type_desc):
        self.insns.append(Insn("new-instance", reg=reg, type=type_desc))
        return self

    def new_array(self, reg, size_reg, type_desc):
        self.insns.append(
            Insn("new-array", reg=reg, size_reg=size_reg, type=type_desc))
        return self

    def fill_array_data(self, reg, width, values):
        self.insns.append(Insn("fill-array-data", reg=reg, width=width,
                               values=list(values)))
        return self

    def invoke(self, kind, owner, name, descriptor, regs):
        assert kind in ("virtual", "super", "direct", "static", "interface")
        self.insns.append(Insn("invoke", ikind=kind, owner=owner, name=name,
                               descriptor=descriptor, regs=list(regs)))
        return self

    def move_result(self, reg, flavor="object"):
        self.insns.append(Insn("move-result", reg=reg, flavor=flavor))
        return self

    def goto(self, label):
        self.insns.append(Insn("goto", label=label))
        return self

    def if_eqz(self, reg, label):
        self.insns.append(Insn("if-eqz", reg=reg, label=label))
        return self

    def ret_void(self):
        self.insns.append(Insn("return-void"))
        return self

    def ret(self, reg, flavor="plain"):
        self.insns.append(Insn("return", reg=reg, flavor=flavor))
        return self

    def throw(self, reg):
        self.insns.append(Insn("throw", reg=reg))
        return self

    def try_catch(self, start_label, end_label, handler_label, type_desc=None):
        self.tries.append((start_label, end_label, handler_label, type_desc))
        return self


class Class:
    def __init__(self, descriptor, superclass="Ljava/lang/Object;",
                 interfaces=(), access=ACC_PUBLIC):
        self.descriptor = descriptor
        self.superclass = superclass
        self.interfaces = list(interfaces)
        self.access = access
        self.methods = []

    def method(self, name, descriptor, access=ACC_PUBLIC | ACC_STATIC,
               registers=8):
        m = Method(self, name, descriptor, access, registers)
        self.methods.append(m)
        return m


class DexWriter:
    def __init__(self, version=b"035"):
        self.version = version
        self.classes = []

    def cls(self, descriptor, superclass="Ljava/lang/Object;", interfaces=(),
            access=ACC_PUBLIC):
        c = Class(descriptor, superclass, interfaces, access)
        self.classes.append(c)
        return c

    # -- assembly -----------------------------------------------------
    def build(self):
        # Collect the string/type/proto/method universes.
        strings = set()
        types = set()
        protos = set()   # (shorty, return, params tuple)
        methods = set()  # (class_desc, name, descriptor)
        raw_strings = {}  # key -> (raw bytes, utf16 size) for bad-MUTF8 pool slots

        def add_type(desc):
            types.add(desc)
            strings.add(desc)

        def add_proto(descriptor):
            params, ret = split_params(descriptor)
            sh = shorty_of(descriptor)
            strings.add(sh)
            add_type(ret)
            for p in params:
                add_type(p)
            protos.add((sh, ret, tuple(params)))

        def add_method(owner, name, descriptor):
            add_type(owner)
            strings.add(name)
            add_proto(descriptor)
            methods.add((owner, name, descriptor))

        for c in self.classes:
            add_type(c.descriptor)
            if c.superclass:
                add_type(c.superclass)
            for i in c.interfaces:
                add_type(i)
            for m in c.methods:
                add_method(c.descriptor, m.name, m.descriptor)
                for ins in m.insns:
                    if ins.kind == "const-string":
                        strings.add(ins.kw["value"])
                    elif ins.kind == "const-string-raw":
                        key = "\x00raw%d" % len(raw_strings)
                        ins.kw["key"] = key
                        raw_strings[key] = (ins.kw["raw"], ins.kw["u16"])
                        strings.add(key)
                    elif ins.kind in ("new-instance", "new-array"):
                        add_type(ins.kw["type"])
                    elif ins.kind == "invoke":
                        add_method(ins.kw["owner"], ins.kw["name"],
                                   ins.kw["descriptor"])
                for t in m.tries:
                    if t[3]:
                        add_type(t[3])

        # String ids sorted by UTF-16 code unit order (ASCII == byte order).
        string_list = sorted(strings)
        string_id = {s: i for i, s in enumerate(string_list)}
        type_list_sorted = sorted(types, key=lambda t: string_id[t])
        type_id = {t: i for i, t in enumerate(type_list_sorted)}
        proto_list = sorted(
            protos, key=lambda p: (type_id[p[1]],
                                   tuple(type_id[x] for x in p[2])))
        proto_id = {p: i for i, p in enumerate(proto_list)}

        def proto_key(descriptor):
            params, ret = split_params(descriptor)
            return (shorty_of(descriptor), ret, tuple(params))

        method_list = sorted(
            methods, key=lambda m: (type_id[m[0]], string_id[m[1]],
                                    proto_id[proto_key(m[2])]))
        method_id = {m: i for i, m in enumerate(method_list)}

        class_order = sorted(self.classes, key=lambda c: type_id[c.descriptor])

        # ---- data section ----
        data = bytearray()
        data_base = (0x70 + 4 * len(string_list) + 4 * len(type_list_sorted)
                     + 12 * len(proto_list) + 8 * len(method_list)
                     + 32 * len(class_order))

        def align4():
            while (data_base + len(data)) % 4:
                data.append(0)

        map_items = []  # (type_code, count, offset)

        # type_lists for protos and interfaces
        type_list_off = {}

        def put_type_list(tl):
            tl = tuple(tl)
            if not tl:
                return 0
            if tl in type_list_off:
                return type_list_off[tl]
            align4()
            off = data_base + len(data)
            data.extend(struct.pack("<I", len(tl)))
            for t in tl:
                data.extend(struct.pack("<H", type_id[t]))
            if len(tl) % 2:
                data.extend(b"\x00\x00")
            type_list_off[tl] = off
            return off

        proto_params_off = {}
        first_tl = None
        n_type_lists = 0
        for p in proto_list:
            off = put_type_list(p[2])
            proto_params_off[p] = off
        iface_off = {}
        for c in class_order:
            iface_off[c.descriptor] = put_type_list(c.interfaces)
        if type_list_off:
            first_tl = min(type_list_off.values())
            n_type_lists = len(type_list_off)
            map_items.append((0x1001, n_type_lists, first_tl))

        # code items
        code_off = {}
        first_code = None
        n_code = 0
        for c in class_order:
            for m in c.methods:
                if not m.insns:
                    continue
                code = self._encode_code(m, string_id, type_id, method_id,
                                         proto_key)
                align4()
                off = data_base + len(data)
                if first_code is None:
                    first_code = off
                data.extend(code)
                code_off[(c.descriptor, m.name, m.descriptor)] = off
                n_code += 1
        if n_code:
            map_items.append((0x2001, n_code, first_code))

        # string data
        string_data_off = []
        first_sd = data_base + len(data)
        for s in string_list:
            string_data_off.append(data_base + len(data))
            if s in raw_strings:
                raw, u16 = raw_strings[s]
                data.extend(uleb128(u16))
                data.extend(raw)
                data.append(0)
            else:
                data.extend(uleb128(utf16_len(s)))
                data.extend(mutf8(s))
                data.append(0)
        map_items.append((0x2002, len(string_list), first_sd))

        # class data
        class_data_off = {}
        first_cd = None
        n_cd = 0
        for c in class_order:
            if not c.methods:
                continue
            if first_cd is None:
                first_cd = data_base + len(data)
            off = data_base + len(data)
            direct = sorted(
                [m for m in c.methods if m.access & (ACC_STATIC | ACC_CONSTRUCTOR)],
                key=lambda m: method_id[(c.descriptor, m.name, m.descriptor)])
            virtual = sorted(
                [m for m in c.methods if m not in direct],
                key=lambda m: method_id[(c.descriptor, m.name, m.descriptor)])
            blob = bytearray()
            blob.extend(uleb128(0))  # static fields
            blob.extend(uleb128(0))  # instance fields
            blob.extend(uleb128(len(direct)))
            blob.extend(uleb128(len(virtual)))
            for group in (direct, virtual):
                prev = 0
                for m in group:
                    mi = method_id[(c.descriptor, m.name, m.descriptor)]
                    blob.extend(uleb128(mi - prev))
                    prev = mi
                    blob.extend(uleb128(m.access & 0xFFFF))
                    blob.extend(uleb128(
                        code_off.get((c.descriptor, m.name, m.descriptor), 0)))
            data.extend(blob)
            class_data_off[c.descriptor] = off
            n_cd += 1
        if n_cd:
            map_items.append((0x2000, n_cd, first_cd))

        # map list
        align4()
        map_off = data_base + len(data)
        # build id-section map entries
        head_items = [(0x0000, 1, 0),
                      (0x0001, len(string_list), 0x70),
                      (0x0002, len(type_list_sorted),
                       0x70 + 4 * len(string_list))]
        off_protos = 0x70 + 4 * len(string_list) + 4 * len(type_list_sorted)
        if proto_list:
            head_items.append((0x0003, len(proto_list), off_protos))
        off_methods = off_protos + 12 * len(proto_list)
        if method_list:
            head_items.append((0x0005, len(method_list), off_methods))
        off_classdefs = off_methods + 8 * len(method_list)
        if class_order:
            head_items.append((0x0006, len(class_order), off_classdefs))
        all_items = head_items + map_items + [(0x1000, 1, map_off)]
        all_items.sort(key=lambda it: it[2])
        data.extend(struct.pack("<I", len(all_items)))
        for t, n, off in all_items:
            data.extend(struct.pack("<HHII", t, 0, n, off))

        # ---- id sections ----
        out = bytearray()
        out.extend(b"dex\n" + self.version + b"\x00")
        out.extend(b"\x00" * 4)    # checksum placeholder
        out.extend(b"\x00" * 20)   # signature placeholder
        file_size = data_base + len(data)
        out.extend(struct.pack("<I", file_size))
        out.extend(struct.pack("<I", 0x70))
        out.extend(struct.pack("<I", 0x12345678))
        out.extend(struct.pack("<II", 0, 0))  # link
        out.extend(struct.pack("<I", map_off))
        out.extend(struct.pack("<II", len(string_list), 0x70))
        out.extend(struct.pack("<II", len(type_list_sorted),
                               0x70 + 4 * len(string_list)))
        out.extend(struct.pack("<II", len(proto_list),
                               off_protos if proto_list else 0))
        out.extend(struct.pack("<II", 0, 0))  # field ids
        out.extend(struct.pack("<II", len(method_list),
                               off_methods if method_list else 0))
        out.extend(struct.pack("<II", len(class_order),
                               off_classdefs if class_order else 0))
        out.extend(struct.pack("<II", len(data), data_base))
        assert len(out) == 0x70

        for off in string_data_off:
            out.extend(struct.pack("<I", off))
        for t in type_list_sorted:
            out.extend(struct.pack("<I", string_id[t]))
        for p in proto_list:
            out.extend(struct.pack("<III", string_id[p[0]], type_id[p[1]],
                                   proto_params_off[p]))
        for owner, name, desc in method_list:
            out.extend(struct.pack("<HHI", type_id[owner],
                                   proto_id[proto_key(desc)], string_id[name]))
        for c in class_order:
            out.extend(struct.pack(
                "<IIIIIIII", type_id[c.descriptor], c.access & 0xFFFF,
                type_id[c.superclass] if c.superclass else NO_INDEX,
                iface_off[c.descriptor], NO_INDEX, 0,
                class_data_off.get(c.descriptor, 0), 0))
        assert len(out) == data_base
        out.extend(data)

        sig = hashlib.sha1(out[32:]).digest()
        out[12:32] = sig
        csum = zlib.adler32(bytes(out[12:])) & 0xFFFFFFFF
        out[8:12] = struct.pack("<I", csum)
        return bytes(out)

    # -- instruction encoding ------------------------------------------
    def _encode_code(self, m, string_id, type_id, method_id, proto_key):
        KIND_OP = {"virtual": 0x6E, "super": 0x6F, "direct": 0x70,
                   "static": 0x71, "interface": 0x72}

        def insn_units(ins):
            k = ins.kind
            if k in ("const-string", "const-string-raw"):
                return 2
            if k == "const4":
                return 1
            if k == "const16":
                return 2
            if k == "const32":
                return 3
            if k == "new-instance":
                return 2
            if k == "new-array":
                return 2
            if k == "fill-array-data":
                return 3
            if k == "invoke":
                return 3
            if k == "move-result":
                return 1
            if k == "goto":
                return 1
            if k == "if-eqz":
                return 2
            if k == "return-void":
                return 1
            if k == "return":
                return 1
            if k == "throw":
                return 1
            raise ValueError(k)

        # layout pass
        addr = 0
        addrs = []
        for ins in m.insns:
            ins.addr = addr
            addrs.append(addr)
            addr += insn_units(ins)
        total = addr
        label_addr = {name: m.insns[idx].addr if idx < len(m.insns) else total
                      for name, idx in m.labels.items()}

        # payloads appended after the code (after a padding nop if needed)
        payloads = []  # (source insn, payload units list)
        payload_addr = {}
        paddr = total
        if any(i.kind == "fill-array-data" for i in m.insns):
            if paddr % 2:
                paddr += 1
            for ins in m.insns:
                if ins.kind != "fill-array-data":
                    continue
                width = ins.kw["width"]
                vals = ins.kw["values"]
                blob = bytearray()
                for v in vals:
                    blob.extend(int(v).to_bytes(width, "little", signed=v < 0))
                if len(blob) % 2:
                    blob.append(0)
                units = [0x0300, width] + \
                    list(struct.unpack("<2H", struct.pack("<I", len(vals)))) + \
                    list(struct.unpack("<%dH" % (len(blob) // 2), bytes(blob)))
                payload_addr[id(ins)] = paddr
                payloads.append(units)
                paddr += len(units)

        units = []
        outs = 0
        for ins in m.insns:
            k = ins.kind
            kw = ins.kw
            if k == "const-string":
                sid = string_id[kw["value"]]
                assert sid < 0x10000
                units += [0x1A | (kw["reg"] << 8), sid]
            elif k == "const-string-raw":
                sid = string_id[kw["key"]]
                units += [0x1A | (kw["reg"] << 8), sid]
            elif k == "const4":
                units += [0x12 | (kw["reg"] << 8) | ((kw["lit"] & 0xF) << 12)]
            elif k == "const16":
                units += [0x13 | (kw["reg"] << 8), kw["lit"] & 0xFFFF]
            elif k == "const32":
                lit = kw["lit"] & 0xFFFFFFFF
                units += [0x14 | (kw["reg"] << 8), lit & 0xFFFF, lit >> 16]
            elif k == "new-instance":
                units += [0x22 | (kw["reg"] << 8), type_id[kw["type"]]]
            elif k == "new-array":
                units += [0x23 | (kw["reg"] << 8) | (kw["size_reg"] << 12),
                          type_id[kw["type"]]]
            elif k == "fill-array-data":
                off = payload_addr[id(ins)] - ins.addr
                units += [0x26 | (kw["reg"] << 8), off & 0xFFFF,
                          (off >> 16) & 0xFFFF]
            elif k == "invoke":
                mid = method_id[(kw["owner"], kw["name"], kw["descriptor"])]
                regs = kw["regs"]
                assert len(regs) <= 5
                outs = max(outs, len(regs))
                g = regs[4] if len(regs) > 4 else 0
                unit0 = KIND_OP[kw["ikind"]] | (len(regs) << 12) | (g << 8)
                cdef = [0, 0, 0, 0]
                for i, r in enumerate(regs[:4]):
                    cdef[i] = r
                unit2 = cdef[0] | (cdef[1] << 4) | (cdef[2] << 8) | (cdef[3] << 12)
                units += [unit0, mid, unit2]
            elif k == "move-result":
                op = {"plain": 0x0A, "wide": 0x0B, "object": 0x0C}[kw["flavor"]]
                units += [op | (kw["reg"] << 8)]
            elif k == "goto":
                off = label_addr[kw["label"]] - ins.addr
                assert -128 <= off <= 127
                units += [0x28 | ((off & 0xFF) << 8)]
            elif k == "if-eqz":
                off = label_addr[kw["label"]] - ins.addr
                units += [0x38 | (kw["reg"] << 8), off & 0xFFFF]
            elif k == "return-void":
                units += [0x0E]
            elif k == "return":
                op = {"plain": 0x0F, "wide": 0x10, "object": 0x11}[kw["flavor"]]
                units += [op | (kw["reg"] << 8)]
            elif k == "throw":
                units += [0x27 | (kw["reg"] << 8)]
            else:
                raise ValueError(k)
        if payloads:
            if len(units) % 2:
                units.append(0x0000)
            for p in payloads:
                units += p

        ins_words = param_words(m.descriptor)
        if not (m.access & ACC_STATIC):
            ins_words += 1

        body = bytearray()
        body.extend(struct.pack("<HHHH", m.registers, ins_words, outs,
                                len(m.tries)))
        body.extend(struct.pack("<I", 0))  # debug_info_off
        body.extend(struct.pack("<I", len(units)))
        for u in units:
            body.extend(struct.pack("<H", u & 0xFFFF))
        if m.tries:
            if len(units) % 2:
                body.extend(b"\x00\x00")
            handler_blob = bytearray()
            handler_blob.extend(uleb128(len(m.tries)))
            handler_offsets = []
            for (s, e, h, tdesc) in m.tries:
                handler_offsets.append(len(handler_blob))
                if tdesc:
                    handler_blob.extend(sleb128(1))
                    handler_blob.extend(uleb128(type_id[tdesc]))
                    handler_blob.extend(uleb128(label_addr[h]))
                else:
                    handler_blob.extend(sleb128(0))
                    handler_blob.extend(uleb128(label_addr[h]))
            for i, (s, e, h, tdesc) in enumerate(m.tries):
                start = label_addr[s]
                count = label_addr[e] - start
                body.extend(struct.pack("<IHH", start, count,
                                        handler_offsets[i]))
            body.extend(handler_blob)
        return bytes(body)
