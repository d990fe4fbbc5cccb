"""JVM class-file writer for building .jar/.aar bytecode fixtures."""

import struct

ACC_PUBLIC = 0x0001
ACC_STATIC = 0x0008
ACC_INTERFACE = 0x0200
ACC_ABSTRACT = 0x0400
ACC_SUPER = 0x0020


class ConstPool:
    def __init__(self):
        self.entries = []  # list of raw bytes
        self.index = {}    # key -> cp index (1-based)

    def _add(self, key, blob):
        if key in self.index:
            return self.index[key]
        self.entries.append(blob)
        idx = len(self.entries)
        self.index[key] = idx
        return idx

    def utf8(self, s):
        b = s.encode("utf-8")
        return self._add(("u", s), struct.pack(">BH", 1, len(b)) + b)

    def integer(self, v):
        return self._add(("i", v), struct.pack(">Bi", 3, v))

    def klass(self, name):
        return self._add(("c", name),
                         struct.pack(">BH", 7, self.utf8(name)))

    def string(self, s):
        return self._add(("s", s), struct.pack(">BH", 8, self.utf8(s)))

    def nat(self, name, desc):
        return self._add(("n", name, desc),
                         struct.pack(">BHH", 12, self.utf8(name),
                                     self.utf8(desc)))

    def methodref(self, owner, name, desc, interface=False):
        tag = 11 if interface else 10
        return self._add((tag, owner, name, desc),
                         struct.pack(">BHH", tag, self.klass(owner),
                                     self.nat(name, desc)))

    def fieldref(self, owner, name, desc):
        return self._add((9, owner, name, desc),
                         struct.pack(">BHH", 9, self.klass(owner),
                                     self.nat(name, desc)))

    def build(self):
        return struct.pack(">H", len(self.entries) + 1) + \
            b"".join(self.entries)


def jvm_arg_slots(descriptor):
    assert descriptor.startswith("(")
    i, slots = 1, 0
    while descriptor[i] != ")":
        c = descriptor[i]
        if c in "JD":
            slots += 2
            i += 1
        elif c == "L":
            slots += 1
            i = descriptor.index(";", i) + 1
        elif c == "[":
            i += 1
            continue
        else:
            slots += 1
            i += 1
    return slots


class Code:
    """Bytecode assembler with labels (two-pass, fixed 3-byte branches)."""

    def __init__(self, cp):
        self.cp = cp
        self.ops = []     # (mnemonic, args)
        self.labels = {}  # name -> op index
        self.exceptions = []  # (start, end, handler, class or None)

    def label(self, name):
        self.labels[name] = len(self.ops)
        return self

    def ldc_str(self, s):
        self.ops.append(("ldc_str", s))
        return self

    def ldc_int(self, v):
        if -1 <= v <= 5:
            self.ops.append(("iconst", v))
        elif -128 <= v <= 127:
            self.ops.append(("bipush", v))
        elif -32768 <= v <= 32767:
            self.ops.append(("sipush", v))
        else:
            self.ops.append(("ldc_int", v))
        return self

    def aconst_null(self):
        self.ops.append(("aconst_null",))
        return self

    def new(self, cls):
        self.ops.append(("new", cls))
        return self

    def dup(self):
        self.ops.append(("dup",))
        return self

    def pop(self):
        self.ops.append(("pop",))
        return self

    def astore(self, slot):
        self.ops.append(("astore", slot))
        return self

    def aload(self, slot):
        self.ops.append(("aload", slot))
        return self

    def istore(self, slot):
        self.ops.append(("istore", slot))
        return self

    def iload(self, slot):
        self.ops.append(("iload", slot))
        return self

    def newarray_byte(self, _count_already_on_stack=True):
        self.ops.append(("newarray", 8))
        return self

    def invoke(self, kind, owner, name, desc):
        assert kind in ("virtual", "static", "special", "interface")
        self.ops.append(("invoke", kind, owner, name, desc))
        return self

    def getstatic(self, owner, name, desc):
        self.ops.append(("getstatic", owner, name, desc))
        return self

    def goto(self, label):
        self.ops.append(("goto", label))
        return self

    def ifeq(self, label):
        self.ops.append(("ifeq", label))
        return self

    def ret_void(self):
        self.ops.append(("return",))
        return self

    def areturn(self):
        self.ops.append(("areturn",))
        return self

    def ireturn(self):
        self.ops.append(("ireturn",))
        return self

    def athrow(self):
        self.ops.append(("athrow",))
        return self

    def try_catch(self, start, end, handler, cls=None):
        self.exceptions.append((start, end, handler, cls))
        return self

    # -- encoding --
    def _op_len(self, op):
        k = op[0]
        if k in ("iconst", "dup", "pop", "return", "areturn", "ireturn",
                 "athrow", "aconst_null"):
            return 1
        if k == "bipush":
            return 2
        if k in ("sipush", "ldc_int_w",):
            return 3
        if k == "ldc_str":
            idx = self.cp.string(op[1])
            return 2 if idx < 256 else 3
        if k == "ldc_int":
            idx = self.cp.integer(op[1])
            return 2 if idx < 256 else 3
        if k in ("astore", "aload", "istore", "iload"):
            return 1 if op[1] <= 3 else 2
        if k == "newarray":
            return 2
        if k in ("new",):
            return 3
        if k == "invoke":
            return 5 if op[1] == "interface" else 3
        if k == "getstatic":
            return 3
        if k in ("goto", "ifeq"):
            return 3
        raise ValueError(k)

    def assemble(self):
        # intern pool entries and compute addresses
        addrs = []
        pc = 0
        for op in self.ops:
            addrs.append(pc)
            pc += self._op_len(op)
        total = pc
        label_pc = {name: (addrs[i] if i < len(addrs) else total)
                    for name, i in self.labels.items()}
        out = bytearray()
        for i, op in enumerate(self.ops):
            k = op[0]
            pc = addrs[i]
            if k == "iconst":
                out.append(0x03 + op[1])  # iconst_m1 == 0x02
            elif k == "aconst_null":
                out.append(0x01)
            elif k == "bipush":
                out += struct.pack(">Bb", 0x10, op[1])
            elif k == "sipush":
                out += struct.pack(">Bh", 0x11, op[1])
            elif k == "ldc_str":
                idx = self.cp.string(op[1])
                if idx < 256:
                    out += struct.pack(">BB", 0x12, idx)
                else:
                    out += struct.pack(">BH", 0x13, idx)
            elif k == "ldc_int":
                idx = self.cp.integer(op[1])
                if idx < 256:
                    out += struct.pack(">BB", 0x12, idx)
                else:
                    out += struct.pack(">BH", 0x13, idx)
            elif k == "new":
                out += struct.pack(">BH", 0xBB, self.cp.klass(op[1]))
            elif k == "dup":
                out.append(0x59)
            elif k == "pop":
                out.append(0x57)
            elif k == "astore":
                if op[1] <= 3:
                    out.append(0x4B + op[1])
                else:
                    out += struct.pack(">BB", 0x3A, op[1])
            elif k == "aload":
                if op[1] <= 3:
                    out.append(0x2A + op[1])
                else:
                    out += struct.pack(">BB", 0x19, op[1])
            elif k == "istore":
                if op[1] <= 3:
                    out.append(0x3B + op[1])
                else:
                    out += struct.pack(">BB", 0x36, op[1])
            elif k == "iload":
                if op[1] <= 3:
                    out.append(0x1A + op[1])
                else:
                    out += struct.pack(">BB", 0x15, op[1])
            elif k == "newarray":
                out += struct.pack(">BB", 0xBC, op[1])
            elif k == "invoke":
                kind, owner, name, desc = op[1], op[2], op[3], op[4]
                iface = kind == "interface"
                idx = self.cp.methodref(owner, name, desc, interface=iface)
                opcode = {"virtual": 0xB6, "special": 0xB7,
                          "static": 0xB8, "interface": 0xB9}[kind]
                if iface:
                    count = jvm_arg_slots(desc) + 1
                    out += struct.pack(">BHBB", opcode, idx, count, 0)
                else:
                    out += struct.pack(">BH", opcode, idx)
            elif k == "getstatic":
                idx = self.cp.fieldref(op[1], op[2], op[3])
                out += struct.pack(">BH", 0xB2, idx)
            elif k in ("goto", "ifeq"):
                target = label_pc[op[1]]
                opcode = 0xA7 if k == "goto" else 0x99
                out += struct.pack(">Bh", opcode, target - pc)
            elif k == "return":
                out.append(0xB1)
            elif k == "areturn":
                out.append(0xB0)
            elif k == "ireturn":
                out.append(0xAC)
            else:
                raise ValueError(k)
        assert len(out) == total
        ex = []
        for (s, e, h, cls) in self.exceptions:
            ex.append((label_pc[s], label_pc[e], label_pc[h],
                       self.cp.klass(cls) if cls else 0))
        return bytes(out), ex


class ClassWriter:
    def __init__(self, name, superclass="java/lang/Object", interfaces=(),
                 access=ACC_PUBLIC | ACC_SUPER, major=52):
        self.cp = ConstPool()
        self.name = name
        self.superclass = superclass
        self.interfaces = list(interfaces)
        self.access = access
        self.major = major
        self.methods = []  # (access, name, desc, Code or None)

    def method(self, name, desc, access=ACC_PUBLIC | ACC_STATIC):
        code = Code(self.cp)
        self.methods.append((access, name, desc, code))
        return code

    def abstract_method(self, name, desc,
                        access=ACC_PUBLIC | ACC_ABSTRACT):
        self.methods.append((access, name, desc, None))
        return None

    def build(self):
        cp = self.cp
        this_idx = cp.klass(self.name)
        super_idx = cp.klass(self.superclass) if self.superclass else 0
        iface_idx = [cp.klass(i) for i in self.interfaces]
        code_attr_name = cp.utf8("Code")

        method_blobs = []
        for (access, name, desc, code) in self.methods:
            n_idx = cp.utf8(name)
            d_idx = cp.utf8(desc)
            if code is None:
                method_blobs.append(struct.pack(">HHHH", access, n_idx,
                                                d_idx, 0))
                continue
            bytecode, ex = code.assemble()
            body = struct.pack(">HHI", 16, 16, len(bytecode)) + bytecode
            body += struct.pack(">H", len(ex))
            for (s, e, h, c) in ex:
                body += struct.pack(">HHHH", s, e, h, c)
            body += struct.pack(">H", 0)  # code attributes
            attr = struct.pack(">HI", code_attr_name, len(body)) + body
            method_blobs.append(struct.pack(">HHHH", access, n_idx, d_idx, 1)
                                + attr)

        out = bytearray()
        out += struct.pack(">IHH", 0xCAFEBABE, 0, self.major)
        out += cp.build()
        out += struct.pack(">HHH", self.access, this_idx, super_idx)
        out += struct.pack(">H", len(iface_idx))
        for i in iface_idx:
            out += struct.pack(">H", i)
        out += struct.pack(">H", 0)  # fields
        out += struct.pack(">H", len(method_blobs))
        for m in method_blobs:
            out += m
        out += struct.pack(">H", 0)  # class attributes
        return bytes(out)
