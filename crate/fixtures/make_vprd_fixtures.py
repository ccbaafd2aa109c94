"""Regenerate the VPRD loader fixtures: one valid file and one file per
rejected corruption."""
import math
import os
import struct

OUT = os.path.join(os.path.dirname(__file__), "vprd")


def pstr(s):
    b = s if isinstance(s, bytes) else s.encode()
    return struct.pack("<H", len(b)) + b


def build(magic=b"VPRD", version=1, reserved=0, count=2, dim=3, label="hog",
          values=None, names=("a.png", "b.png")):
    if values is None:
        values = [float(i) for i in range(count * dim)]
    out = magic + struct.pack("<HHII", version, reserved, count, dim) + pstr(label)
    out += b"".join(struct.pack("<f", v) for v in values)
    out += b"".join(pstr(n) for n in names)
    return out


GOOD = build()

CASES = {
    "good.vprd": GOOD,
    "bad_magic.vprd": build(magic=b"VPRX"),
    "bad_version.vprd": build(version=2),
    "bad_reserved.vprd": build(reserved=1),
    "bad_zero_count.vprd": build(count=0, values=[], names=()),
    "bad_zero_dim.vprd": build(dim=0, values=[]),
    "bad_empty.vprd": b"",
    "bad_short_header.vprd": GOOD[:10],
    "bad_truncated_body.vprd": GOOD[:30],
    "bad_truncated_names.vprd": GOOD[:-3],
    "bad_count_mismatch.vprd": build(count=3),
    "bad_huge_count.vprd": build(count=0xFFFFFFFF, dim=0xFFFFFFFF, values=[], names=()),
    "bad_nan.vprd": build(values=[0.0, 1.0, math.nan, 3.0, 4.0, 5.0]),
    "bad_inf.vprd": build(values=[0.0, 1.0, 2.0, 3.0, math.inf, 5.0]),
    "bad_label_utf8.vprd": build(label=b"\xff\xfe"),
    "bad_label_overrun.vprd": GOOD[:16] + struct.pack("<H", 60000) + GOOD[18:],
    "bad_trailing.vprd": GOOD + b"\x00",
}

os.makedirs(OUT, exist_ok=True)
for name, data in CASES.items():
    with open(os.path.join(OUT, name), "wb") as f:
        f.write(data)
