"""Plain-text serialization: datasets, masks, scenes, lattices, groups,
offset sets, solved models, and Gramian debug dumps.

Datasets and masks are strict machine formats (floats via repr, so a
write/parse round trip is byte-exact).  Scenes, lattices, groups, and offset
lists are human formats: blank lines and '#' comments are skipped.
"""

import math

import numpy as np

from .lattice import make_lattice, make_group
from .spectral import Ball, Box, FrequencyGrid, PWMask, Scene, SpectralDataset

__all__ = [
    "format_dataset", "parse_dataset", "read_dataset", "write_dataset",
    "format_mask", "parse_mask", "read_mask", "write_mask",
    "parse_scene", "read_scene",
    "parse_lattice", "read_lattice", "parse_lattice_list", "read_lattice_list",
    "parse_group_file", "read_group_file",
    "parse_offsets", "read_offsets",
    "write_model", "write_gramian",
]


def _fmt(x):
    return repr(float(x))


class _Lines:
    """Line cursor with 1-based positions for error messages."""

    def __init__(self, text, name, comments):
        self.name = name
        self.raw = text.splitlines()
        self.pos = 0
        self.comments = comments

    def fail(self, lineno, msg):
        raise ValueError("%s line %d: %s" % (self.name, lineno, msg))

    def next(self, what):
        while self.pos < len(self.raw):
            self.pos += 1
            s = self.raw[self.pos - 1].strip()
            if not s:
                continue
            if self.comments and s.startswith("#"):
                continue
            return s, self.pos
        raise ValueError("%s: expected %s, got end of file" % (self.name, what))

    def done(self):
        while self.pos < len(self.raw):
            self.pos += 1
            s = self.raw[self.pos - 1].strip()
            if s and not (self.comments and s.startswith("#")):
                self.fail(self.pos, "unexpected trailing content")


def _tagged(lines, tag, count=None):
    s, no = lines.next("'%s ...'" % tag)
    toks = s.split()
    if toks[0] != tag:
        lines.fail(no, "expected '%s', got %r" % (tag, toks[0]))
    if count is not None and len(toks) - 1 != count:
        lines.fail(no, "'%s' takes %d values, got %d" % (tag, count, len(toks) - 1))
    return toks[1:], no


def _ints(lines, toks, no):
    try:
        return [int(t) for t in toks]
    except ValueError:
        lines.fail(no, "expected integers, got %r" % " ".join(toks))


def _floats(lines, toks, no):
    try:
        return [float(t) for t in toks]
    except ValueError:
        lines.fail(no, "expected numbers, got %r" % " ".join(toks))


def _header_grid(lines, kind):
    s, no = lines.next("header")
    if s != kind:
        lines.fail(no, "unrecognized header %r (expected %r)" % (s, kind))
    (tok,), no = _tagged(lines, "dim", 1)
    d = _ints(lines, [tok], no)[0]
    if d < 1:
        lines.fail(no, "dim must be positive")
    toks, no = _tagged(lines, "lattice", d * d)
    try:
        lat = make_lattice(np.array(_floats(lines, toks, no)).reshape(d, d))
    except ValueError as e:
        lines.fail(no, str(e))
    (tok,), no = _tagged(lines, "resolution", 1)
    r = _ints(lines, [tok], no)[0]
    (tok,), no = _tagged(lines, "offsets", 1)
    n_off = _ints(lines, [tok], no)[0]
    if n_off < 1:
        lines.fail(no, "offset count must be positive")
    file_offsets = []
    for _ in range(n_off):
        s, no = lines.next("offset line")
        row = _ints(lines, s.split(), no)
        if len(row) != d:
            lines.fail(no, "offset needs %d integers, got %d" % (d, len(row)))
        file_offsets.append(row)
    try:
        grid = FrequencyGrid(lat, r, np.array(file_offsets, dtype=np.int64))
    except ValueError as e:
        lines.fail(no, str(e))
    if grid.n_offsets != n_off:
        lines.fail(no, "duplicate offsets in file")
    perm = [grid.offset_index(k) for k in file_offsets]
    return lat, grid, perm


def format_dataset(F):
    g = F.grid
    out = [
        "pwsis-dataset v1",
        "dim %d" % g.d,
        "lattice " + " ".join(_fmt(v) for v in F.lattice.basis.ravel()),
        "resolution %d" % g.r,
        "offsets %d" % g.n_offsets,
    ]
    for k in g.offsets:
        out.append(" ".join(str(int(v)) for v in k))
    out.append("channels %d" % F.m)
    flat = F.values.reshape(-1)
    for z in flat:
        out.append("%s %s" % (_fmt(z.real), _fmt(z.imag)))
    return "\n".join(out) + "\n"


def parse_dataset(text, name="<dataset>"):
    lines = _Lines(text, name, comments=False)
    lat, grid, perm = _header_grid(lines, "pwsis-dataset v1")
    (tok,), no = _tagged(lines, "channels", 1)
    m = _ints(lines, [tok], no)[0]
    if m < 0:
        lines.fail(no, "channel count must be nonnegative")
    vals = np.zeros((m, grid.n_offsets, grid.n_cells), dtype=np.complex128)
    for i in range(m):
        for fk in range(grid.n_offsets):
            ki = perm[fk]
            for c in range(grid.n_cells):
                s, no = lines.next("value line")
                pair = _floats(lines, s.split(), no)
                if len(pair) != 2:
                    lines.fail(no, "value line needs 're im', got %r" % s)
                vals[i, ki, c] = complex(pair[0], pair[1])
    lines.done()
    return SpectralDataset(lat, grid, vals)


def format_mask(mask):
    g = mask.grid
    out = [
        "pwsis-mask v1",
        "dim %d" % g.d,
        "lattice " + " ".join(_fmt(v) for v in mask.lattice.basis.ravel()),
        "resolution %d" % g.r,
        "offsets %d" % g.n_offsets,
    ]
    for k in g.offsets:
        out.append(" ".join(str(int(v)) for v in k))
    for b in mask.bits.reshape(-1):
        out.append("1" if b else "0")
    return "\n".join(out) + "\n"


def parse_mask(text, name="<mask>"):
    lines = _Lines(text, name, comments=False)
    lat, grid, perm = _header_grid(lines, "pwsis-mask v1")
    bits = np.zeros((grid.n_offsets, grid.n_cells), dtype=bool)
    for fk in range(grid.n_offsets):
        ki = perm[fk]
        for c in range(grid.n_cells):
            s, no = lines.next("mask bit line")
            if s not in ("0", "1"):
                lines.fail(no, "mask bit must be 0 or 1, got %r" % s)
            bits[ki, c] = s == "1"
    lines.done()
    return PWMask(lat, grid, bits)


def _scene_numbers(toks):
    """Split primitive arguments at the optional 'mod' keyword."""
    if "mod" in toks:
        p = toks.index("mod")
        return toks[:p], toks[p + 1:]
    return toks, None


def parse_scene(text, name="<scene>"):
    """Scene grammar, one term per line:

      channel I coeff RE IM interval A B [mod H]
      channel I coeff RE IM box LO... HI... [mod H...]
      channel I coeff RE IM ball C... RADIUS [mod H...]
    """
    lines = _Lines(text, name, comments=True)
    scene = None
    d = None
    while True:
        try:
            s, no = lines.next("scene term")
        except ValueError:
            break
        toks = s.split()
        if len(toks) < 6 or toks[0] != "channel" or toks[2] != "coeff":
            lines.fail(no, "expected 'channel I coeff RE IM <primitive> ...', got %r" % s)
        ch = _ints(lines, toks[1:2], no)[0]
        re_im = _floats(lines, toks[3:5], no)
        coeff = complex(re_im[0], re_im[1])
        kind = toks[5]
        body, mod = _scene_numbers(toks[6:])
        nums = _floats(lines, body, no)
        if kind == "interval":
            if len(nums) != 2:
                lines.fail(no, "interval takes 2 numbers, got %d" % len(nums))
            term_d = 1
            prim = Box([nums[0]], [nums[1]])
        elif kind == "box":
            if not nums or len(nums) % 2:
                lines.fail(no, "box takes an even number of values, got %d" % len(nums))
            term_d = len(nums) // 2
            prim = Box(nums[:term_d], nums[term_d:])
        elif kind == "ball":
            if len(nums) < 2:
                lines.fail(no, "ball takes center coordinates then a radius")
            term_d = len(nums) - 1
            prim = Ball(nums[:term_d], nums[term_d])
        else:
            lines.fail(no, "unknown primitive %r" % kind)
        if d is None:
            d = term_d
            scene = Scene(d)
        elif term_d != d:
            lines.fail(no, "scene mixes dimensions %d and %d" % (d, term_d))
        h = None
        if mod is not None:
            h = _floats(lines, mod, no)
            if len(h) != d:
                lines.fail(no, "mod takes %d numbers, got %d" % (d, len(h)))
        try:
            scene.add(ch, coeff, prim, mod=h)
        except ValueError as e:
            lines.fail(no, str(e))
    if scene is None:
        raise ValueError("%s: scene has no terms" % name)
    return scene


def _human_tokens(text, name):
    toks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        toks.extend((t, lineno) for t in s.split())
    return toks


def parse_lattice(text, name="<lattice>"):
    toks = _human_tokens(text, name)
    try:
        vals = [float(t) for t, _ in toks]
    except ValueError:
        raise ValueError("%s: lattice file must contain only numbers" % name)
    d = math.isqrt(len(vals))
    if d * d != len(vals) or d == 0:
        raise ValueError("%s: lattice needs d*d entries, got %d" % (name, len(vals)))
    return make_lattice(np.array(vals).reshape(d, d))


def parse_lattice_list(text, name="<lattices>"):
    """One lattice per non-comment line (d*d row-major entries)."""
    rows = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            vals = [float(t) for t in s.split()]
        except ValueError:
            raise ValueError("%s line %d: expected numbers" % (name, lineno))
        d = math.isqrt(len(vals))
        if d * d != len(vals) or d == 0:
            raise ValueError("%s line %d: lattice needs d*d entries, got %d"
                             % (name, lineno, len(vals)))
        rows[lineno] = make_lattice(np.array(vals).reshape(d, d))
    if not rows:
        raise ValueError("%s: no lattices given" % name)
    lats = list(rows.values())
    if len({lat.d for lat in lats}) != 1:
        raise ValueError("%s: lattices mix dimensions" % name)
    return lats


def parse_group_file(text, d, name="<group>"):
    toks = _human_tokens(text, name)
    try:
        vals = [int(t) for t, _ in toks]
    except ValueError:
        raise ValueError("%s: group file must contain only integers" % name)
    per = d * d
    if not vals or len(vals) % per:
        raise ValueError("%s: group needs a multiple of %d integers, got %d"
                         % (name, per, len(vals)))
    mats = [np.array(vals[i:i + per]).reshape(d, d) for i in range(0, len(vals), per)]
    return make_group(mats)


def parse_offsets(text, d, name="<offsets>"):
    toks = _human_tokens(text, name)
    try:
        vals = [int(t) for t, _ in toks]
    except ValueError:
        raise ValueError("%s: offsets file must contain only integers" % name)
    if not vals or len(vals) % d:
        raise ValueError("%s: offsets need a multiple of %d integers, got %d"
                         % (name, d, len(vals)))
    return np.array(vals, dtype=np.int64).reshape(-1, d)


def _read(path):
    with open(path, "r") as fh:
        return fh.read()


def read_dataset(path):
    return parse_dataset(_read(path), name=str(path))


def write_dataset(F, path):
    with open(path, "w") as fh:
        fh.write(format_dataset(F))


def read_mask(path):
    return parse_mask(_read(path), name=str(path))


def write_mask(mask, path):
    with open(path, "w") as fh:
        fh.write(format_mask(mask))


def read_scene(path):
    return parse_scene(_read(path), name=str(path))


def read_lattice(path):
    return parse_lattice(_read(path), name=str(path))


def read_lattice_list(path):
    return parse_lattice_list(_read(path), name=str(path))


def read_group_file(path, d):
    return parse_group_file(_read(path), d, name=str(path))


def read_offsets(path, d):
    return parse_offsets(_read(path), d, name=str(path))


def write_model(model, report, path):
    """Serialize a solved model: its generator fibers in the dataset format
    followed by a sidecar line with the attained error."""
    from .solver import generators

    gen = generators(model)
    with open(path, "w") as fh:
        fh.write(format_dataset(gen))
        fh.write("error %s\n" % _fmt(report.total_error))


def write_gramian(G, path):
    """Debug dump: one line per cell (ascending), m*m complex entries as
    're im' pairs, row-major; inactive cells are all zero."""
    grid = G.grid
    zero_row = " ".join(["0.0 0.0"] * (G.m * G.m))
    with open(path, "w") as fh:
        fh.write("pwsis-gramian v1\n")
        fh.write("dim %d\n" % grid.d)
        fh.write("lattice %s\n" % " ".join(_fmt(v) for v in grid.lattice.basis.ravel()))
        fh.write("resolution %d\n" % grid.r)
        fh.write("channels %d\n" % G.m)
        k = 0
        for c in range(grid.n_cells):
            if k < G.n_active and G.active_idx[k] == c:
                mat = G.mats[k]
                fh.write(" ".join("%s %s" % (_fmt(z.real), _fmt(z.imag)) for z in mat.ravel()))
                fh.write("\n")
                k += 1
            else:
                fh.write(zero_row + "\n")
