"""Digit-set model for fractal cubes.

A fractal cube is the attractor of the maps z -> (z + h)/n over a finite set
of digit vectors h in {0..n-1}^d.  This module owns the digit-set
representation and file format, level composition, the Hausdorff dimension
formula, exact affine-rank reduction, and the structural checks (Latin /
product form) behind the topological-Hausdorff-dimension prescreen.

Everything here is plain Python with exact integer/rational arithmetic; the
heavy grid machinery lives in :mod:`fracube.grid` and friends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TYPE_CHECKING

from .errors import BudgetError, ParseError, memory_budget

if TYPE_CHECKING:  # pragma: no cover
    from .topology import TrivialPointVerdict

FORMAT_HEADER = "fcube 1"

# Flat-index arithmetic downstream runs in int64; keep composed bases sane.
MAX_COMPOSED_BASE = 2**62


@dataclass(frozen=True)
class DigitSet:
    """Base n, ambient dimension d, and the set of surviving subcell digits.

    Digits are canonicalized to lexicographic order on construction, so two
    DigitSets compare equal iff they describe the same fractal cube and
    serialization is deterministic.
    """

    base: int
    dim: int
    digits: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"base must be >= 2, got {self.base}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        canon = tuple(sorted(tuple(int(c) for c in h) for h in self.digits))
        if not canon:
            raise ValueError("digit set must be nonempty")
        for h in canon:
            if len(h) != self.dim:
                raise ValueError(f"digit {h} has {len(h)} coordinates, expected {self.dim}")
            for c in h:
                if not 0 <= c < self.base:
                    raise ValueError(f"coordinate {c} of digit {h} outside 0..{self.base - 1}")
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate digit {a}")
        object.__setattr__(self, "digits", canon)

    @property
    def count(self) -> int:
        return len(self.digits)

    @property
    def side_cells(self) -> int:
        """Total number of level-1 cells, base**dim."""
        return self.base**self.dim

    def flat_indices(self) -> list[int]:
        """Row-major flat index of each digit (last axis fastest)."""
        out = []
        for h in self.digits:
            f = 0
            for c in h:
                f = f * self.base + c
            out.append(f)
        return out

    @classmethod
    def from_flat_indices(cls, base: int, dim: int, flats: Iterable[int]) -> "DigitSet":
        digits = []
        for f in flats:
            h = []
            for _ in range(dim):
                h.append(f % base)
                f //= base
            digits.append(tuple(reversed(h)))
        return cls(base, dim, tuple(digits))


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def parse_digitset(data: bytes | str) -> DigitSet:
    """Parse the digit-set text format.

    Layout: a ``fcube 1`` header, an ``n=<int> d=<int>`` line, then either
    one ``digit: c1 ... cd`` line per digit or (d=2 only) an n x n ASCII
    grid of ``#``/``.`` where row r, column x encodes digit (x, n-1-r).
    ``#``-prefixed lines are comments; blank lines are ignored.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not valid UTF-8: {e}") from None
    else:
        text = data

    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines())]
    body = [(no, ln) for no, ln in lines if ln.strip() and not ln.lstrip().startswith("#")]

    if not body:
        raise ParseError("empty input, expected 'fcube 1' header", line=1)
    no, header = body[0]
    if header.strip() != FORMAT_HEADER:
        raise ParseError(f"expected header '{FORMAT_HEADER}', got {header.strip()!r}", line=no)
    if len(body) < 2:
        raise ParseError("missing 'n=<int> d=<int>' line", line=no)

    no, params = body[1]
    fields = params.split()
    if len(fields) != 2 or not fields[0].startswith("n=") or not fields[1].startswith("d="):
        raise ParseError("expected 'n=<int> d=<int>'", line=no)
    try:
        n = int(fields[0][2:])
        d = int(fields[1][2:])
    except ValueError:
        raise ParseError("expected 'n=<int> d=<int>'", line=no) from None
    if n < 2:
        raise ParseError(f"n must be >= 2, got {n}", line=no)
    if d < 1:
        raise ParseError(f"d must be >= 1, got {d}", line=no)

    rest = body[2:]
    if not rest:
        raise ParseError("empty digit set", line=no)

    first_line = rest[0][1].strip()
    if first_line.startswith("digit:"):
        digits = _parse_digit_lines(rest, n, d)
    elif d == 2 and set(first_line) <= {".", "#"}:
        digits = _parse_ascii_grid(rest, n)
    else:
        raise ParseError("expected 'digit:' lines" + (" or an ASCII grid" if d == 2 else ""),
                         line=rest[0][0])
    return DigitSet(n, d, tuple(digits))


def _parse_digit_lines(rows: list[tuple[int, str]], n: int, d: int) -> list[tuple[int, ...]]:
    digits: list[tuple[int, ...]] = []
    seen = set()
    for no, ln in rows:
        stripped = ln.strip()
        if not stripped.startswith("digit:"):
            raise ParseError(f"expected 'digit:' line, got {stripped!r}", line=no)
        fields = stripped[len("digit:"):].split()
        if len(fields) != d:
            raise ParseError(f"expected {d} coordinates, got {len(fields)}", line=no)
        coords = []
        for tok in fields:
            try:
                c = int(tok)
            except ValueError:
                col = ln.find(tok) + 1
                raise ParseError(f"not an integer: {tok!r}", line=no, column=col) from None
            coords.append(c)
        for c in coords:
            if not 0 <= c < n:
                raise ParseError(f"coordinate {c} outside 0..{n - 1}", line=no)
        h = tuple(coords)
        if h in seen:
            raise ParseError(f"duplicate digit {' '.join(fields)}", line=no)
        seen.add(h)
        digits.append(h)
    return digits


def _parse_ascii_grid(rows: list[tuple[int, str]], n: int) -> list[tuple[int, ...]]:
    if len(rows) != n:
        raise ParseError(f"expected {n} grid rows, got {len(rows)}", line=rows[-1][0])
    digits = []
    for r, (no, ln) in enumerate(rows):
        row = ln.rstrip()
        if len(row) != n:
            raise ParseError(f"expected {n} characters in grid row, got {len(row)}",
                             line=no, column=min(len(row), n) + 1)
        for x, ch in enumerate(row):
            if ch == "#":
                digits.append((x, n - 1 - r))
            elif ch != ".":
                raise ParseError(f"invalid grid character {ch!r}", line=no, column=x + 1)
    if not digits:
        raise ParseError("empty digit set", line=rows[-1][0])
    return digits


def serialize_digitset(ds: DigitSet) -> str:
    """Canonical coordinate-list serialization; parse/serialize round-trips."""
    out = [FORMAT_HEADER, f"n={ds.base} d={ds.dim}"]
    for h in ds.digits:
        out.append("digit: " + " ".join(str(c) for c in h))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Level composition and dimension
# ---------------------------------------------------------------------------

def compose_level(ds: DigitSet, k: int, max_bytes: int | None = None) -> DigitSet:
    """k-fold composition: digits h0 + n*h1 + ... + n^(k-1)*h_{k-1} at base n^k.

    Positional expansion is injective, so the result has count**k digits.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = ds.base
    if n**k > MAX_COMPOSED_BASE:
        raise OverflowError(f"composed base {n}^{k} exceeds the int64 grid budget")
    count = ds.count**k
    budget = memory_budget(max_bytes)
    est = count * (48 + 16 * ds.dim)  # rough tuple storage
    if est > budget:
        raise BudgetError(est, budget, detail=f"compose_level k={k} with {count} digits")
    acc: list[tuple[int, ...]] = list(ds.digits)
    for _ in range(k - 1):
        acc = [tuple(h[a] + n * w[a] for a in range(ds.dim))
               for w in acc for h in ds.digits]
    return DigitSet(n**k, ds.dim, tuple(acc))


def hausdorff_dimension(ds: DigitSet) -> float:
    """log(#digits) / log(base); 0 for a singleton."""
    return math.log(ds.count) / math.log(ds.base)


# ---------------------------------------------------------------------------
# Exact affine rank and reduction
# ---------------------------------------------------------------------------

def _difference_rows(ds: DigitSet) -> list[list[int]]:
    h0 = ds.digits[0]
    return [[h[a] - h0[a] for a in range(ds.dim)] for h in ds.digits[1:]]


def _row_reduce(rows: list[list[Fraction]]) -> tuple[int, list[list[Fraction]], list[int]]:
    """Gaussian elimination over the rationals.

    Returns (rank, reduced rows, pivot column per reduced row).
    """
    mat = [list(r) for r in rows]
    ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot_row = None
        for i in range(r, len(mat)):
            if mat[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        pv = mat[r][col]
        mat[r] = [v / pv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    return r, mat[:r], pivots


def affine_rank(ds: DigitSet) -> int:
    """Rank over Q of the digit differences, i.e. dim of the attractor's affine hull."""
    diffs = _difference_rows(ds)
    if not diffs:
        return 0
    rank, _, _ = _row_reduce([[Fraction(v) for v in row] for row in diffs])
    return rank


def _orthogonal_vector(ds: DigitSet) -> list[int] | None:
    """A primitive integer vector orthogonal to all digit differences, or None."""
    d = ds.dim
    diffs = _difference_rows(ds)
    if not diffs:
        # Single digit: any direction works; pick the first axis.
        return [1] + [0] * (d - 1)
    rank, reduced, pivots = _row_reduce([[Fraction(v) for v in row] for row in diffs])
    if rank == d:
        return None
    free = next(c for c in range(d) if c not in pivots)
    alpha = [Fraction(0)] * d
    alpha[free] = Fraction(1)
    for row, pc in zip(reduced, pivots):
        alpha[pc] = -row[free]
    lcm = 1
    for v in alpha:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in alpha]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    return [v // g for v in ints]


@dataclass(frozen=True)
class ReductionStep:
    """One axis-dropping step: <h, normal> = (n-1)*offset for every digit h."""

    normal: tuple[int, ...]
    offset: Fraction
    dropped_axis: int


@dataclass(frozen=True)
class AffineReduction:
    """Sequence of exact projections taking a digit set to full affine rank.

    ``collapsed_to_point`` marks the rank-0 case (a single digit, attractor a
    single point); the reduced set then sits in dimension 1 as a singleton.
    """

    steps: tuple[ReductionStep, ...]
    reduced: DigitSet
    collapsed_to_point: bool

    @property
    def step_count(self) -> int:
        return len(self.steps)


def reduce_full_rank(ds: DigitSet) -> AffineReduction:
    """Drop axes along exact rational normals until the digit set spans its space.

    Each step picks a primitive integer normal alpha orthogonal to all digit
    differences, with <h, alpha> = (n-1)*c for every digit h, and drops the
    lowest axis with a nonzero alpha coordinate.  The projection is injective
    on digits (the dropped coordinate is an affine function of the rest), so
    the digit count, the Hausdorff dimension and the connectedness index of
    the attractor are invariant.
    """
    steps: list[ReductionStep] = []
    cur = ds
    while cur.dim > 1:
        alpha = _orthogonal_vector(cur)
        if alpha is None:
            break
        s = sum(h * a for h, a in zip(cur.digits[0], alpha))
        c = Fraction(s, cur.base - 1)
        axis = next(i for i, v in enumerate(alpha) if v != 0)
        steps.append(ReductionStep(tuple(alpha), c, axis))
        projected = tuple(h[:axis] + h[axis + 1:] for h in cur.digits)
        cur = DigitSet(cur.base, cur.dim - 1, projected)
    return AffineReduction(tuple(steps), cur, collapsed_to_point=(cur.count == 1))


# ---------------------------------------------------------------------------
# Structural checks on fractal squares
# ---------------------------------------------------------------------------

def is_latin(ds: DigitSet) -> bool:
    """True iff every row and every column holds the same number of digits (d=2)."""
    if ds.dim != 2:
        raise ValueError("Latin digit sets are defined for d=2 only")
    if ds.count % ds.base != 0:
        return False
    per = ds.count // ds.base
    for axis in (0, 1):
        counts = [0] * ds.base
        for h in ds.digits:
            counts[h[axis]] += 1
        if any(c != per for c in counts):
            return False
    return True


def dihedral_images(ds: DigitSet) -> list[DigitSet]:
    """The 8 images of a d=2 digit set under the symmetries of the square."""
    if ds.dim != 2:
        raise ValueError("square symmetries require d=2")
    n1 = ds.base - 1
    transforms = [
        lambda x, y: (x, y),
        lambda x, y: (y, n1 - x),
        lambda x, y: (n1 - x, n1 - y),
        lambda x, y: (n1 - y, x),
        lambda x, y: (n1 - x, y),
        lambda x, y: (x, n1 - y),
        lambda x, y: (y, x),
        lambda x, y: (n1 - y, n1 - x),
    ]
    return [DigitSet(ds.base, 2, tuple(t(x, y) for x, y in ds.digits)) for t in transforms]


def dihedral_canonical(ds: DigitSet) -> DigitSet:
    """Lexicographically least of the 8 square-symmetry images."""
    return min(dihedral_images(ds), key=lambda s: s.digits)


PRESCREEN_RULED_OUT = "ruled_out"
PRESCREEN_POSSIBLE = "possible"
PRESCREEN_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PrescreenReport:
    """Necessary-condition screen for dim_tH = dim_H; never asserts equality."""

    status: str
    form: str | None = None
    reason: str | None = None


def _product_form(ds: DigitSet) -> str | None:
    xs = sorted({h[0] for h in ds.digits})
    ys = sorted({h[1] for h in ds.digits})
    if ds.count != len(xs) * len(ys):
        return None
    if len(xs) == ds.base:
        return "full-column-product"
    if len(ys) == ds.base:
        return "full-row-product"
    return None


def th_prescreen(ds: DigitSet, verdict: "TrivialPointVerdict") -> PrescreenReport:
    """Screen a digit set against the known necessary conditions for
    dim_tH = dim_H.

    A trivial point forces a strict drop of the connectedness index below
    dim_H, which rules equality out for any d.  For fractal squares the
    remaining necessary condition is that the attractor is a full product
    [0,1] x C or C x [0,1], or that the digit set is Latin.
    """
    if verdict.kind == "has_trivial_point":
        return PrescreenReport(PRESCREEN_RULED_OUT, reason="trivial point exists")
    if ds.dim != 2:
        return PrescreenReport(PRESCREEN_INCONCLUSIVE,
                               reason="product/Latin conditions are d=2 only")
    form = _product_form(ds)
    if form is not None:
        return PrescreenReport(PRESCREEN_POSSIBLE, form=form)
    if is_latin(ds):
        return PrescreenReport(PRESCREEN_POSSIBLE, form="latin")
    return PrescreenReport(PRESCREEN_INCONCLUSIVE)
