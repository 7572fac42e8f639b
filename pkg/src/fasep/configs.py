"""Particle configurations for the facilitated process and its half-line image.

Two state spaces appear throughout:

* configurations ``eta`` on the full lattice Z for the facilitated exclusion
  process, stored as a dense bit window plus closure flags (``eta == 1``
  everywhere below the window, ``eta == 0`` everywhere above it).  The
  dynamics preserves the *regular* set: filled below some site L, empty from
  some site R on, and with no two adjacent holes left of R;
* configurations ``sigma`` on the half line {1, 2, ...} for the exclusion
  process fed by an injection reservoir at the origin, stored as a dense bit
  array together with the number of injections seen so far.

A regular ``eta`` is carried to a half-line configuration by labelling its
particles from right to left, X_1 > X_2 > ..., starting at X_1 = R - 1, and
reading one bit per particle::

    sigma(i) = 1 - eta(X_i - 1)

Successive labels satisfy X_i - X_{i+1} = 1 + sigma(i), so the half-line
configuration together with the anchor X_1 determines the full-line
configuration; see :func:`halfline_to_fasep`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotRegularError",
    "WindowTooSmallError",
    "FasepConfig",
    "HalfLineConfig",
    "ParticleLabels",
    "validate_regular",
    "label_particles",
    "map_to_halfline",
    "halfline_to_fasep",
    "make_initial",
    "enumerate_window_configs",
]


class NotRegularError(ValueError):
    """An operation that needs a regular configuration received one that is not."""


class WindowTooSmallError(ValueError):
    """The stored window cannot certify the requested boundary information."""


@dataclass(frozen=True)
class FasepConfig:
    """Full-lattice occupation field, dense on a window, constant outside.

    ``occ[k]`` is the value of eta at site ``window_lo + k``.  Below the
    window eta is identically 1 when ``left_fill`` is set (0 otherwise);
    above the window eta is identically 0 when ``right_empty`` is set.
    Configurations with ``right_empty=False`` leave eta undetermined above
    the window and are rejected by any operation that needs it.
    """

    window_lo: int
    occ: tuple[int, ...]
    left_fill: bool = True
    right_empty: bool = True

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.occ):
            raise ValueError("occupation values must be 0 or 1")
        object.__setattr__(self, "occ", tuple(int(b) for b in self.occ))

    @property
    def window_hi(self) -> int:
        return self.window_lo + len(self.occ) - 1

    def eta(self, x: int) -> int:
        if x < self.window_lo:
            return 1 if self.left_fill else 0
        if x > self.window_hi:
            if not self.right_empty:
                raise WindowTooSmallError(f"eta({x}) not determined by window")
            return 0
        return self.occ[x - self.window_lo]

    def particles(self) -> list[int]:
        """Sites of the particles inside the stored window, left to right."""
        return [self.window_lo + k for k, b in enumerate(self.occ) if b]

    def shifted(self, dx: int) -> "FasepConfig":
        return FasepConfig(self.window_lo + dx, self.occ, self.left_fill, self.right_empty)

    def as_array(self) -> np.ndarray:
        return np.array(self.occ, dtype=np.int8)

    def canonical(self) -> "FasepConfig":
        """Smallest-window representation of the same field on Z.

        Leading cells equal to the fill value merge into the closure below
        the window; trailing zeros merge into the empty closure above it.
        """
        lo, occ = self.window_lo, list(self.occ)
        fill = 1 if self.left_fill else 0
        while occ and occ[0] == fill:
            occ.pop(0)
            lo += 1
        if self.right_empty:
            while occ and occ[-1] == 0:
                occ.pop()
        return FasepConfig(lo, tuple(occ), self.left_fill, self.right_empty)

    def to_literal(self) -> str:
        bits = "".join(str(b) for b in self.occ)
        return f"@{self.window_lo}:{bits}"

    @classmethod
    def from_literal(cls, text: str) -> "FasepConfig":
        """Parse a window literal such as ``"@-6:111101101101"``."""
        text = text.strip()
        if not text.startswith("@") or ":" not in text:
            raise ValueError(f"bad config literal {text!r}; expected '@<offset>:<bits>'")
        head, bits = text[1:].split(":", 1)
        if not all(c in "01" for c in bits):
            raise ValueError(f"bad bits in config literal {text!r}")
        return cls(int(head), tuple(int(c) for c in bits))


@dataclass(frozen=True)
class HalfLineConfig:
    """Half-line occupation field sigma on sites 1..n_trunc, 0 beyond.

    ``occ[k]`` is sigma(k+1).  ``injections`` counts reservoir injections
    since time zero; it feeds the height-field offset h(0) = -2*injections.
    """

    occ: tuple[int, ...]
    injections: int = 0

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.occ):
            raise ValueError("occupation values must be 0 or 1")
        if self.injections < 0:
            raise ValueError("injections counter must be >= 0")
        object.__setattr__(self, "occ", tuple(int(b) for b in self.occ))

    @property
    def n_trunc(self) -> int:
        return len(self.occ)

    def sigma(self, i: int) -> int:
        if i < 1:
            raise IndexError("half-line sites start at 1")
        return self.occ[i - 1] if i <= len(self.occ) else 0

    def occupied_sites(self) -> list[int]:
        return [k + 1 for k, b in enumerate(self.occ) if b]

    def rightmost(self) -> int:
        """Largest occupied site, or 0 when empty."""
        for k in range(len(self.occ) - 1, -1, -1):
            if self.occ[k]:
                return k + 1
        return 0

    def padded(self, n: int) -> "HalfLineConfig":
        if n < len(self.occ):
            raise ValueError("cannot pad below current length")
        return HalfLineConfig(self.occ + (0,) * (n - len(self.occ)), self.injections)

    def canonical(self) -> "HalfLineConfig":
        """Trim trailing empty sites (the field is 0 beyond storage anyway)."""
        occ = self.occ
        n = len(occ)
        while n > 0 and occ[n - 1] == 0:
            n -= 1
        return HalfLineConfig(occ[:n], self.injections)

    def as_array(self) -> np.ndarray:
        return np.array(self.occ, dtype=np.int8)

    def to_literal(self) -> str:
        return "".join(str(b) for b in self.occ)

    @classmethod
    def from_literal(cls, text: str) -> "HalfLineConfig":
        text = text.strip()
        if not all(c in "01" for c in text):
            raise ValueError(f"bad half-line literal {text!r}")
        return cls(tuple(int(c) for c in text))


@dataclass(frozen=True)
class ParticleLabels:
    """Right-to-left particle positions X_1 > X_2 > ... of a regular config."""

    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(a <= b for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("labels must be strictly decreasing")

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> int:
        return self.positions[i]


def validate_regular(cfg: FasepConfig) -> tuple[bool, int | None, int | None]:
    """Check membership in the regular set; return ``(is_regular, L, R)``.

    L is the largest site below which (inclusive) eta is identically 1, R the
    smallest site from which (inclusive) eta is identically 0.  Regularity
    additionally requires eta(x) + eta(x+1) >= 1 for every x < R.  For
    configurations that are not regular the returned L and R are ``None``.
    """
    if not cfg.right_empty:
        raise WindowTooSmallError("cannot certify R: window is not flagged empty above")
    if not cfg.left_fill:
        # eta vanishes far to the left, so no fill level L exists.
        return False, None, None

    occ = cfg.occ
    run = 0
    while run < len(occ) and occ[run] == 1:
        run += 1
    L = cfg.window_lo - 1 + run

    last_one = -1
    for k in range(len(occ) - 1, -1, -1):
        if occ[k] == 1:
            last_one = k
            break
    R = cfg.window_lo + last_one + 1  # == L + 1 when the window holds no particle past the fill

    for k in range(run, last_one):
        if occ[k] == 0 and occ[k + 1] == 0:
            return False, None, None
    return True, L, R


def label_particles(cfg: FasepConfig) -> ParticleLabels:
    """Label the particles of a regular configuration from right to left.

    Only particles inside the stored window are materialized; the fill below
    the window continues the labels consecutively and is left implicit.
    """
    ok, _, R = validate_regular(cfg)
    if not ok:
        raise NotRegularError("cannot label a non-regular configuration")
    positions = [x for x in range(R - 1, cfg.window_lo - 1, -1) if cfg.eta(x) == 1]
    return ParticleLabels(tuple(positions))


def map_to_halfline(cfg: FasepConfig) -> HalfLineConfig:
    """Apply the right-to-left reading sigma(i) = 1 - eta(X_i - 1).

    The result has one site per materialized label; sites beyond the last
    label are empty and the injection counter starts at 0.
    """
    labels = label_particles(cfg)  # raises NotRegularError when needed
    bits = tuple(1 - cfg.eta(x - 1) for x in labels.positions)
    return HalfLineConfig(bits, injections=0)


def halfline_to_fasep(sigma: HalfLineConfig, anchor: int = 0) -> FasepConfig:
    """Invert the half-line map given the anchor X_1 = ``anchor``.

    Labels descend by gaps X_i - X_{i+1} = 1 + sigma(i); one label past the
    stored support is materialized so that the final gap is determined, and
    the lattice is solidly filled below it.
    """
    n = sigma.n_trunc
    positions = [anchor]
    for i in range(1, n + 1):
        positions.append(positions[-1] - 1 - sigma.sigma(i))
    lo = positions[-1]
    occ = [0] * (anchor - lo + 1)
    for x in positions:
        occ[x - lo] = 1
    # A gap of 2 leaves exactly one hole between consecutive labels, a gap of
    # 1 leaves none, so the zeros left in `occ` are already the hole pattern.
    return FasepConfig(lo, tuple(occ), left_fill=True, right_empty=True)


def make_initial(kind: str, *, x0: int = 0, rho: float | None = None,
                 seed: int | None = None, n_trunc: int | None = None,
                 bits=None):
    """Build a standard initial condition.

    kind:
        ``"step"``            eta(x) = 1_{x <= x0}            (FasepConfig)
        ``"empty_halfline"``  sigma identically 0             (HalfLineConfig)
        ``"bernoulli"``       i.i.d. sigma(k) ~ Ber(rho) on 1..n_trunc
        ``"explicit"``        sigma from a bit sequence
    """
    if kind == "step":
        return FasepConfig(window_lo=x0, occ=(1,))
    if kind == "empty_halfline":
        return HalfLineConfig(())
    if kind == "bernoulli":
        if rho is None or not 0.0 <= rho <= 1.0:
            raise ValueError(f"bernoulli density must lie in [0,1], got {rho}")
        if n_trunc is None:
            raise ValueError("bernoulli initial condition needs a truncation bound n_trunc")
        rng = np.random.Generator(np.random.Philox(seed))
        draw = (rng.random(n_trunc) < rho).astype(int)
        return HalfLineConfig(tuple(int(b) for b in draw))
    if kind == "explicit":
        if bits is None:
            raise ValueError("explicit initial condition needs bits")
        if isinstance(bits, str):
            return HalfLineConfig.from_literal(bits)
        return HalfLineConfig(tuple(int(b) for b in bits))
    raise ValueError(f"unknown initial-condition kind {kind!r}")


def enumerate_window_configs(window_size: int, window_lo: int = 1,
                             regular_only: bool = False) -> list[FasepConfig]:
    """All 2**window_size bit patterns on a window, with solid/empty closures.

    Every pattern is returned as a configuration with ``left_fill`` and
    ``right_empty`` set, so each one can be tagged by
    :func:`validate_regular`; with ``regular_only`` the tagging is applied as
    a filter.  Guarded at window_size <= 16 to keep exhaustive sweeps cheap.
    """
    if window_size > 16:
        raise ValueError("window_size > 16 would enumerate too many configs")
    if window_size < 0:
        raise ValueError("window_size must be >= 0")
    out = []
    for code in range(2 ** window_size):
        bits = tuple((code >> k) & 1 for k in range(window_size))
        cfg = FasepConfig(window_lo, bits)
        if regular_only and not validate_regular(cfg)[0]:
            continue
        out.append(cfg)
    return out
