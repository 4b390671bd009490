"""Dense state vectors of N qudits and generalized Pauli kernels.

Basis index ``i`` encodes qudit digits little-endian: qudit ``q`` holds
``(i // d**q) % d``.  The amplitude array is kept flat; kernels view it as a
C-ordered tensor of shape ``(d,) * N`` whose *last* axis is qudit 0.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_MEMORY_CAP = 2 ** 28
MAGIC = b"KDST"


class MemoryCapError(MemoryError):
    """Requested amplitude count exceeds the configured cap."""

    def __init__(self, count: int, cap: int, label: str | None = None):
        shown = label or (str(count) if count < 10 ** 18 else f"~10^{len(str(count)) - 1}")
        super().__init__(f"{shown} amplitudes exceeds memory cap {cap}")
        self.count = count
        self.cap = cap


class DomainError(ValueError):
    pass


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def check_size(d: int, n: int, cap: int = DEFAULT_MEMORY_CAP) -> int:
    count = int(d) ** int(n)
    if count > cap:
        raise MemoryCapError(count, cap, f"d**N = {d}**{n}")
    return count


@dataclass
class DenseState:
    """Amplitude vector of ``n`` qudits with ``d`` levels."""

    d: int
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.d < 2:
            raise DomainError("qudit dimension must be >= 2")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.d ** self.n,):
            raise DomainError(f"expected {self.d ** self.n} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def zeros(cls, d: int, n: int, cap: int = DEFAULT_MEMORY_CAP) -> "DenseState":
        return cls(d, n, np.zeros(check_size(d, n, cap), dtype=np.complex128))

    @classmethod
    def basis(cls, d: int, n: int, digits, cap: int = DEFAULT_MEMORY_CAP) -> "DenseState":
        s = cls.zeros(d, n, cap)
        s.amplitudes[digits_to_index(digits, d)] = 1.0
        return s

    @classmethod
    def random(cls, d: int, n: int, rng=None) -> "DenseState":
        rng = np.random.default_rng(rng)
        size = check_size(d, n)
        a = rng.normal(size=size) + 1j * rng.normal(size=size)
        return cls(d, n, a / np.linalg.norm(a))

    def copy(self) -> "DenseState":
        return DenseState(self.d, self.n, self.amplitudes.copy())

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "DenseState":
        nrm = self.norm()
        if nrm == 0.0 or not np.isfinite(nrm):
            raise DomainError("cannot normalize a zero or non-finite state")
        return DenseState(self.d, self.n, self.amplitudes / nrm)

    def digits(self) -> np.ndarray:
        """Digit table, shape ``(d**n, n)``; column q is qudit q."""
        return index_digits(self.d, self.n)

    def save(self, path) -> None:
        write_state(path, self)


def digits_to_index(digits, d: int) -> int:
    digits = np.asarray(digits, dtype=np.int64) % d
    return int(np.sum(digits * d ** np.arange(len(digits), dtype=np.int64)))


def index_digits(d: int, n: int) -> np.ndarray:
    """All basis digit strings as a ``(d**n, n)`` int8 (or int16) array."""
    dtype = np.int8 if d < 128 else np.int16
    idx = np.arange(d ** n, dtype=np.int64)
    out = np.empty((d ** n, n), dtype=dtype)
    for q in range(n):
        out[:, q] = idx % d
        idx //= d
    return out


def _axis(state: DenseState, q: int) -> int:
    if not 0 <= q < state.n:
        raise IndexError(f"qudit {q} out of range [0, {state.n})")
    return state.n - 1 - q


def apply_x(state: DenseState, q: int, power: int = 1) -> DenseState:
    """Return ``X_q**power |state>`` with ``X|m> = |m+1>``."""
    ax = _axis(state, q)
    out = np.roll(state.tensor(), power % state.d, axis=ax)
    return DenseState(state.d, state.n, out.reshape(-1))


def apply_z(state: DenseState, q: int, power: int = 1) -> DenseState:
    """Return ``Z_q**power |state>`` with ``Z|m> = omega**m |m>``."""
    ax = _axis(state, q)
    d = state.d
    phase = np.exp(2j * np.pi * ((np.arange(d) * power) % d) / d)
    shape = [1] * state.n
    shape[ax] = d
    out = state.tensor() * phase.reshape(shape)
    return DenseState(d, state.n, out.reshape(-1))


def deformation_weights(d: int, beta: float, half: bool = False) -> np.ndarray:
    """Log-multipliers ``c cos(2 pi m/d)`` of the single-qudit deformation, indexed by digit m.

    ``c = beta`` by default, which is the operator ``exp{(beta/2)(Z + Z^-1)}``
    (eigenvalues ``exp{beta cos}``); ``half=True`` uses ``c = beta/2``.
    """
    c = 0.5 * beta if half else beta
    return c * np.cos(2 * np.pi * np.arange(d) / d)


def log_deformation_diagonal(d: int, n: int, beta: float, half: bool = False) -> np.ndarray:
    """Log of the diagonal of the N-qudit deformation operator."""
    w = deformation_weights(d, beta, half)
    out = np.zeros(d ** n)
    t = out.reshape((d,) * n)
    for q in range(n):
        shape = [1] * n
        shape[n - 1 - q] = d
        t += w.reshape(shape)
    return out


def apply_deformation(state: DenseState, beta: float, half: bool = False) -> DenseState:
    """Multiply each amplitude by ``prod_q exp{c cos(2 pi m_q/d)}``.

    ``c = beta`` (default) applies ``prod_q exp{(beta/2)(Z_q + Z_q^-1)}``, the
    map defining the deformed Kitaev state; ``half=True`` uses ``c = beta/2``.
    The result is not normalized.
    """
    if not np.isfinite(beta):
        raise DomainError(f"deformation parameter must be finite, got {beta}")
    w = np.exp(deformation_weights(state.d, beta, half))
    t = state.tensor().copy()
    for q in range(state.n):
        shape = [1] * state.n
        shape[state.n - 1 - q] = state.d
        t *= w.reshape(shape)
    return DenseState(state.d, state.n, t.reshape(-1))


def inner(a: DenseState, b: DenseState) -> complex:
    """``<a|b>``."""
    if a.d != b.d or a.n != b.n:
        raise DomainError("states differ in qudit dimension or count")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def write_state(path, state: DenseState) -> None:
    """Binary dump: ``b'KDST'``, u32 d, u32 N, then little-endian (re, im) f64 pairs."""
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", state.d, state.n))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def read_state(path) -> DenseState:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if head[:4] != MAGIC:
            raise DomainError("not a KDST amplitude dump")
        d, n = struct.unpack("<II", head[4:])
        data = np.frombuffer(fh.read(), dtype="<c16")
    return DenseState(d, n, data.astype(np.complex128))
