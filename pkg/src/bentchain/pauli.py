"""N-qubit Pauli strings in the symplectic (x-mask, z-mask) encoding.

A string is stored as ``i**phase * P_1 (x) P_2 (x) ... (x) P_n`` where each
factor P_j is one of I, X, Y, Z.  Qubit ``j`` (1-based, as in sigma_j) is bit
``j - 1`` of the masks.  A factor is X when only its x bit is set, Z when only
its z bit is set and Y when both are set.

State vectors use the Kronecker convention: qubit 1 is the leftmost tensor
factor, i.e. the most significant bit of the basis index.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

_LETTERS = "IXZY"  # indexed by x_bit + 2 * z_bit
_PHASE_TEXT = {0: "", 1: "i", 2: "-", 3: "-i"}
_TOKEN = re.compile(r"^([IXYZ])(\d+)$")

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0  # exponent k of i**k

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask wider than n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def from_factors(cls, factors, phase: int = 0) -> "PauliString":
        """Build from a sequence like ``"XIZY"`` or ``["X", "I", "Z"]``."""
        x = z = 0
        for j, f in enumerate(factors):
            f = f.upper()
            if f not in _LETTERS:
                raise ValueError(f"unknown Pauli factor {f!r}")
            if f in "XY":
                x |= 1 << j
            if f in "ZY":
                z |= 1 << j
        return cls(len(factors), x, z, phase)

    @classmethod
    def single(cls, n_qubits: int, letter: str, qubits) -> "PauliString":
        """``letter`` on every 1-based qubit in ``qubits``, identity elsewhere."""
        factors = ["I"] * n_qubits
        for q in qubits:
            if not 1 <= q <= n_qubits:
                raise ValueError(f"qubit {q} outside 1..{n_qubits}")
            factors[q - 1] = letter
        return cls.from_factors(factors)

    @property
    def factors(self) -> str:
        return "".join(
            _LETTERS[((self.x >> j) & 1) + 2 * ((self.z >> j) & 1)]
            for j in range(self.n_qubits)
        )

    @property
    def support(self) -> list[int]:
        """1-based qubits carrying a non-identity factor."""
        mask = self.x | self.z
        return [j + 1 for j in range(self.n_qubits) if (mask >> j) & 1]

    @property
    def pattern(self) -> tuple[int, int]:
        return self.x, self.z

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, phase)

    def dagger(self) -> "PauliString":
        return self.with_phase(-self.phase)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return render(self)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; only sensible for small n."""
        mats = [PAULI_MATRICES[f] for f in self.factors]
        return (1j**self.phase) * reduce(np.kron, mats)


def _check_sizes(a: PauliString, b: PauliString):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a * b``.

    Writing each string as i**(k + n_y) X^x Z^z, the product picks up
    (-1)**|z_a & x_b| from moving Z^{z_a} past X^{x_b}.
    """
    _check_sizes(a, b)
    x = a.x ^ b.x
    z = a.z ^ b.z
    k = a.phase + a.n_y + b.phase + b.n_y + 2 * _popcount(a.z & b.x)
    k -= _popcount(x & z)
    return PauliString(a.n_qubits, x, z, k)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def conjugate(g: PauliString, h: PauliString) -> PauliString:
    """Return ``g^dagger h g``.

    Same factors as ``h``; the phase flips by -1 exactly when g and h
    anticommute.
    """
    _check_sizes(g, h)
    return h if commutes(g, h) else h.with_phase(h.phase + 2)


def basis_action(p: PauliString):
    """Signed-permutation data of ``p`` on computational basis states.

    Returns ``(flip, coeff)`` such that ``p|b> = coeff[b] |b ^ flip>`` for
    every basis index b (Kronecker ordering, qubit 1 most significant).
    """
    n = p.n_qubits
    flip = _kron_mask(p.x, n)
    zmask = _kron_mask(p.z, n)
    idx = np.arange(1 << n, dtype=np.int64)
    parity = _parity(idx & zmask)
    # Y = i X Z, so the string is i**(k + n_y) X^x Z^z; Z acts first.
    coeff = (1j ** ((p.phase + p.n_y) % 4)) * (1 - 2 * parity)
    return flip, coeff.astype(complex)


def apply_to_state(p: PauliString, psi: np.ndarray) -> np.ndarray:
    """Return ``p|psi>`` as a signed permutation of the amplitudes."""
    psi = np.asarray(psi)
    if psi.shape[0] != 1 << p.n_qubits:
        raise ValueError(
            f"state of length {psi.shape[0]} does not match {p.n_qubits} qubits"
        )
    flip, coeff = basis_action(p)
    out = np.empty_like(psi, dtype=complex)
    idx = np.arange(psi.shape[0])
    out[idx ^ flip] = coeff * psi
    return out


def _kron_mask(mask: int, n: int) -> int:
    """Translate a qubit mask (bit j = qubit j+1) to a basis-index mask."""
    out = 0
    for j in range(n):
        if (mask >> j) & 1:
            out |= 1 << (n - 1 - j)
    return out


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    par = np.zeros_like(v)
    while np.any(v):
        par ^= v & 1
        v >>= 1
    return par


def qubit_bit(q: int, n: int) -> int:
    """Basis-index bit for 1-based qubit q."""
    return 1 << (n - q)


def render(p: PauliString) -> str:
    """Text form such as ``"X1 X2"``, ``"-i Y2 X5"`` or ``"I"``."""
    body = " ".join(
        f"{f}{j + 1}" for j, f in enumerate(p.factors) if f != "I"
    ) or "I"
    prefix = _PHASE_TEXT[p.phase]
    if not prefix:
        return body
    if prefix == "-":
        return "-" + body
    return f"{prefix} {body}"


def parse(text: str, n_qubits: int) -> PauliString:
    """Inverse of :func:`render`.

    Grammar: optional phase prefix (``+``, ``-``, ``i``, ``-i``, ``+i``)
    followed by whitespace-separated tokens ``<letter><1-based index>``.
    A bare ``I`` (or nothing) is the identity.
    """
    s = text.strip()
    phase = 0
    m = re.match(r"^([+-]?)(i?)(?=\s|[IXYZ]|$)\s*", s)
    if m and (m.group(1) or m.group(2)):
        sign, imag = m.group(1), m.group(2)
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        s = s[m.end():]
    factors = ["I"] * n_qubits
    for tok in s.split():
        if tok == "I":
            continue
        tm = _TOKEN.match(tok)
        if tm is None:
            raise ValueError(f"bad Pauli token {tok!r} in {text!r}")
        letter, q = tm.group(1), int(tm.group(2))
        if not 1 <= q <= n_qubits:
            raise ValueError(f"qubit {q} outside 1..{n_qubits}")
        if factors[q - 1] != "I":
            raise ValueError(f"qubit {q} appears twice in {text!r}")
        factors[q - 1] = letter
    return PauliString.from_factors(factors, phase)
