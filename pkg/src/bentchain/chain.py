"""Ideal and bent XX chain Hamiltonians and their perfect-transfer parameters."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .pauli import PauliString, basis_action


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of Hermitian Pauli strings (all with phase +1)."""

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    def __post_init__(self):
        for coeff, s in self.terms:
            if s.n_qubits != self.n_qubits:
                raise ValueError("term size does not match Hamiltonian")
            if s.phase != 0:
                raise ValueError("term strings must carry phase +1")
        patterns = [s.pattern for _, s in self.terms]
        if len(set(patterns)) != len(patterns):
            raise ValueError("duplicate term pattern; use Hamiltonian.from_terms")

    @classmethod
    def from_terms(cls, n_qubits: int, terms, tol: float = 0.0) -> "Hamiltonian":
        """Merge terms sharing a pattern, fold string signs into coefficients
        and drop coefficients with ``|c| <= tol``.  First-seen order is kept."""
        merged: dict[tuple[int, int], float] = {}
        for coeff, s in terms:
            if not s.is_hermitian():
                raise ValueError(f"non-Hermitian term {s}")
            c = float(coeff) * (1 if s.phase == 0 else -1)
            merged[s.pattern] = merged.get(s.pattern, 0.0) + c
        out = tuple(
            (c, PauliString(n_qubits, x, z))
            for (x, z), c in merged.items()
            if abs(c) > tol
        )
        return cls(n_qubits, out)

    def coefficient(self, s: PauliString) -> float:
        sign = 1 if s.phase == 0 else -1
        for c, t in self.terms:
            if t.pattern == s.pattern:
                return sign * c
        return 0.0

    def scaled(self, factor: float) -> "Hamiltonian":
        return Hamiltonian(self.n_qubits, tuple((factor * c, s) for c, s in self.terms))

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return Hamiltonian.from_terms(self.n_qubits, self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    def __str__(self):
        return "\n".join(f"{c:+.12g} {s}" for c, s in self.terms) or "0"

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        rows, cols, vals = [], [], []
        for c, s in self.terms:
            flip, coeff = basis_action(s)
            rows.append(idx ^ flip)
            cols.append(idx)
            vals.append(c * coeff)
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return m.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


@dataclass(frozen=True)
class ChainSpec:
    n_qubits: int
    lam: float = 1.0
    eigenenergies: tuple[float, ...] | None = None  # None means all zero
    bend_position: int | None = None
    bend_strength: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.eigenenergies is not None:
            if len(self.eigenenergies) != self.n_qubits:
                raise ValueError("need one eigenenergy per qubit")
            object.__setattr__(self, "eigenenergies", tuple(float(b) for b in self.eigenenergies))
        if self.bend_position is not None:
            if not 2 <= self.bend_position <= self.n_qubits - 1:
                raise ValueError(
                    f"bend position {self.bend_position} outside [2, {self.n_qubits - 1}]"
                )

    @property
    def energies(self) -> tuple[float, ...]:
        return self.eigenenergies or (0.0,) * self.n_qubits

    def without_bend(self) -> "ChainSpec":
        return ChainSpec(self.n_qubits, self.lam, self.eigenenergies, None, 0.0, dict(self.metadata))


def pst_couplings(n: int, lam: float = 1.0) -> list[float]:
    """J_i = (lam/2) sqrt(i (N - i)) for i = 1..N-1."""
    if n < 2:
        raise ValueError("perfect-transfer couplings need N >= 2")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return [0.5 * lam * math.sqrt(i * (n - i)) for i in range(1, n)]


def middle_bend(n: int) -> int:
    """Middle bend site: (N+1)/2 for odd N, N/2 for even N."""
    return (n + 1) // 2 if n % 2 else n // 2


def default_gamma(spec: ChainSpec) -> float:
    """0.4 times the larger of the two couplings the bend sits between."""
    if spec.bend_position is None:
        raise ValueError("chain has no bend")
    return gamma_for(spec.n_qubits, spec.bend_position, spec.lam)


def gamma_for(n: int, alpha: int, lam: float = 1.0) -> float:
    left = 0.5 * lam * math.sqrt((alpha - 1) * (n - alpha + 1))
    right = 0.5 * lam * math.sqrt(alpha * (n - alpha))
    return 0.4 * max(left, right)


def bent_chain(n: int, alpha: int | None = None, gamma: float | str | None = "default",
               lam: float = 1.0, eigenenergies=None) -> ChainSpec:
    """Convenience constructor; ``alpha=None`` means the middle site."""
    if alpha is None:
        alpha = middle_bend(n)
    if gamma == "default" or gamma is None:
        gamma = gamma_for(n, alpha, lam)
    return ChainSpec(n, lam, eigenenergies, alpha, float(gamma))


# Weight of h_ij = XX + YY per unit coupling, and of the bend term per unit gamma.
#   "hopping": +J/2 and +gamma/2.  J_i is then the single-excitation hopping
#              amplitude, the transfer completes at pi/lambda and picks up the
#              relative phase (-i)**(N-1) exp(2iBT).
#   "literal": -J and +gamma, the textbook Pauli form; same fidelities on a
#              time axis compressed by two (transfer at pi/(2 lambda)).
# The two differ by a factor 1/2 and the staggered gauge prod_k Z_{2k}, which
# flips nearest-neighbour couplings but not the next-nearest bend coupling.
CONVENTIONS = {"hopping": (0.5, 0.5), "literal": (-1.0, 1.0)}


def coupling_hamiltonian(n: int, couplings, weight: float = 0.5) -> Hamiltonian:
    terms = []
    for i, j in enumerate(couplings, start=1):
        terms.append((weight * j, PauliString.single(n, "X", (i, i + 1))))
        terms.append((weight * j, PauliString.single(n, "Y", (i, i + 1))))
    return Hamiltonian.from_terms(n, terms)


def build_hamiltonian(spec: ChainSpec, *, ideal: bool = False,
                      convention: str = "hopping") -> Hamiltonian:
    """Chain Hamiltonian in canonical order: Z terms, nearest-neighbour
    couplings (XX before YY), bend terms last.  ``ideal=True`` drops the bend."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    w_j, w_g = CONVENTIONS[convention]
    n = spec.n_qubits
    terms = [
        (b, PauliString.single(n, "Z", (i,)))
        for i, b in enumerate(spec.energies, start=1)
        if b != 0
    ]
    if n >= 2:
        terms += coupling_hamiltonian(n, pst_couplings(n, spec.lam), w_j).terms
    if spec.bend_position is not None and not ideal:
        a = spec.bend_position
        g = w_g * spec.bend_strength
        terms.append((g, PauliString.single(n, "X", (a - 1, a + 1))))
        terms.append((g, PauliString.single(n, "Y", (a - 1, a + 1))))
    return Hamiltonian.from_terms(n, terms)


def split_hamiltonian(h: Hamiltonian) -> tuple[Hamiltonian, Hamiltonian]:
    """(diagonal Z part, everything else)."""
    z = [(c, s) for c, s in h.terms if s.x == 0]
    rest = [(c, s) for c, s in h.terms if s.x != 0]
    return Hamiltonian(h.n_qubits, tuple(z)), Hamiltonian(h.n_qubits, tuple(rest))


def expected_phase(n: int, b: float = 0.0, t: float = 0.0) -> complex:
    """(-i)**(N-1) * exp(2 i B T) for uniform eigenenergy B."""
    return (-1j) ** (n - 1) * cmath.exp(2j * b * t)


def disordered_energies(n: int, beta: float, lam: float = 1.0, seed: int | None = None):
    """B_i i.i.d. uniform in [-beta*lam, +beta*lam]."""
    rng = np.random.default_rng(seed)
    return tuple(rng.uniform(-beta * lam, beta * lam, size=n).tolist())


def chain_from_config(cfg: dict) -> ChainSpec:
    """Parse the JSON chain configuration object.

    Keys: ``n_qubits``, ``lambda``, ``eigenenergies`` (a number for uniform B,
    a list, or ``{"disorder": beta, "seed": s}``) and ``bend``
    (``{"alpha": a, "gamma": g | "default"}`` or null).
    """
    n = int(cfg["n_qubits"])
    lam = float(cfg.get("lambda", 1.0))
    raw = cfg.get("eigenenergies", 0.0)
    meta: dict[str, Any] = {}
    if raw is None:
        energies = None
    elif isinstance(raw, (int, float)):
        energies = (float(raw),) * n if raw else None
    elif isinstance(raw, dict):
        beta = float(raw["disorder"])
        seed = raw.get("seed")
        energies = disordered_energies(n, beta, lam, seed)
        meta["disorder"] = {"model": "uniform", "beta": beta, "seed": seed}
    else:
        energies = tuple(float(b) for b in raw)
    bend = cfg.get("bend")
    alpha = gamma = None
    if bend:
        alpha = int(bend["alpha"])
        g = bend.get("gamma", "default")
        gamma = gamma_for(n, alpha, lam) if g == "default" else float(g)
    return ChainSpec(n, lam, energies, alpha, gamma or 0.0, meta)


def chain_to_config(spec: ChainSpec) -> dict:
    cfg: dict[str, Any] = {"n_qubits": spec.n_qubits, "lambda": spec.lam}
    if "disorder" in spec.metadata:
        d = spec.metadata["disorder"]
        cfg["eigenenergies"] = {"disorder": d["beta"], "seed": d["seed"]}
    elif spec.eigenenergies is None:
        cfg["eigenenergies"] = 0.0
    elif len(set(spec.eigenenergies)) == 1:
        cfg["eigenenergies"] = spec.eigenenergies[0]
    else:
        cfg["eigenenergies"] = list(spec.eigenenergies)
    cfg["bend"] = (
        None if spec.bend_position is None
        else {"alpha": spec.bend_position, "gamma": spec.bend_strength}
    )
    return cfg
