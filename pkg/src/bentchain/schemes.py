"""Selective decoupling schemes for the bent chain and their zeroth-order check.

A scheme is the list of toggling-frame operators g_0..g_{m-1}; the pulses
follow as p_0 = g_0, p_k = g_k g_{k-1}^dagger and a closing p_m = g_{m-1}^dagger.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .chain import Hamiltonian
from .pauli import PauliString, conjugate, multiply, parse, render


@dataclass(frozen=True)
class DecouplingScheme:
    n_qubits: int
    operators: tuple[PauliString, ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.operators:
            raise ValueError("a scheme needs at least one operator")
        for g in self.operators:
            if g.n_qubits != self.n_qubits:
                raise ValueError("operator size does not match scheme")
            if g.phase != 0:
                raise ValueError(f"scheme operator {g} must have phase +1")

    def __len__(self):
        return len(self.operators)

    def describe(self) -> str:
        lines = [f"# scheme {self.name} (m={len(self)})"]
        lines += [f"g{k}: {render(g)}" for k, g in enumerate(self.operators)]
        lines += [f"p{k}: {render(p)}" for k, p in enumerate(to_pulses(self).pulses)]
        return "\n".join(lines)


@dataclass(frozen=True)
class PulseSequence:
    """Pulses p_0..p_m for one pass through a scheme (closing pulse included)."""

    pulses: tuple[PauliString, ...]
    name: str = "custom"

    @property
    def n_qubits(self) -> int:
        return self.pulses[0].n_qubits

    @property
    def m(self) -> int:
        """Number of free-evolution intervals per pass."""
        return len(self.pulses) - 1

    def cycle_pulses(self) -> list[PauliString]:
        """Pulses of one period when passes are chained back to back: the
        closing pulse of a pass merges with the opening of the next."""
        return [multiply(self.pulses[0], self.pulses[-1])] + list(self.pulses[1:-1])

    def nominal_count(self) -> int:
        """Pulses per pass counted as m, identity pulses included."""
        return self.m

    def physical_count(self) -> int:
        """Non-identity pulses per period in a periodic train."""
        return sum(not p.is_identity() for p in self.cycle_pulses())


@dataclass(frozen=True)
class AverageReport:
    average: Hamiltonian
    matches_target: bool
    scale: Fraction | None  # D
    residual: Hamiltonian

    def __str__(self):
        d = "n/a" if self.scale is None else str(self.scale)
        lines = ["average Hamiltonian (zeroth order):", str(self.average), f"D = {d}"]
        if self.residual.terms:
            lines += ["residual:", str(self.residual)]
        else:
            lines.append("residual: none")
        return "\n".join(lines)


def _check_alpha(n: int, alpha: int):
    if not 2 <= alpha <= n - 1:
        raise ValueError(f"bend position {alpha} outside [2, {n - 1}] for N={n}")


def partial_scheme(n: int, alpha: int) -> DecouplingScheme:
    _check_alpha(n, alpha)
    ident = PauliString.identity(n)
    left = PauliString.single(n, "Z", range(alpha - 1, 0, -2))
    right = PauliString.single(n, "Z", range(alpha + 1, n + 1, 2))
    return DecouplingScheme(n, (ident, ident, left, right), "partial")


def complete_scheme(n: int, alpha: int) -> DecouplingScheme:
    _check_alpha(n, alpha)
    g1 = PauliString.single(n, "X", range(1, alpha))
    g2 = PauliString.single(n, "Y", range(alpha + 1, n + 1))
    factors = ["I"] * n
    for q in range(alpha - 1, 0, -2):
        factors[q - 1] = "Z"
    factors[alpha - 1] = "X"
    # right-hand Z pattern starts at alpha+2 whatever the parity of N
    for q in range(alpha + 2, n + 1, 2):
        factors[q - 1] = "Z"
    g3 = PauliString.from_factors(factors)
    return DecouplingScheme(n, (PauliString.identity(n), g1, g2, g3), "complete")


def practical_scheme(n: int, alpha: int) -> DecouplingScheme:
    _check_alpha(n, alpha)
    f1 = ["X"] * n
    for q in range(alpha + 1, n + 1, 2):
        f1[q - 1] = "Y"
    # mirror image: Y sits on alpha-1, alpha-3, ...
    f3 = ["X"] * n
    for q in range(alpha - 1, 0, -2):
        f3[q - 1] = "Y"
    ident = PauliString.identity(n)
    return DecouplingScheme(
        n,
        (ident, PauliString.from_factors(f1), ident, PauliString.from_factors(f3)),
        "practical",
    )


def trivial_scheme(n: int) -> DecouplingScheme:
    return DecouplingScheme(n, (PauliString.identity(n),), "none")


def symmetrize(s: DecouplingScheme) -> DecouplingScheme:
    ops = s.operators + tuple(reversed(s.operators))
    return DecouplingScheme(s.n_qubits, ops, s.name + "+sdd")


def repeat_pdd(s: DecouplingScheme, r: int) -> DecouplingScheme:
    if r < 1:
        raise ValueError("repetition count must be >= 1")
    if r == 1:
        return s
    return DecouplingScheme(s.n_qubits, s.operators * r, f"{s.name}x{r}")


def to_pulses(s: DecouplingScheme) -> PulseSequence:
    g = s.operators
    pulses = [g[0]]
    pulses += [multiply(g[k], g[k - 1].dagger()) for k in range(1, len(g))]
    pulses.append(g[-1].dagger())
    return PulseSequence(tuple(pulses), s.name)


def toggling_frames(seq: PulseSequence) -> list[PauliString]:
    """Cumulative products g_k = p_k ... p_0 for k = 0..m."""
    out = [seq.pulses[0]]
    for p in seq.pulses[1:]:
        out.append(multiply(p, out[-1]))
    return out


def scheme_by_name(name: str, n: int, alpha: int | None) -> DecouplingScheme:
    """``partial``, ``complete``, ``practical`` or ``none``, optionally with a
    ``+sdd`` suffix for the symmetrized version."""
    base, _, mod = name.partition("+")
    if mod not in ("", "sdd"):
        raise ValueError(f"unknown scheme modifier {mod!r}")
    if base == "none":
        s = trivial_scheme(n)
    else:
        makers = {"partial": partial_scheme, "complete": complete_scheme,
                  "practical": practical_scheme}
        if base not in makers:
            raise ValueError(f"unknown scheme {base!r}")
        if alpha is None:
            raise ValueError(f"scheme {base!r} needs a bend position")
        s = makers[base](n, alpha)
    return symmetrize(s) if mod == "sdd" else s


def parse_scheme(text: str, n: int, name: str = "custom") -> DecouplingScheme:
    """Read the ``g<k>: <pauli>`` lines written by :meth:`DecouplingScheme.describe`."""
    ops = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("g") and ":" in line:
            ops.append(parse(line.split(":", 1)[1], n))
    return DecouplingScheme(n, tuple(ops), name)


def average_hamiltonian(s: DecouplingScheme, h: Hamiltonian) -> tuple[Hamiltonian, dict]:
    """Zeroth-order average (1/m) sum_k g_k^dagger H g_k.

    Conjugating a Pauli string by a Pauli string only flips its sign, so the
    average of each term is its coefficient times an integer sign count over m.
    Returns the Hamiltonian and the exact ``pattern -> Fraction(count, m)`` map.
    """
    if s.n_qubits != h.n_qubits:
        raise ValueError("scheme and Hamiltonian sizes differ")
    m = len(s)
    weights: dict[tuple[int, int], Fraction] = {}
    terms = []
    for c, t in h.terms:
        count = sum(1 if conjugate(g, t).phase == 0 else -1 for g in s.operators)
        w = Fraction(count, m)
        weights[t.pattern] = w
        if count:
            terms.append((c * count / m, t))
    return Hamiltonian(h.n_qubits, tuple(terms)), weights


def verify_selective(s: DecouplingScheme, h: Hamiltonian, target: Hamiltonian) -> AverageReport:
    """Check whether the zeroth-order average equals target / D for one D.

    Ratios are compared as exact fractions; D is the reciprocal of the most
    common ratio.  Target terms with a different ratio and averaged terms
    absent from the target end up in the residual.
    """
    if target.n_qubits != h.n_qubits:
        raise ValueError("target and Hamiltonian sizes differ")
    avg, weights = average_hamiltonian(s, h)
    coeffs = {t.pattern: c for c, t in h.terms}
    target_coeffs = {t.pattern: c for c, t in target.terms}

    def exact_avg(pattern):
        if pattern not in coeffs:
            return Fraction(0)
        return Fraction(coeffs[pattern]) * weights[pattern]

    ratios = {p: exact_avg(p) / Fraction(tc) for p, tc in target_coeffs.items()}
    ratio = Counter(ratios.values()).most_common(1)[0][0] if ratios else Fraction(1)

    residual = []
    for p, tc in target_coeffs.items():
        if ratios[p] != ratio:
            diff = exact_avg(p) - ratio * Fraction(tc)
            residual.append((float(diff), PauliString(h.n_qubits, *p)))
    for c, t in avg.terms:
        if t.pattern not in target_coeffs:
            residual.append((c, t))
    res = Hamiltonian(h.n_qubits, tuple(residual))
    scale = 1 / ratio if ratio != 0 else None
    return AverageReport(avg, not residual and scale is not None, scale, res)
