"""Nearest-neighbour interactions, energies, heat-bath rates and exact Gibbs states.

Symbols are integers 0..q-1.  For Ising interactions symbol 0 is spin -1 and
symbol 1 is spin +1.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .sofic import SoficMap

ISING_SPIN = np.array([-1.0, 1.0])
GIBBS_STATE_CAP = 2**24


@dataclass(frozen=True, eq=False)
class Interaction:
    q: int
    J: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        h = np.array(self.h, dtype=float)
        if J.shape != (self.q, self.q) or h.shape != (self.q,):
            raise InvalidInputError(f"expected J of shape ({self.q},{self.q}) and h of length {self.q}")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h))):
            raise InvalidInputError("interaction entries must be finite")
        if not np.array_equal(J, J.T):
            raise InvalidInputError("J must be symmetric")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interaction)
            and self.q == other.q
            and np.array_equal(self.J, other.J)
            and np.array_equal(self.h, other.h)
        )

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.q}\n")
        for row in self.J:
            buf.write(" ".join(repr(float(v)) for v in row) + "\n")
        buf.write(" ".join(repr(float(v)) for v in self.h) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> Interaction:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        try:
            q = int(lines[0])
            J = [[float(t) for t in ln.split()] for ln in lines[1 : 1 + q]]
            h = [float(t) for t in lines[1 + q].split()]
        except (ValueError, IndexError) as exc:
            raise InvalidInputError(f"malformed interaction text: {exc}") from exc
        return cls(q, np.array(J), np.array(h))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> Interaction:
        return cls.from_text(Path(path).read_text())


def beta_from_epsilon(epsilon: float) -> float:
    """Inverse temperature with epsilon / (1 - epsilon) = exp(-2 beta)."""
    check_epsilon(epsilon)
    return -0.5 * math.log(epsilon / (1.0 - epsilon))


def check_epsilon(epsilon: float) -> None:
    if not (0.0 < epsilon <= 0.5):
        raise InvalidInputError(f"epsilon must lie in (0, 1/2], got {epsilon}")


def ising_from_epsilon(epsilon: float) -> Interaction:
    beta = beta_from_epsilon(epsilon)
    J = -beta * np.outer(ISING_SPIN, ISING_SPIN)
    return Interaction(2, J + 0.0, np.zeros(2))


def sum_interaction(phiA: Interaction, phiB: Interaction) -> Interaction:
    """Pair interaction on symbols (a, b) encoded as a * q_B + b."""
    qa, qb = phiA.q, phiB.q
    J = (phiA.J[:, None, :, None] + phiB.J[None, :, None, :]).reshape(qa * qb, qa * qb)
    h = (phiA.h[:, None] + phiB.h[None, :]).reshape(qa * qb)
    return Interaction(qa * qb, J, h)


def split_pair_state(x, qB: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x)
    return x // qB, x % qB


def _check_state(phi: Interaction, sigma: SoficMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (sigma.n,):
        raise InvalidInputError(f"microstate length {x.shape} does not match n={sigma.n}")
    if x.size and (x.min() < 0 or x.max() >= phi.q):
        raise InvalidInputError(f"symbols must lie in 0..{phi.q - 1}")
    return x


def local_hamiltonian(phi: Interaction, sigma: SoficMap, x, v: int) -> float:
    """h(x_v) + sum over all 2r letters s of J(x_v, x(sigma^s v))."""
    x = _check_state(phi, sigma, x)
    nb = sigma.neighbors[:, v]
    return float(phi.h[x[v]] + phi.J[x[v], x[nb]].sum())


def total_energy(phi: Interaction, sigma: SoficMap, x) -> float:
    """Each s_i-edge (v, sigma^{s_i} v) counted once, self-loops included."""
    x = _check_state(phi, sigma, x)
    return float(phi.h[x].sum() + phi.J[x[None, :], x[sigma.forward]].sum())


def local_energies(phi: Interaction, sigma: SoficMap, x) -> np.ndarray:
    """U_v(x) = h(x_v) + 1/2 sum_s J(x_v, x(sigma^s v)) for every v."""
    x = _check_state(phi, sigma, x)
    return phi.h[x] + 0.5 * phi.J[x[None, :], x[sigma.neighbors]].sum(axis=0)


def _flip_energies(phi: Interaction, sigma: SoficMap, x: np.ndarray, v: int) -> np.ndarray:
    # Phi_v(x^{v->a}) for every a; a self-loop at v sees the new symbol a
    nb = sigma.neighbors[:, v]
    loops = nb == v
    a = np.arange(phi.q)
    others = phi.J[:, x[nb[~loops]]].sum(axis=1)
    return phi.h + others + loops.sum() * phi.J[a, a]


def glauber_rates(phi: Interaction, sigma: SoficMap, x, v: int) -> np.ndarray:
    """Heat-bath law c_v(x, .) proportional to exp(-Phi_v(x^{v->a}))."""
    x = _check_state(phi, sigma, x)
    e = _flip_energies(phi, sigma, x, v)
    w = np.exp(-(e - e.min()))
    return w / w.sum()


# -- exact finite-volume objects --------------------------------------------


def all_states(n: int, q: int) -> np.ndarray:
    """Every microstate, row index = sum_v x_v q^v."""
    idx = np.arange(q**n, dtype=np.int64)
    return (idx[:, None] // q ** np.arange(n, dtype=np.int64)[None, :]) % q


def state_index(x, q: int) -> int:
    x = np.asarray(x, dtype=np.int64)
    return int((x * q ** np.arange(x.shape[0], dtype=np.int64)).sum())


def check_enumeration(n: int, q: int, cap: int) -> None:
    if q**n > cap:
        raise ResourceLimitError(f"q^n = {q}^{n} exceeds the enumeration cap {cap}")


def energy_table(phi: Interaction, sigma: SoficMap, cap: int = GIBBS_STATE_CAP, chunk: int = 1 << 18) -> np.ndarray:
    """U(x) for every microstate in index order."""
    n, q = sigma.n, phi.q
    check_enumeration(n, q, cap)
    N = q**n
    out = np.empty(N)
    powers = q ** np.arange(n, dtype=np.int64)
    for lo in range(0, N, chunk):
        idx = np.arange(lo, min(N, lo + chunk), dtype=np.int64)
        X = (idx[:, None] // powers[None, :]) % q
        U = phi.h[X].sum(axis=1)
        for i in range(sigma.r):
            U += phi.J[X, X[:, sigma.forward[i]]].sum(axis=1)
        out[lo : lo + idx.shape[0]] = U
    return out


@dataclass(frozen=True, eq=False)
class StateTable:
    """A probability vector over all q^n microstates (tiny n only)."""

    n: int
    q: int
    probabilities: np.ndarray
    log_z: float | None = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (self.q**self.n,):
            raise InvalidInputError(f"expected {self.q ** self.n} probabilities, got {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidInputError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def point_mass(cls, x, q: int) -> StateTable:
        x = np.asarray(x, dtype=np.int64)
        p = np.zeros(q ** x.shape[0])
        p[state_index(x, q)] = 1.0
        return cls(x.shape[0], q, p)

    @classmethod
    def uniform(cls, n: int, q: int) -> StateTable:
        return cls(n, q, np.full(q**n, 1.0 / q**n))

    def entropy(self) -> float:
        p = self.probabilities[self.probabilities > 0]
        return float(-(p * np.log(p)).sum())


def finite_gibbs(phi: Interaction, sigma: SoficMap, cap: int = GIBBS_STATE_CAP) -> StateTable:
    U = energy_table(phi, sigma, cap)
    m = U.min()
    w = np.exp(-(U - m))
    Z = w.sum()
    return StateTable(sigma.n, phi.q, w / Z, log_z=float(math.log(Z) - m))


def free_energy(zeta: StateTable, phi: Interaction, sigma: SoficMap) -> float:
    """Expected energy minus Shannon entropy (nats); minimised by finite_gibbs."""
    if zeta.n != sigma.n or zeta.q != phi.q:
        raise InvalidInputError("state table does not match sigma / phi")
    U = energy_table(phi, sigma)
    return float(zeta.probabilities @ U - zeta.entropy())


@dataclass(frozen=True)
class FanoCheck:
    lhs: float
    rhs: float
    holds: bool


def fano_check(p, E, eps: float) -> FanoCheck:
    """log|E| >= H(p) - [log 2 + eps log|F|] given p(E) >= 1 - eps.

    ``p`` is a probability vector over F = range(len(p)) (a StateTable is
    accepted too) and ``E`` a collection of indices into it.
    """
    probs = p.probabilities if isinstance(p, StateTable) else np.asarray(p, dtype=float)
    if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidInputError("p must be a probability vector")
    idx = np.unique(np.asarray(list(E), dtype=np.int64))
    if idx.size == 0:
        raise InvalidInputError("E must be non-empty")
    if idx.min() < 0 or idx.max() >= probs.size:
        raise InvalidInputError("E must index into p")
    if eps < 0:
        raise InvalidInputError("eps must be nonnegative")
    mass = probs[idx].sum()
    if mass < 1.0 - eps - 1e-12:
        raise InvalidInputError(f"p(E) = {mass} < 1 - eps")
    nz = probs[probs > 0]
    H = float(-(nz * np.log(nz)).sum())
    lhs = math.log(idx.size)
    rhs = H - (math.log(2.0) + eps * math.log(probs.size))
    return FanoCheck(lhs, rhs, lhs >= rhs)
