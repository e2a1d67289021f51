"""Continuous-time heat-bath Glauber dynamics on the graph of a SoficMap.

Every vertex carries a rate-1 clock; at a ring it resamples its symbol from
c_v(x, .).  Equivalently a single rate-n Poisson clock picks a uniform vertex
per event.  All randomness for a trajectory is drawn up front from one
``numpy.random.Generator`` so both kernel backends replay identically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InvalidInputError
from .sofic import SoficMap
from .spin import Interaction, StateTable, _check_state, all_states, check_enumeration

GENERATOR_STATE_CAP = 2**16


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Initial state plus the full event list on [0, horizon].

    Each event is ``(times[k], vertices[k], symbols[k])``; ``symbols[k]`` is
    the symbol written at the event, which may equal the old one.
    """

    initial: np.ndarray
    horizon: float
    times: np.ndarray
    vertices: np.ndarray
    symbols: np.ndarray
    snapshot_times: tuple[float, ...] = ()
    snapshots: tuple[np.ndarray, ...] = field(default=(), repr=False)
    seed: object = None

    @property
    def total_events(self) -> int:
        return int(self.times.shape[0])

    @property
    def final(self) -> np.ndarray:
        return self.state_at(self.horizon)

    def state_at(self, t: float) -> np.ndarray:
        """Replay events with time <= t onto the initial state."""
        x = self.initial.copy()
        m = int(np.searchsorted(self.times, t, side="right"))
        if m:
            # last event per vertex wins
            _, last = np.unique(self.vertices[:m][::-1], return_index=True)
            keep = m - 1 - last
            x[self.vertices[keep]] = self.symbols[keep]
        return x

    def changes(self) -> int:
        """Number of events that actually changed a symbol."""
        x = self.initial.copy()
        count = 0
        for v, a in zip(self.vertices.tolist(), self.symbols.tolist()):
            if x[v] != a:
                count += 1
                x[v] = a
        return count

    def write_jsonl(self, path, header: dict | None = None) -> None:
        head = {"record": "header", "seed": _jsonable(self.seed), "n": int(self.initial.shape[0])}
        head.update(header or {})
        with Path(path).open("w") as fh:
            fh.write(json.dumps(head, sort_keys=True) + "\n")
            for t, x in zip(self.snapshot_times, self.snapshots):
                fh.write(json.dumps({"t": float(t), "spins": x.tolist()}) + "\n")


def _jsonable(seed):
    if seed is None or isinstance(seed, (int, str)):
        return seed
    try:
        return int(seed)
    except (TypeError, ValueError):
        return repr(seed)


def draw_events(n: int, t: float, rng: np.random.Generator):
    """Event times, vertices and resampling uniforms of a rate-n clock on [0, t]."""
    K = int(rng.poisson(n * t)) if t > 0 else 0
    times = np.sort(rng.uniform(0.0, t, size=K))
    vertices = rng.integers(0, n, size=K, dtype=np.int64)
    uniforms = rng.random(K)
    return times, vertices, uniforms


def simulate(
    x0,
    sigma: SoficMap,
    phi: Interaction,
    t: float,
    snap_times=(),
    seed=None,
) -> Trajectory:
    if t < 0:
        raise InvalidInputError(f"time horizon must be >= 0, got {t}")
    x0 = _check_state(phi, sigma, x0).copy()
    snaps = tuple(float(s) for s in snap_times)
    if any(s < 0 or s > t for s in snaps):
        raise InvalidInputError("snapshot times must lie in [0, t]")
    rng = np.random.default_rng(seed)
    times, vertices, uniforms = draw_events(sigma.n, t, rng)
    x = x0.copy()
    symbols = kernels.glauber_run(
        x, np.ascontiguousarray(sigma.neighbors), phi.J, phi.h, vertices, uniforms
    )
    traj = Trajectory(x0, float(t), times, vertices, symbols, snaps, (), seed)
    states = tuple(traj.state_at(s) for s in snaps)
    return Trajectory(x0, float(t), times, vertices, symbols, snaps, states, seed)


def burn_in_sample(sigma: SoficMap, phi: Interaction, T_burn: float, seed=None) -> np.ndarray:
    """Run the dynamics from a uniform random microstate for time T_burn."""
    if T_burn <= 0:
        raise InvalidInputError("burn-in time must be positive")
    rng = np.random.default_rng(seed)
    x0 = rng.integers(0, phi.q, size=sigma.n, dtype=np.int64)
    sub = int(rng.integers(0, 2**63 - 1))
    return simulate(x0, sigma, phi, T_burn, seed=sub).final


class GlauberGenerator:
    """The generator as an explicit sparse matrix over all q^n microstates.

    Row x holds the rates c_v(x, a) to x^{v->a} (a != x_v) and the negative
    total on the diagonal, so a state acts as ``p @ Q``.
    """

    def __init__(self, sigma: SoficMap, phi: Interaction, cap: int = GENERATOR_STATE_CAP):
        n, q = sigma.n, phi.q
        check_enumeration(n, q, cap)
        self.n, self.q = n, q
        N = q**n
        X = all_states(n, q)
        idx = np.arange(N, dtype=np.int64)
        powers = q ** np.arange(n, dtype=np.int64)
        rows, cols, vals = [], [], []
        nbr = sigma.neighbors
        for v in range(n):
            nb = nbr[:, v]
            loops = int((nb == v).sum())
            real = nb[nb != v]
            # Phi_v(x^{v->a}) for all states and symbols: shape (N, q)
            E = phi.h[None, :] + phi.J[:, X[:, real]].sum(axis=2).T + loops * np.diag(phi.J)[None, :]
            W = np.exp(-(E - E.min(axis=1, keepdims=True)))
            C = W / W.sum(axis=1, keepdims=True)
            for a in range(q):
                move = X[:, v] != a
                src = idx[move]
                dst = src + (a - X[move, v]) * powers[v]
                rows.append(src)
                cols.append(dst)
                vals.append(C[move, a])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        Q = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
        out = np.asarray(Q.sum(axis=1)).ravel()
        self.matrix = (Q - sp.diags(out)).tocsr()

    def apply(self, zeta: StateTable) -> np.ndarray:
        """The signed measure zeta Q."""
        if zeta.n != self.n or zeta.q != self.q:
            raise InvalidInputError("state table does not match the generator")
        return self.matrix.T @ zeta.probabilities

    def act_on_function(self, f) -> np.ndarray:
        """(Q f)(x) = sum_v sum_a c_v(x, a) [f(x^{v->a}) - f(x)]."""
        return self.matrix @ np.asarray(f, dtype=float)

    def stationarity_residual(self, zeta: StateTable) -> float:
        return float(np.abs(self.apply(zeta)).sum())


def transition_operator(sigma: SoficMap, phi: Interaction, cap: int = GENERATOR_STATE_CAP) -> GlauberGenerator:
    return GlauberGenerator(sigma, phi, cap)
