"""Brownian ensembles and the noise-driven solution flow.

The solution operator of the white-noise-dispersion equation is the
time-changed propagator S(t, s) = e^{-i (beta(t) - beta(s)) H}.  An
explicit Euler-Maruyama integrator for the equivalent Ito form
du = -(1/2) H^2 u dt - i H u dbeta serves as an independent check that
the time change really solves the equation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StabilityWarning
from .spectral_operator import DiscreteHamiltonian, propagate_batch


@dataclass(frozen=True)
class BrownianEnsemble:
    """Seeded set of discrete Brownian paths on [0, horizon].

    Each path draws from its own counter-based substream keyed by
    (seed, path index), so regeneration is bit-identical under any
    worker schedule.
    """

    horizon: float
    n_steps: int
    n_paths: int
    seed: int
    increments: np.ndarray  # (n_paths, n_steps)
    values: np.ndarray  # (n_paths, n_steps + 1), values[:, 0] = 0

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based substream for one path."""
    return np.random.Generator(np.random.Philox(key=[seed, path_index]))


def sample_brownian(
    horizon: float, n_steps: int, n_paths: int, seed: int
) -> BrownianEnsemble:
    """Generate i.i.d. N(0, dt) increments per path and their cumsums."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if n_steps < 1 or n_paths < 1:
        raise DomainError("n_steps and n_paths must be >= 1")
    dt = horizon / n_steps
    inc = np.empty((n_paths, n_steps))
    for p in range(n_paths):
        inc[p] = path_rng(seed, p).normal(0.0, np.sqrt(dt), n_steps)
    values = np.zeros((n_paths, n_steps + 1))
    np.cumsum(inc, axis=1, out=values[:, 1:])
    inc.setflags(write=False)
    values.setflags(write=False)
    return BrownianEnsemble(
        horizon=horizon,
        n_steps=n_steps,
        n_paths=n_paths,
        seed=seed,
        increments=inc,
        values=values,
    )


@dataclass(frozen=True)
class PathSolution:
    """Snapshots of one path's evolution at selected times."""

    path_index: int
    times: np.ndarray
    states: np.ndarray  # (n_points, len(times))
    ac_projected: bool


def time_changed_propagate(
    H: DiscreteHamiltonian,
    ensemble: BrownianEnsemble,
    u0: np.ndarray,
    project: bool = False,
    time_indices: np.ndarray | None = None,
    mode_tol: float = 0.0,
) -> list[PathSolution]:
    """u(t_k) = e^{-i beta(t_k) H} (P_ac) u0 for every path.

    One basis transform per path; diagonal phases per snapshot time.
    """
    if len(u0) != H.n:
        raise DomainError("u0 length does not match the Hamiltonian grid")
    if time_indices is None:
        time_indices = np.arange(ensemble.n_steps + 1)
    times = ensemble.times[time_indices]
    out = []
    for p in range(ensemble.n_paths):
        taus = ensemble.values[p, time_indices]
        states = propagate_batch(H, taus, u0, project=project, mode_tol=mode_tol)
        out.append(
            PathSolution(path_index=p, times=times, states=states, ac_projected=project)
        )
    return out


def ensemble_to_csv(ensemble: BrownianEnsemble, path) -> None:
    """Audit export, long form: one (path, t, beta) row per sample."""
    times = ensemble.times
    lines = ["path,t,beta"]
    for p in range(ensemble.n_paths):
        vals = ensemble.values[p]
        lines.extend(
            f"{p},{float(times[k])!r},{float(vals[k])!r}" for k in range(len(times))
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def path_solution_to_csv(sol: PathSolution, x: np.ndarray, path) -> None:
    """Snapshot export, long form: (t, x, re_u, im_u) rows."""
    lines = ["t,x,re_u,im_u"]
    for j, t in enumerate(sol.times):
        col = sol.states[:, j]
        lines.extend(
            f"{float(t)!r},{float(x[i])!r},{float(col[i].real)!r},{float(col[i].imag)!r}"
            for i in range(len(x))
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def euler_maruyama_ito(
    H: DiscreteHamiltonian,
    increments: np.ndarray,
    horizon: float,
    u0: np.ndarray,
    n_steps: int,
    return_trajectory: bool = False,
) -> np.ndarray:
    """Explicit Euler-Maruyama for du = -(1/2) H^2 u dt - i H u dbeta.

    Runs in the eigenbasis, mode by mode.  n_steps must divide the
    number of given increments; coarser steps sum consecutive fine
    increments so every refinement level sees the same path.
    """
    increments = np.asarray(increments, dtype=float)
    n_fine = len(increments)
    if n_steps < 1 or n_fine % n_steps != 0:
        raise DomainError(
            f"n_steps={n_steps} must divide the path's {n_fine} increments"
        )
    if len(u0) != H.n:
        raise DomainError("u0 length does not match the Hamiltonian grid")
    group = n_fine // n_steps
    dbeta = increments.reshape(n_steps, group).sum(axis=1)
    dt = horizon / n_steps
    lam = H.eigenvalues
    c = H.to_eigenbasis(np.asarray(u0, dtype=complex))
    amax = np.max(np.abs(c))
    active = np.abs(c) > 1e-12 * amax if amax > 0 else np.zeros_like(lam, bool)
    # round-off occupation of stiff modes would be amplified without bound
    c = np.where(active, c, 0.0)
    lam_max2 = float(np.max(lam[active] ** 2)) if active.any() else 0.0
    if dt * lam_max2 > 1.0:
        warnings.warn(
            f"dt * max occupied eigenvalue^2 = {dt * lam_max2:.3g} > 1; "
            "the explicit step amplifies those modes",
            StabilityWarning,
            stacklevel=2,
        )
    drift = 1.0 - 0.5 * lam**2 * dt
    traj = np.empty((n_steps + 1, H.n), dtype=complex) if return_trajectory else None
    if return_trajectory:
        traj[0] = H.from_eigenbasis(c)
    for k in range(n_steps):
        c = c * (drift - 1j * lam * dbeta[k])
        if return_trajectory:
            traj[k + 1] = H.from_eigenbasis(c)
    if return_trajectory:
        return traj
    return H.from_eigenbasis(c)
