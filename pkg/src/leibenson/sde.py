"""Parallel Euler-Maruyama simulation of the linearized degenerate SDE

    dX = q^(p-1) grad_rho(t, X) dt + sqrt(2 q^(p-1) rho(t, X)) dW,

whose time marginals are pinned to the shifted self-similar profile.

Reproducibility contract
------------------------
Every random number is a pure function of (seed, domain, particle index,
step index) through counter-based Philox streams:

- domain 0: initial radius uniforms (word 0 of counter block i),
- domain 1: initial direction Gaussians (counter block i),
- domain 2: dynamics Gaussians (counter block step * n_particles + i).

One 4-word counter block serves one particle-step; uniforms are
(word >> 11 + 0.5) * 2^-53 and Gaussians come from Box-Muller pairs with
fixed word consumption. Consequently results are bitwise independent of the
worker-thread count and of how particles are partitioned into blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NumericalBlowup
from .field import FieldEvaluator
from .params import LeibensonParams

__all__ = [
    "SDEConfig",
    "ParticleEnsemble",
    "CouplingDiagnostic",
    "NoiseSource",
    "init_ensemble",
    "step",
    "simulate",
    "simulate_coupled",
    "resolve_workers",
]

_DOMAIN_RADIUS = 0
_DOMAIN_DIRECTION = 1
_DOMAIN_DYNAMICS = 2

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def resolve_workers(requested: int | None) -> int:
    """Worker count: requested (or cpu count), capped by LEIBENSON_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("LEIBENSON_THREADS")
    if cap is not None:
        n = min(n, max(1, int(cap)))
    return max(1, n)


class NoiseSource:
    """Counter-based per-particle random streams for one (seed, n_particles) run."""

    def __init__(self, seed: int, n_particles: int, d: int):
        self.seed = int(seed) & _MASK64
        self.n = int(n_particles)
        self.d = int(d)

    def _raw(self, domain: int, counter_start: int, n_words: int) -> np.ndarray:
        key = np.array([self.seed, domain], dtype=_U64)
        bitgen = np.random.Philox(key=key, counter=counter_start)
        return bitgen.random_raw(n_words)

    @staticmethod
    def _uniform(words: np.ndarray) -> np.ndarray:
        return ((words >> _U64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def _box_muller(self, blocks: np.ndarray) -> np.ndarray:
        """(m, 4) uniform words -> (m, d) standard Gaussians, d <= 3."""
        u = self._uniform(blocks)
        r1 = np.sqrt(-2.0 * np.log(u[:, 0]))
        a1 = (2.0 * np.pi) * u[:, 1]
        cols = [r1 * np.cos(a1)]
        if self.d >= 2:
            cols.append(r1 * np.sin(a1))
        if self.d >= 3:
            r2 = np.sqrt(-2.0 * np.log(u[:, 2]))
            cols.append(r2 * np.cos((2.0 * np.pi) * u[:, 3]))
        return np.stack(cols, axis=1)

    def initial_radius_uniforms(self, i0: int = 0, i1: int | None = None) -> np.ndarray:
        i1 = self.n if i1 is None else i1
        m = i1 - i0
        words = self._raw(_DOMAIN_RADIUS, i0, 4 * m).reshape(m, 4)
        return self._uniform(words[:, 0])

    def initial_directions(self, i0: int = 0, i1: int | None = None) -> np.ndarray:
        i1 = self.n if i1 is None else i1
        m = i1 - i0
        g = self._box_muller(self._raw(_DOMAIN_DIRECTION, i0, 4 * m).reshape(m, 4))
        norm = np.linalg.norm(g, axis=1)
        safe = np.where(norm > 0.0, norm, 1.0)
        dirs = g / safe[:, None]
        dirs[norm == 0.0] = np.eye(self.d)[0]
        return dirs

    def gaussians(self, step_index: int, i0: int, i1: int,
                  refinement: int = 0) -> np.ndarray:
        """Dynamics noise for particles [i0, i1) at one step: (i1-i0, d).

        With ``refinement`` = L > 0, the step increment aggregates 2^L
        sub-step draws (indices step*2^L .. step*2^L + 2^L - 1, scaled by
        2^(-L/2)), so runs at dt and dt/2^L share one Brownian path when the
        finer run uses refinement 0 at the sub-step indexing.
        """
        m = i1 - i0
        if refinement == 0:
            start = step_index * self.n + i0
            return self._box_muller(self._raw(_DOMAIN_DYNAMICS, start, 4 * m).reshape(m, 4))
        levels = 1 << refinement
        acc = np.zeros((m, self.d))
        base = step_index * levels
        for j in range(levels):
            start = (base + j) * self.n + i0
            acc += self._box_muller(self._raw(_DOMAIN_DYNAMICS, start, 4 * m).reshape(m, 4))
        return acc / math.sqrt(levels)


@dataclass(frozen=True)
class SDEConfig:
    """Immutable description of one simulation run."""

    params: LeibensonParams
    delta: float
    t_final: float
    dt: float
    n_particles: int
    seed: int
    snap_times: tuple[float, ...] = ()
    origin_clamp: float | None = None
    zero_noise: bool = False
    threads: int | None = None
    noise_refinement: int = 0

    def __post_init__(self):
        if not self.delta > 0.0:
            raise DomainError("simulation requires delta > 0 (coefficients degenerate at t = 0)")
        if not self.dt > 0.0:
            raise DomainError("dt must be positive")
        if self.t_final < 0.0:
            raise DomainError("t_final must be >= 0")
        if self.t_final > 0.0 and self.dt > self.t_final * (1.0 + 1e-12):
            raise DomainError("dt must not exceed t_final")
        if self.n_particles < 1:
            raise DomainError("need at least one particle")
        object.__setattr__(self, "snap_times", tuple(sorted(self.snap_times)))
        for ts in self.snap_times:
            if ts < 0.0 or ts > self.t_final * (1.0 + 1e-12) + self.dt / 2:
                raise DomainError(f"snap time {ts} outside [0, t_final]")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt)) if self.t_final > 0 else 0

    @property
    def snap_indices(self) -> tuple[int, ...]:
        idx = sorted({min(self.n_steps, int(round(ts / self.dt))) for ts in self.snap_times})
        return tuple(idx)

    def actual_snap_times(self) -> tuple[float, ...]:
        """Snap times rounded onto the dt grid (the rounding actually applied)."""
        return tuple(i * self.dt for i in self.snap_indices)

    def resolve_origin_clamp(self) -> float:
        """Clamp radius used for coefficient evaluation when p < 2."""
        if self.origin_clamp is not None:
            return self.origin_clamp
        r0 = self.params.r_unit * self.delta ** (1.0 / self.params.beta)
        return 1e-8 * r0


@dataclass
class ParticleEnsemble:
    """N particle positions at a common simulation time, with stream identities."""

    time: float
    positions: np.ndarray           # (N, d)
    stream_ids: np.ndarray          # (N,) uint64, index into the seed's streams
    seed: int

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.time, self.positions.copy(),
                                self.stream_ids.copy(), self.seed)


@dataclass(frozen=True)
class CouplingDiagnostic:
    """Trajectory of the coupling functional mean ln(1 + |X-Y|^2 / eps^2)."""

    times: tuple[float, ...]
    log_distance: tuple[float, ...]
    median_distance: tuple[float, ...]
    epsilon: float

    def as_dict(self) -> dict:
        return {
            "times": list(self.times),
            "log_distance": list(self.log_distance),
            "median_distance": list(self.median_distance),
            "epsilon": self.epsilon,
        }


class _Engine:
    """Precomputed constants plus the vectorized one-step kernel."""

    def __init__(self, config: SDEConfig):
        self.config = config
        p = config.params
        self.p = p
        self.field = FieldEvaluator(p, delta=config.delta)
        self.qfac = p.q ** (p.p - 1.0)
        self.s = p.s
        self.clamp = config.resolve_origin_clamp() if p.p < 2.0 else 0.0
        tfinal_tau = config.t_final + config.delta
        self.r_bound = 10.0 * p.r_unit * tfinal_tau ** (1.0 / p.beta)
        self.sqdt = math.sqrt(config.dt)

    def _tau_consts(self, t: float):
        p = self.p
        tau = t + self.config.delta
        kt = p.kappa * tau ** (-self.s / p.beta)
        cpref = p.coeff_prefactor * tau ** p.coeff_time_exponent
        radius = (p.c_norm / kt) ** (1.0 / self.s)
        return kt, cpref, radius

    def coefficients(self, t: float, x: np.ndarray):
        """Vectorized (drift, sigma) at simulation time t for positions x (m, d)."""
        p = self.p
        s = self.s
        kt, cpref, radius = self._tau_consts(t)
        r = np.sqrt(np.einsum("ij,ij->i", x, x))
        rc = np.maximum(r, self.clamp) if self.clamp > 0.0 else r
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fp = np.maximum(p.c_norm - kt * rc ** s, 0.0)
            rho = cpref * fp * rc ** (2.0 - s)
            rc_safe = np.where(rc > 0.0, rc, 1.0)
            mfac = cpref * ((2.0 - s) * fp * rc_safe ** -s - kt * s)
            inside = rc < radius
            positive = r > 0.0
            scale = np.where(inside & positive,
                             self.qfac * mfac * (rc / np.where(positive, r, 1.0)), 0.0)
            rho = np.where(rc < radius, rho, 0.0)
        drift = scale[:, None] * x
        sigma = np.sqrt(2.0 * self.qfac * rho)
        return drift, sigma

    def advance_block(self, positions: np.ndarray, k: int, i0: int, i1: int,
                      noise: NoiseSource) -> float:
        """Advance particles [i0, i1) from step k to k+1 in place.

        Returns the max squared radius of the block after the update (NaN
        propagates so the caller's bound check catches non-finite positions).
        """
        cfg = self.config
        t = k * cfg.dt
        x = positions[i0:i1]
        drift, sigma = self.coefficients(t, x)
        if cfg.zero_noise:
            x += drift * cfg.dt
        else:
            xi = noise.gaussians(k, i0, i1, cfg.noise_refinement)
            x += drift * cfg.dt + (sigma * self.sqdt)[:, None] * xi
        return float(np.max(np.einsum("ij,ij->i", x, x)))

    def advance_coupled_block(self, pos_x: np.ndarray, pos_y: np.ndarray, k: int,
                              i0: int, i1: int, noise: NoiseSource) -> float:
        """Advance both coupled ensembles with identical Gaussian increments."""
        cfg = self.config
        t = k * cfg.dt
        x = pos_x[i0:i1]
        y = pos_y[i0:i1]
        drift_x, sigma_x = self.coefficients(t, x)
        drift_y, sigma_y = self.coefficients(t, y)
        if cfg.zero_noise:
            x += drift_x * cfg.dt
            y += drift_y * cfg.dt
        else:
            xi = noise.gaussians(k, i0, i1, cfg.noise_refinement)
            x += drift_x * cfg.dt + (sigma_x * self.sqdt)[:, None] * xi
            y += drift_y * cfg.dt + (sigma_y * self.sqdt)[:, None] * xi
        m = max(float(np.max(np.einsum("ij,ij->i", x, x))),
                float(np.max(np.einsum("ij,ij->i", y, y))))
        return m


def _blocks(n: int, workers: int) -> list[tuple[int, int]]:
    size = (n + workers - 1) // workers
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def _check_bound(max_r2: float, bound: float, t: float):
    if not (max_r2 <= bound * bound):
        if math.isnan(max_r2):
            raise NumericalBlowup(f"non-finite particle position at t={t:.6g}", time=t)
        raise NumericalBlowup(
            f"particle radius {math.sqrt(max_r2):.6g} exceeded 10 x support radius "
            f"at t={t:.6g}; dt is likely too large", time=t)


def init_ensemble(config: SDEConfig, at_time: float = 0.0) -> ParticleEnsemble:
    """Draw N exact samples of the shifted profile at simulation time ``at_time``.

    Radii come from the inverse radial CDF, directions from normalized
    d-dimensional Gaussians; both from the particle's own counter-based
    stream, so the ensemble is a pure function of (seed, N, at_time).
    """
    field = FieldEvaluator(config.params, delta=config.delta)
    noise = NoiseSource(config.seed, config.n_particles, config.params.d)
    u = noise.initial_radius_uniforms()
    radii = np.asarray(field.sample_radius(at_time, u))
    dirs = noise.initial_directions()
    positions = radii[:, None] * dirs
    ids = np.arange(config.n_particles, dtype=np.uint64)
    return ParticleEnsemble(time=float(at_time), positions=positions, stream_ids=ids,
                            seed=config.seed)


def step(ensemble: ParticleEnsemble, config: SDEConfig) -> ParticleEnsemble:
    """One Euler-Maruyama step; returns a new ensemble at time + dt."""
    if ensemble.time > config.t_final + config.dt / 2 - config.dt:
        raise DomainError("step would advance past t_final")
    k = int(round(ensemble.time / config.dt))
    if abs(k * config.dt - ensemble.time) > 1e-9 * max(config.dt, 1.0):
        raise DomainError("ensemble time is not aligned to the dt grid")
    engine = _Engine(config)
    noise = NoiseSource(config.seed, config.n_particles, config.params.d)
    out = ensemble.copy()
    m = engine.advance_block(out.positions, k, 0, out.n, noise)
    _check_bound(m, engine.r_bound, (k + 1) * config.dt)
    out.time = (k + 1) * config.dt
    return out


def simulate(config: SDEConfig, *, initial: ParticleEnsemble | None = None
             ) -> list[ParticleEnsemble]:
    """Run the full simulation, returning snapshots at the configured times.

    Snapshots are deterministic functions of (config, seed); the particle
    loop runs in parallel over index blocks with results independent of the
    schedule. ``initial`` (must sit on the dt grid) supports restarts.
    """
    engine = _Engine(config)
    noise = NoiseSource(config.seed, config.n_particles, config.params.d)
    if initial is None:
        ens = init_ensemble(config)
        k0 = 0
    else:
        ens = initial.copy()
        k0 = int(round(ens.time / config.dt))
        if abs(k0 * config.dt - ens.time) > 1e-9 * max(config.dt, 1.0):
            raise DomainError("initial ensemble time is not aligned to the dt grid")
    positions = ens.positions
    n = ens.n
    workers = resolve_workers(config.threads)
    blocks = _blocks(n, workers)
    snap_at = set(config.snap_indices)
    snapshots: list[ParticleEnsemble] = []

    def take_snapshot(k: int):
        snapshots.append(ParticleEnsemble(time=k * config.dt,
                                          positions=positions.copy(),
                                          stream_ids=ens.stream_ids.copy(),
                                          seed=config.seed))

    if k0 in snap_at:
        take_snapshot(k0)

    if workers == 1 or len(blocks) == 1:
        for k in range(k0, config.n_steps):
            m = engine.advance_block(positions, k, 0, n, noise)
            _check_bound(m, engine.r_bound, (k + 1) * config.dt)
            if (k + 1) in snap_at:
                take_snapshot(k + 1)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k in range(k0, config.n_steps):
                futures = [pool.submit(engine.advance_block, positions, k, i0, i1, noise)
                           for i0, i1 in blocks]
                m = max(f.result() for f in futures)
                _check_bound(m, engine.r_bound, (k + 1) * config.dt)
                if (k + 1) in snap_at:
                    take_snapshot(k + 1)
    return snapshots


def simulate_coupled(config: SDEConfig, offset, epsilon: float) -> CouplingDiagnostic:
    """Shared-noise coupled run: Y(0) = X(0) + offset, identical Gaussians.

    Records the mean of ln(1 + |X-Y|^2/eps^2) and the median distance at t=0
    and every snap time. This is a reported diagnostic of the pathwise
    contraction structure, not a hard assertion.
    """
    p = config.params
    offset = np.asarray(offset, dtype=float)
    if offset.shape != (p.d,):
        raise DomainError(f"offset must be a vector in R^{p.d}")
    r0 = p.r_unit * config.delta ** (1.0 / p.beta)
    if float(np.linalg.norm(offset)) > 1e-3 * r0:
        raise DomainError("offset must be small: |offset| <= 1e-3 * initial support radius")
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")

    engine = _Engine(config)
    noise = NoiseSource(config.seed, config.n_particles, p.d)
    ens = init_ensemble(config)
    pos_x = ens.positions
    pos_y = pos_x + offset
    workers = resolve_workers(config.threads)
    blocks = _blocks(ens.n, workers)
    snap_at = set(config.snap_indices)

    times, logd, medd = [], [], []

    def record(k: int):
        diff2 = np.einsum("ij,ij->i", pos_x - pos_y, pos_x - pos_y)
        times.append(k * config.dt)
        logd.append(float(np.mean(np.log1p(diff2 / epsilon ** 2))))
        medd.append(float(np.median(np.sqrt(diff2))))

    record(0)
    if workers == 1 or len(blocks) == 1:
        for k in range(config.n_steps):
            m = engine.advance_coupled_block(pos_x, pos_y, k, 0, ens.n, noise)
            _check_bound(m, engine.r_bound, (k + 1) * config.dt)
            if (k + 1) in snap_at:
                record(k + 1)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k in range(config.n_steps):
                futures = [pool.submit(engine.advance_coupled_block, pos_x, pos_y,
                                       k, i0, i1, noise) for i0, i1 in blocks]
                m = max(f.result() for f in futures)
                _check_bound(m, engine.r_bound, (k + 1) * config.dt)
                if (k + 1) in snap_at:
                    record(k + 1)
    return CouplingDiagnostic(times=tuple(times), log_distance=tuple(logd),
                              median_distance=tuple(medd), epsilon=float(epsilon))


def refined_config(config: SDEConfig, factor: int) -> SDEConfig:
    """Config with dt divided by ``factor`` (for self-convergence studies)."""
    return replace(config, dt=config.dt / factor)
