"""Branching-particle approximation of the measure-valued branching process.

The process is approximated by a cloud of particles of mass ``epsilon``
performing independent Brownian motions between Poissonized branching
events.  Event rates are chosen so the generator of the total-mass
process matches the branching mechanism to first order in ``epsilon``:

* binary split at per-particle rate ``beta'/epsilon + (alpha - m1)/2``,
* death at per-particle rate ``beta'/epsilon - (alpha - m1)/2``,
* a jump of size y in ((k-1)*eps, k*eps] becomes ``k = ceil(y/eps)``
  extra offspring at per-particle rate ``eps * n(bin_k)``, for k >= 2.

Here ``m1 = sum k * eps * n(bin_k)`` is the discretized mean mass carried
by jumps, and ``beta' = beta + (1/2) * integral_0^eps y^2 n(dy)`` folds
the sub-resolution jumps into the quadratic coefficient so the variance
stays correct.  With these choices the total-mass semigroup converges to
the continuous-state process as eps -> 0, which the tests check against
the closed-form mass Laplace transform.

Supercritical mass grows like e^t, so horizons beyond t ~ 15 are out of
reach for the plain scheme.  Front statistics (rightmost particle, the
derivative-martingale value, clusters seen from the tip) are carried by
particles within a few units of the front, so the engine optionally
prunes everything deeper than ``barrier_offset`` below the centered
front position once t >= 1.  Pruning a particle at depth L below the
front discards descendant mass that would return to the front with
probability of order e^{-sqrt(2) L}, which bounds the relative bias;
the tests compare two offsets to confirm the observables are stable.

Replicas are independent: replica i draws from a generator seeded by the
i-th spawn of SeedSequence(seed), so results are bit-identical for a
fixed (seed, config) regardless of how many replicas run.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kpp import front_m
from .mechanism import BranchingMechanism

SQRT2 = math.sqrt(2.0)
NEG_INF = float("-inf")

EVENT_PROB_CAP = 0.2
DEFAULT_EXPLOSION_CAP = 10_000_000
_JUMP_TAIL_FRACTION = 1e-6
_BARRIER_START_TIME = 1.0


class ParticlesError(ValueError):
    """Invalid configuration or inputs for the particle engine."""


class AcceptanceTooLowError(ParticlesError):
    """Rejection sampling estimated an acceptance rate too small to finish."""


# ---------------------------------------------------------------------------
# point measures and clouds


@dataclass(frozen=True, eq=False)
class PointMeasure:
    """Finite atomic measure: locations with strictly positive weights.

    The rightmost point of the empty measure is -inf by convention.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        locs = np.asarray(self.locations, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if locs.ndim != 1 or wts.ndim != 1 or locs.shape != wts.shape:
            raise ParticlesError("locations and weights must be matching 1-d arrays")
        if locs.size and not np.all(np.isfinite(locs)):
            raise ParticlesError("locations must be finite")
        if wts.size and (not np.all(np.isfinite(wts)) or np.any(wts <= 0.0)):
            raise ParticlesError("weights must be finite and positive")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def empty(cls) -> "PointMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def single(cls, location: float, weight: float = 1.0) -> "PointMeasure":
        return cls(np.array([float(location)]), np.array([float(weight)]))

    @classmethod
    def from_cloud(cls, cloud: "ParticleCloud") -> "PointMeasure":
        if cloud.count == 0:
            return cls.empty()
        return cls(cloud.positions.copy(), np.full(cloud.count, cloud.epsilon))

    @property
    def size(self) -> int:
        return int(self.locations.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum()) if self.size else 0.0

    @property
    def rightmost(self) -> float:
        return float(self.locations.max()) if self.size else NEG_INF

    def shifted(self, dz: float) -> "PointMeasure":
        """Translate every atom by +dz."""
        return PointMeasure(self.locations + float(dz), self.weights.copy())

    def integrate(self, fn) -> float:
        """Sum of weight * fn(location); fn must accept an ndarray."""
        if not self.size:
            return 0.0
        return float(np.sum(self.weights * np.asarray(fn(self.locations), dtype=float)))


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    """Snapshot of the particle system: equal-mass atoms at one time."""

    time: float
    positions: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1:
            raise ParticlesError("positions must be a 1-d array")
        if pos.size and not np.all(np.isfinite(pos)):
            raise ParticlesError("positions must be finite")
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ParticlesError("epsilon must be positive and finite")
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return int(self.positions.size)

    @property
    def total_mass(self) -> float:
        return self.epsilon * self.count

    @property
    def alive(self) -> bool:
        return self.count > 0


# ---------------------------------------------------------------------------
# offspring rates


@dataclass(frozen=True)
class OffspringTable:
    """Per-particle event rates realizing the mechanism at resolution eps.

    jump_counts[i] >= 2 extra offspring arrive at rate jump_rates[i]; the
    tables are empty for a purely quadratic mechanism.
    """

    split_rate: float
    death_rate: float
    jump_counts: np.ndarray
    jump_rates: np.ndarray

    @property
    def total_rate(self) -> float:
        return self.split_rate + self.death_rate + float(self.jump_rates.sum())


def offspring_table(mech: BranchingMechanism, epsilon: float) -> OffspringTable:
    """Derive split/death/jump rates from (alpha, beta, n) at resolution eps.

    Sub-resolution jumps (y <= eps) enter through the adjusted quadratic
    coefficient beta' = beta + (1/2) int_0^eps y^2 n(dy).  Larger jumps are
    binned by offspring count k = ceil(y/eps).  For a measure with unbounded
    support the far tail (a fraction _JUMP_TAIL_FRACTION of the jump rate)
    is lumped into one bin at the tail's mean size, so the total jump rate
    and the mean mass inflow are both preserved exactly; only the shape of
    the very largest jumps is coarsened.
    """
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise ParticlesError("epsilon must be positive and finite")
    levy = mech.levy
    beta_eff = mech.beta + 0.5 * levy.moment_between(2, 0.0, epsilon)

    counts: list[int] = []
    rates: list[float] = []
    if not levy.is_trivial:
        y_top = _support_top(levy, epsilon)
        k_top = max(1, int(math.ceil(y_top / epsilon)))
        for k in range(2, k_top + 1):
            r = epsilon * levy.mass_between((k - 1) * epsilon, k * epsilon)
            if r > 0.0:
                counts.append(k)
                rates.append(r)
        tail_mass = levy.mass_between(k_top * epsilon, math.inf)
        if tail_mass > 0.0:
            tail_mean = levy.moment_between(1, k_top * epsilon, math.inf) / tail_mass
            counts.append(max(k_top + 1, int(round(tail_mean / epsilon))))
            rates.append(epsilon * tail_mass)

    jump_counts = np.asarray(counts, dtype=np.int64)
    jump_rates = np.asarray(rates, dtype=float)
    m1 = float(np.sum(jump_counts * jump_rates))
    drift = mech.alpha - m1
    split = beta_eff / epsilon + 0.5 * drift
    death = beta_eff / epsilon - 0.5 * drift
    if split <= 0.0 or death < 0.0:
        raise ParticlesError(
            "epsilon too large for this mechanism: derived split/death rates "
            f"({split:.4g}, {death:.4g}) leave the admissible range"
        )
    return OffspringTable(split, death, jump_counts, jump_rates)


def _support_top(levy, epsilon: float) -> float:
    """Upper end of the jump sizes kept as explicit bins."""
    if levy.kind == "atoms":
        return max(y for y, _ in levy.points)
    if levy.kind == "tabulated":
        return levy.y_grid[-1]
    if levy.kind == "truncated-stable":
        if math.isfinite(levy.cutoff):
            return levy.cutoff
        # mass above y falls off like y**(-index); keep bins until the
        # remaining rate is a negligible fraction of the rate above eps
        return epsilon * _JUMP_TAIL_FRACTION ** (-1.0 / levy.index)
    raise ParticlesError(f"unsupported jump measure kind: {levy.kind}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Inputs for one batch of replicas.

    snapshot_times defaults to (t_end,); t_end is appended when missing.
    Every snapshot must land on the step grid (a multiple of dt up to
    rounding).  The cap on the per-step event probability (total rate
    times dt at most 0.2) is a validity bound, not an accuracy target;
    the chance of a second event in the same step is dropped, so biases
    scale with rate * dt and accuracy-sensitive runs should keep that
    product near 0.05.  barrier_offset, when set, prunes particles deeper than
    that distance below the centered front once t >= 1; it requires the
    unit-drift normalization since the front location is computed for
    alpha = 1.  stats_only skips cloud snapshots to save memory.
    """

    mech: BranchingMechanism
    epsilon: float
    dt: float
    t_end: float
    seed: int
    n_replicas: int
    initial: PointMeasure | None = None
    snapshot_times: tuple[float, ...] | None = None
    barrier_offset: float | None = None
    explosion_cap: int = DEFAULT_EXPLOSION_CAP
    stats_only: bool = False
    table: OffspringTable = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ParticlesError("epsilon must be positive and finite")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ParticlesError("dt must be positive and finite")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ParticlesError("t_end must be positive and finite")
        if self.n_replicas < 1:
            raise ParticlesError("n_replicas must be at least 1")
        if self.explosion_cap < 1:
            raise ParticlesError("explosion_cap must be at least 1")
        if self.barrier_offset is not None:
            if not (self.barrier_offset > 0.0 and math.isfinite(self.barrier_offset)):
                raise ParticlesError("barrier_offset must be positive and finite")
            if abs(self.mech.alpha - 1.0) > 1e-9:
                raise ParticlesError(
                    "front tracking assumes the unit-drift normalization (alpha = 1)"
                )
        table = offspring_table(self.mech, self.epsilon)
        cap = EVENT_PROB_CAP / table.total_rate
        if self.dt > cap:
            raise ParticlesError(
                f"dt = {self.dt:.4g} exceeds the stability cap {cap:.4g} "
                f"(total per-particle event rate {table.total_rate:.4g})"
            )
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "snapshot_times", self._resolve_snapshots())

    def _resolve_snapshots(self) -> tuple[float, ...]:
        times = list(self.snapshot_times) if self.snapshot_times else []
        if not times or times[-1] < self.t_end:
            times.append(self.t_end)
        times = sorted(float(t) for t in times)
        steps = []
        for t in times:
            if not 0.0 < t <= self.t_end + 1e-9:
                raise ParticlesError("snapshot times must lie in (0, t_end]")
            step = int(round(t / self.dt))
            if step < 1 or abs(step * self.dt - t) > 0.5 * self.dt:
                raise ParticlesError(
                    f"snapshot time {t} does not land on the dt = {self.dt} grid"
                )
            steps.append(step)
        if len(set(steps)) != len(steps):
            raise ParticlesError("snapshot times collide on the step grid")
        return tuple(times)

    def snapshot_steps(self) -> tuple[int, ...]:
        return tuple(int(round(t / self.dt)) for t in self.snapshot_times)

    def initial_positions(self) -> np.ndarray:
        """Expand the initial measure into particle positions.

        Each atom of weight w becomes round(w / epsilon) particles; an atom
        lighter than half a particle cannot be represented and raises.
        """
        init = self.initial if self.initial is not None else PointMeasure.single(0.0)
        if init.size == 0:
            return np.empty(0)
        pieces = []
        for x, w in zip(init.locations, init.weights):
            n = int(round(w / self.epsilon))
            if n < 1:
                raise ParticlesError(
                    f"initial atom of weight {w:.4g} is lighter than half a particle"
                )
            pieces.append(np.full(n, x))
        return np.concatenate(pieces)


# ---------------------------------------------------------------------------
# replica outputs


@dataclass(frozen=True, eq=False)
class ReplicaStats:
    """Per-replica observable paths along the snapshot grid.

    After extinction the rightmost-position entries are -inf and masses
    are zero.  A replica that trips the explosion guard is truncated: the
    remaining entries are nan, exploded is True, and survived stays True
    since the population was alive (and enormous) when the run stopped.
    """

    replica: int
    times: tuple[float, ...]
    m_path: tuple[float, ...]
    z_path: tuple[float, ...]
    mass_path: tuple[float, ...]
    survived: bool
    extinction_time: float | None
    exploded: bool


@dataclass(frozen=True, eq=False)
class SimResult:
    """All replica stats plus (unless stats_only) per-replica cloud snapshots.

    clouds[i] may be shorter than the snapshot grid when replica i hit the
    explosion guard.
    """

    stats: tuple[ReplicaStats, ...]
    clouds: tuple[tuple[ParticleCloud, ...], ...] | None

    def survival_frequency(self) -> float:
        return sum(1 for s in self.stats if s.survived) / len(self.stats)

    def m_values(self, snapshot: int = -1) -> np.ndarray:
        return np.array([s.m_path[snapshot] for s in self.stats])

    def z_values(self, snapshot: int = -1) -> np.ndarray:
        return np.array([s.z_path[snapshot] for s in self.stats])

    def mass_values(self, snapshot: int = -1) -> np.ndarray:
        return np.array([s.mass_path[snapshot] for s in self.stats])

    def mass_laplace_estimate(self, theta: float, snapshot: int = -1) -> tuple[float, float]:
        """Monte Carlo (mean, std error) of exp(-theta * total mass).

        An exploded replica contributes zero: its mass is at least the cap
        times epsilon, so the exponential is far below resolution.
        """
        masses = self.mass_values(snapshot)
        vals = np.where(np.isnan(masses), 0.0, np.exp(-theta * np.nan_to_num(masses)))
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        return mean, se


# ---------------------------------------------------------------------------
# the engine


def simulate(config: SimConfig) -> SimResult:
    """Run all replicas; bit-identical for a fixed (seed, config)."""
    snap_steps = config.snapshot_steps()
    children = np.random.SeedSequence(config.seed).spawn(config.n_replicas)
    keep_clouds = not config.stats_only
    all_stats = []
    all_clouds: list[tuple[ParticleCloud, ...]] = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        stats, clouds = _run_replica(config, rng, i, snap_steps, keep_clouds)
        all_stats.append(stats)
        if keep_clouds:
            all_clouds.append(clouds)
    return SimResult(tuple(all_stats), tuple(all_clouds) if keep_clouds else None)


def _event_thresholds(table: OffspringTable, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative per-step event probabilities: split, death, then jumps."""
    probs = np.concatenate([[table.split_rate, table.death_rate], table.jump_rates]) * dt
    return np.cumsum(probs), table.jump_counts


def _z_of(positions: np.ndarray, epsilon: float, t: float) -> float:
    """Derivative-martingale value of an equal-mass cloud at time t."""
    if positions.size == 0:
        return 0.0
    y = SQRT2 * t - positions
    return epsilon * float(np.sum(y * np.exp(-SQRT2 * y)))


def _run_replica(config, rng, replica, snap_steps, keep_clouds):
    dt = config.dt
    eps = config.epsilon
    sqrt_dt = math.sqrt(dt)
    thresholds, jump_counts = _event_thresholds(config.table, dt)
    has_jumps = jump_counts.size > 0
    barrier = config.barrier_offset
    cap = config.explosion_cap

    positions = config.initial_positions()
    extinction_time = None
    if positions.size == 0:
        extinction_time = 0.0
    exploded = False

    m_path: list[float] = []
    z_path: list[float] = []
    mass_path: list[float] = []
    clouds: list[ParticleCloud] = []

    normal = rng.normal
    uniform = rng.random
    snap_idx = 0
    n_steps = snap_steps[-1]
    for step in range(1, n_steps + 1):
        if positions.size:
            positions = positions + normal(0.0, sqrt_dt, positions.size)
            event = np.searchsorted(thresholds, uniform(positions.size))
            pieces = [positions[event != 1], positions[event == 0]]
            if has_jumps:
                jumping = (event >= 2) & (event < thresholds.size)
                if jumping.any():
                    reps = jump_counts[event[jumping] - 2]
                    pieces.append(np.repeat(positions[jumping], reps))
            positions = np.concatenate(pieces)
            t_now = step * dt
            if barrier is not None and t_now >= _BARRIER_START_TIME:
                positions = positions[positions >= front_m(1.0, t_now) - barrier]
            if positions.size == 0 and extinction_time is None:
                extinction_time = t_now
            if positions.size > cap:
                exploded = True
        if snap_idx < len(snap_steps) and step == snap_steps[snap_idx]:
            t = config.snapshot_times[snap_idx]
            if exploded:
                m_path.append(math.nan)
                z_path.append(math.nan)
                mass_path.append(math.nan)
            else:
                m_path.append(float(positions.max()) if positions.size else NEG_INF)
                z_path.append(_z_of(positions, eps, t))
                mass_path.append(eps * positions.size)
                if keep_clouds:
                    clouds.append(ParticleCloud(t, positions.copy(), eps))
            snap_idx += 1
        if exploded:
            break

    while len(m_path) < len(snap_steps):
        m_path.append(math.nan)
        z_path.append(math.nan)
        mass_path.append(math.nan)

    survived = exploded or positions.size > 0
    stats = ReplicaStats(
        replica=replica,
        times=config.snapshot_times,
        m_path=tuple(m_path),
        z_path=tuple(z_path),
        mass_path=tuple(mass_path),
        survived=survived,
        extinction_time=extinction_time,
        exploded=exploded,
    )
    return stats, tuple(clouds)


# ---------------------------------------------------------------------------
# cloud observables


def max_position(cloud: ParticleCloud) -> float:
    """Rightmost particle position, -inf for an empty cloud."""
    return float(cloud.positions.max()) if cloud.count else NEG_INF


def derivative_martingale(cloud: ParticleCloud, t: float) -> float:
    """Sum of mass * (sqrt(2) t - x) * exp(-sqrt(2)(sqrt(2) t - x)).

    Weights are signed: particles beyond sqrt(2) t contribute negatively,
    and the value of an empty cloud is 0.
    """
    return _z_of(cloud.positions, cloud.epsilon, t)


def extremal_measure(cloud: ParticleCloud, t: float) -> PointMeasure:
    """The cloud seen from the centered front: every atom shifted by -m(t)."""
    if t <= 0.0:
        raise ParticlesError("extremal measure needs t > 0")
    if cloud.count == 0:
        return PointMeasure.empty()
    shift = front_m(1.0, t)
    return PointMeasure(cloud.positions - shift, np.full(cloud.count, cloud.epsilon))


# ---------------------------------------------------------------------------
# conditioned clusters


@dataclass(frozen=True, eq=False)
class ConditionedClusterSample:
    """Clusters accepted by rejection sampling on M_t > sqrt(2) t + z.

    Each cluster is the final cloud recentered at its rightmost particle,
    so its rightmost point is exactly 0; overshoots[i] is M_t - sqrt(2) t - z
    for the i-th accepted replica.
    """

    clusters: tuple[PointMeasure, ...]
    overshoots: np.ndarray
    z: float
    t: float
    attempts: int

    @property
    def acceptance(self) -> float:
        return len(self.clusters) / self.attempts if self.attempts else 0.0


def sample_conditioned_clusters(
    config: SimConfig,
    z: float,
    t: float,
    n_accept: int,
    max_attempts: int | None = None,
) -> ConditionedClusterSample:
    """Collect n_accept clusters conditioned on the front exceeding sqrt(2) t + z.

    Replicas run in batches with seeds spawned deterministically from
    config.seed, so the accepted set depends only on (config, z, t).
    Raises AcceptanceTooLowError when a long run of attempts produces
    nothing (estimated acceptance below about 1e-6) or when max_attempts
    (default 500 per requested cluster, at least 20000) is exhausted.
    """
    if n_accept < 1:
        raise ParticlesError("n_accept must be at least 1")
    if max_attempts is None:
        max_attempts = max(20_000, 500 * n_accept)
    level = SQRT2 * t + z
    batch = max(64, min(4096, n_accept))
    base = dataclasses.replace(
        config,
        t_end=t,
        snapshot_times=(t,),
        stats_only=False,
        n_replicas=batch,
    )
    clusters: list[PointMeasure] = []
    overshoots: list[float] = []
    attempts = 0
    batch_index = 0
    while len(clusters) < n_accept:
        if attempts >= max_attempts:
            raise AcceptanceTooLowError(
                f"{len(clusters)} accepted in {attempts} attempts "
                f"(acceptance about {(len(clusters) + 1) / (attempts + 1):.2e})"
            )
        cfg = dataclasses.replace(base, seed=_batch_seed(config.seed, batch_index))
        batch_index += 1
        result = simulate(cfg)
        attempts += cfg.n_replicas
        for stats, snaps in zip(result.stats, result.clouds):
            if stats.exploded or not snaps:
                continue
            cloud = snaps[-1]
            m = max_position(cloud)
            if m > level:
                clusters.append(
                    PointMeasure(
                        cloud.positions - m,
                        np.full(cloud.count, cloud.epsilon),
                    )
                )
                overshoots.append(m - level)
                if len(clusters) == n_accept:
                    break
    return ConditionedClusterSample(
        clusters=tuple(clusters),
        overshoots=np.asarray(overshoots),
        z=float(z),
        t=float(t),
        attempts=attempts,
    )


def sample_conditioned_cluster(
    config: SimConfig, z: float, t: float
) -> tuple[PointMeasure, float]:
    """One draw from the conditioned-cluster distribution."""
    sample = sample_conditioned_clusters(config, z, t, n_accept=1)
    return sample.clusters[0], float(sample.overshoots[0])


def _batch_seed(seed: int, batch_index: int) -> int:
    # distinct deterministic seeds per rejection batch, clear of the base seed
    return (seed + 0x9E3779B97F4A7C15 * (batch_index + 1)) % (1 << 63)


# ---------------------------------------------------------------------------
# joint front statistics


@dataclass(frozen=True, eq=False)
class FrontStatsReport:
    """Survival-conditioned front observables along a time ladder.

    For each time: number of surviving replicas used (those with a
    positive derivative-martingale value), the sample correlation between
    the integral of phi against the recentered measure and that value,
    and the empirical Laplace functional with its target gap when a limit
    constant was supplied.
    """

    t_values: tuple[float, ...]
    n_used: tuple[int, ...]
    correlations: tuple[float, ...]
    laplace_values: tuple[float, ...]
    laplace_target: float | None
    laplace_gaps: tuple[float, ...] | None


def joint_front_stats(
    config: SimConfig,
    phi,
    t_ladder: tuple[float, ...] = (5.0, 10.0, 20.0),
    c_phi: float | None = None,
) -> FrontStatsReport:
    """Correlate front-recentered integrals of phi with the martingale value.

    phi may be a callable on ndarrays or any object with an evaluate
    method.  Each surviving replica with Z_t > 0 contributes the integral
    of phi against the cloud shifted by -(m(t) + log(Z_t)/sqrt(2)); the
    report carries the correlation with Z_t per time and the empirical
    Laplace functional, compared against exp(-c_phi) when given.
    """
    phi_eval = phi.evaluate if hasattr(phi, "evaluate") else phi
    ladder = tuple(sorted(float(t) for t in t_ladder))
    if len(ladder) < 1 or len(set(ladder)) != len(ladder):
        raise ParticlesError("t_ladder must contain distinct times")
    cfg = dataclasses.replace(
        config, t_end=ladder[-1], snapshot_times=ladder, stats_only=False
    )
    result = simulate(cfg)

    n_used = []
    correlations = []
    laplace_values = []
    for j, t in enumerate(ladder):
        shift0 = front_m(1.0, t)
        integrals = []
        z_vals = []
        for stats, snaps in zip(result.stats, result.clouds):
            if stats.exploded or j >= len(snaps):
                continue
            z = stats.z_path[j]
            if not (z > 0.0) or not stats.survived:
                continue
            cloud = snaps[j]
            shifted = cloud.positions - shift0 - math.log(z) / SQRT2
            integrals.append(cfg.epsilon * float(np.sum(phi_eval(shifted))))
            z_vals.append(z)
        n = len(integrals)
        n_used.append(n)
        if n < 10:
            warnings.warn(
                f"only {n} usable survivors at t = {t}", RuntimeWarning, stacklevel=2
            )
        arr = np.asarray(integrals)
        zs = np.asarray(z_vals)
        if n >= 2 and arr.std() > 0.0 and zs.std() > 0.0:
            correlations.append(float(np.corrcoef(arr, zs)[0, 1]))
        else:
            correlations.append(0.0)
        laplace_values.append(float(np.mean(np.exp(-arr))) if n else math.nan)

    target = math.exp(-float(c_phi)) if c_phi is not None else None
    gaps = None
    if target is not None:
        gaps = tuple(abs(v - target) / target for v in laplace_values)
    return FrontStatsReport(
        t_values=ladder,
        n_used=tuple(n_used),
        correlations=tuple(correlations),
        laplace_values=tuple(laplace_values),
        laplace_target=target,
        laplace_gaps=gaps,
    )
