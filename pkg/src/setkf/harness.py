"""Seeded trajectory simulation, Monte Carlo aggregation, and comparisons.

Randomness contract: every trajectory draws from one generator seeded by
``[seed, run_index]`` (a counter-based split of the master seed), so runs
are independent, order-insensitive and exactly reproducible.  The draw
order within a trajectory is documented in :func:`simulate`.
"""

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationFailed, ConfigError
from .estimation import (
    TriggerPolicy,
    clset_measurement_update,
    initial_state,
    offline_drop_update,
    olset_measurement_update,
    standard_kf_update,
    time_update,
    trigger_decide,
)
from .matrices import sym
from .model import model_from_dict, steady_state, validate_model
from .analysis import closed_loop_rate_bounds, open_loop_rate

FILTER_KINDS = ("standard", "olset", "clset", "offline-baseline")

_VALID_PAIRING = {
    "standard": ("periodic",),
    "olset": ("open_loop",),
    "clset": ("closed_loop",),
    "offline-baseline": ("periodic", "random", "deterministic_threshold"),
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A simulation setup: plant, trigger, filter kind and run geometry."""

    model: object
    trigger: TriggerPolicy
    filter: str
    horizon: int
    runs: int = 1
    seed: int = 0
    burn_in: int = 200
    pre_roll: int = 0
    x0_mean: np.ndarray | None = None

    def __post_init__(self):
        if self.filter not in FILTER_KINDS:
            raise ConfigError(f"unknown filter kind {self.filter!r}")
        if self.trigger.variant not in _VALID_PAIRING[self.filter]:
            raise ConfigError(
                f"filter {self.filter!r} cannot be paired with trigger "
                f"{self.trigger.variant!r}"
            )
        if self.filter == "standard" and self.trigger.period != 1:
            raise ConfigError("the standard filter requires a period-1 trigger")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < horizon")
        if self.pre_roll < 0:
            raise ConfigError("pre_roll must be >= 0")
        if self.x0_mean is not None:
            x0 = np.asarray(self.x0_mean, dtype=float).reshape(-1)
            if x0.shape[0] != self.model.n:
                raise ConfigError("x0_mean has the wrong length")
            object.__setattr__(self, "x0_mean", x0)

    def to_dict(self):
        d = {
            "model": self.model.to_dict(),
            "trigger": self.trigger.to_dict(),
            "filter": self.filter,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "burn_in": self.burn_in,
            "pre_roll": self.pre_roll,
        }
        if self.x0_mean is not None:
            d["x0_mean"] = self.x0_mean.tolist()
        return d


def scenario_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("scenario config must be a JSON object")
    try:
        model = model_from_dict(data["model"])
        filt = data["filter"]
    except KeyError as exc:
        raise ConfigError(f"scenario config missing key {exc.args[0]!r}") from exc
    if "trigger" in data:
        trigger = TriggerPolicy.from_dict(data["trigger"])
    elif filt == "standard":
        trigger = TriggerPolicy.periodic(1)
    else:
        raise ConfigError("scenario config missing key 'trigger'")
    try:
        horizon = int(data["horizon"])
    except KeyError as exc:
        raise ConfigError("scenario config missing key 'horizon'") from exc
    return Scenario(
        model=model,
        trigger=trigger,
        filter=filt,
        horizon=horizon,
        runs=int(data.get("runs", 1)),
        seed=int(data.get("seed", 0)),
        burn_in=int(data.get("burn_in", min(200, max(0, horizon - 1)))),
        pre_roll=int(data.get("pre_roll", 0)),
        x0_mean=data.get("x0_mean"),
    )


def load_scenario(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario config {path}: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Per-step log of one simulated trajectory plus summary statistics."""

    gamma: np.ndarray
    P_trace: np.ndarray
    sq_err: np.ndarray
    P11: np.ndarray
    sq_err11: np.ndarray
    empirical_rate: float
    mean_P_trace: float
    P_trace_max: float
    burn_in: int
    P_prior_full: np.ndarray | None = None
    err_outer: np.ndarray | None = None


def _rng_for_run(seed, run_index):
    return np.random.default_rng([int(seed), int(run_index)])


def simulate(scenario, run_index=0, force_gamma=None, record_full=False):
    """Simulate one trajectory; deterministic given (seed, run_index).

    Draw order: x0 first, then ``pre_roll`` process-noise draws, then per
    step k the triple (w, v, zeta) with the w draw skipped at k = 0.  The
    zeta draw happens every step even for policies that ignore it, so
    trajectories with different policies share identical plant paths.

    ``force_gamma`` (a 0/1 sequence, testing hook) overrides the trigger
    decisions without changing the draw order.  The estimator-side update
    never receives the measurement when gamma = 0.
    """
    model = scenario.model
    pol = scenario.trigger
    T = scenario.horizon
    n, m = model.n, model.m
    A, C = model.A, model.C
    rng = _rng_for_run(scenario.seed, run_index)
    Lq = np.linalg.cholesky(model.Q)
    Lr = np.linalg.cholesky(model.R)
    L0 = np.linalg.cholesky(model.Sigma0)

    if force_gamma is not None:
        force_gamma = np.asarray(force_gamma).ravel()
        if force_gamma.shape[0] < T:
            raise ConfigError("force_gamma must cover the horizon")

    x = L0 @ rng.standard_normal(n)
    if scenario.x0_mean is not None:
        x = x + scenario.x0_mean
    for _ in range(scenario.pre_roll):
        x = A @ x + Lq @ rng.standard_normal(n)

    state = initial_state(model, scenario.x0_mean)
    Y_inv = np.linalg.inv(pol.Y) if pol.variant == "open_loop" else None
    Z_inv = np.linalg.inv(pol.Z) if pol.variant == "closed_loop" else None

    gamma_log = np.zeros(T, dtype=np.int8)
    P_trace = np.zeros(T)
    sq_err = np.zeros(T)
    P11 = np.zeros(T)
    sq_err11 = np.zeros(T)
    P_full = np.zeros((T, n, n)) if record_full else None
    err_outer = np.zeros((T, n, n)) if record_full else None

    for k in range(T):
        if k > 0:
            x = A @ x + Lq @ rng.standard_normal(n)
        y = C @ x + Lr @ rng.standard_normal(m)
        zeta = rng.random()
        y_pred = C @ state.x_prior
        if force_gamma is not None:
            gamma = int(force_gamma[k])
        else:
            gamma = trigger_decide(pol, y, y_pred, zeta, k)

        e = x - state.x_prior
        gamma_log[k] = gamma
        P_trace[k] = state.P_prior.trace()
        sq_err[k] = e @ e
        P11[k] = state.P_prior[0, 0]
        sq_err11[k] = e[0] * e[0]
        if record_full:
            P_full[k] = state.P_prior
            err_outer[k] = e[:, None] * e[None, :]

        if scenario.filter == "olset":
            state = olset_measurement_update(
                state, gamma, y if gamma else None, model, pol.Y, Y_inv=Y_inv
            )
        elif scenario.filter == "clset":
            z = (y - y_pred) if gamma else None
            state = clset_measurement_update(state, gamma, z, model, pol.Z, Z_inv=Z_inv)
        elif scenario.filter == "standard":
            state = standard_kf_update(state, y, model)
        else:
            if gamma:
                state = standard_kf_update(state, y, model)
            else:
                state = offline_drop_update(state)
        state = time_update(state, model)

    tail = slice(scenario.burn_in, T)
    return TrajectoryRecord(
        gamma=gamma_log,
        P_trace=P_trace,
        sq_err=sq_err,
        P11=P11,
        sq_err11=sq_err11,
        empirical_rate=float(gamma_log.mean()),
        mean_P_trace=float(P_trace[tail].mean()),
        P_trace_max=float(P_trace.max()),
        burn_in=scenario.burn_in,
        P_prior_full=P_full,
        err_outer=err_outer,
    )


@dataclass(frozen=True, eq=False)
class MonteCarloStats:
    """Cross-run aggregates of a scenario."""

    steps: np.ndarray
    rate_mean: np.ndarray
    P_mean: np.ndarray
    err_outer_mean: np.ndarray
    P_trace_mean: np.ndarray
    mse_mean: np.ndarray
    consistency_ratio: np.ndarray
    rate_overall: float
    rate_stderr: float
    terminal_P_mean: np.ndarray
    terminal_P_stderr: np.ndarray
    steady_trace_mean: float
    steady_trace_stderr: float
    P_trace_max: float
    drop_run_hist: dict
    arrival_run_hist: dict
    runs: int


def _maximal_runs(gamma, value):
    lengths = []
    count = 0
    for g in gamma:
        if g == value:
            count += 1
        elif count:
            lengths.append(count)
            count = 0
    if count:
        lengths.append(count)
    return lengths


def _stderr(values):
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        return np.zeros_like(values[0]) if values.ndim > 1 else 0.0
    return values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])


def monte_carlo(scenario):
    """Run ``scenario.runs`` independent trajectories and aggregate them."""
    T, n = scenario.horizon, scenario.model.n
    gamma_sum = np.zeros(T)
    P_sum = np.zeros((T, n, n))
    E_sum = np.zeros((T, n, n))
    rates = np.zeros(scenario.runs)
    steady = np.zeros(scenario.runs)
    terminal = np.zeros((scenario.runs, n, n))
    p_trace_max = 0.0
    drop_hist = Counter()
    arrival_hist = Counter()
    for r in range(scenario.runs):
        rec = simulate(scenario, r, record_full=True)
        gamma_sum += rec.gamma
        P_sum += rec.P_prior_full
        E_sum += rec.err_outer
        rates[r] = rec.empirical_rate
        steady[r] = rec.mean_P_trace
        terminal[r] = rec.P_prior_full[-1]
        p_trace_max = max(p_trace_max, rec.P_trace_max)
        drop_hist.update(_maximal_runs(rec.gamma, 0))
        arrival_hist.update(_maximal_runs(rec.gamma, 1))
    N = scenario.runs
    P_mean = P_sum / N
    E_mean = E_sum / N
    P_trace_mean = np.trace(P_mean, axis1=1, axis2=2)
    mse_mean = np.trace(E_mean, axis1=1, axis2=2)
    return MonteCarloStats(
        steps=np.arange(T),
        rate_mean=gamma_sum / N,
        P_mean=P_mean,
        err_outer_mean=E_mean,
        P_trace_mean=P_trace_mean,
        mse_mean=mse_mean,
        consistency_ratio=mse_mean / P_trace_mean,
        rate_overall=float(rates.mean()),
        rate_stderr=float(_stderr(rates)),
        terminal_P_mean=sym(terminal.mean(axis=0)),
        terminal_P_stderr=np.asarray(_stderr(terminal)),
        steady_trace_mean=float(steady.mean()),
        steady_trace_stderr=float(_stderr(steady)),
        P_trace_max=p_trace_max,
        drop_run_hist=dict(sorted(drop_hist.items())),
        arrival_run_hist=dict(sorted(arrival_hist.items())),
        runs=N,
    )


@dataclass(frozen=True, eq=False)
class RunLengthStats:
    """Sliding-window counts of consecutive drops and arrivals of length l."""

    l: int
    n_windows: int
    drop_windows: int
    arrival_windows: int

    @property
    def drop_frequency(self):
        return self.drop_windows / self.n_windows if self.n_windows else 0.0

    @property
    def arrival_frequency(self):
        return self.arrival_windows / self.n_windows if self.n_windows else 0.0


def run_length_stats(record, l):
    """Count windows of l consecutive drops / arrivals in a trajectory."""
    if l < 1:
        raise ValueError("l must be a positive integer")
    g = np.asarray(record.gamma)
    if g.size == 0:
        raise ValueError("record is empty")
    if l > g.size:
        return RunLengthStats(l=l, n_windows=0, drop_windows=0, arrival_windows=0)
    windows = np.lib.stride_tricks.sliding_window_view(g, l)
    sums = windows.sum(axis=1)
    return RunLengthStats(
        l=l,
        n_windows=int(sums.shape[0]),
        drop_windows=int((sums == 0).sum()),
        arrival_windows=int((sums == l).sum()),
    )


def _bisect_rate(fn, target, lo=1e-12, hi_start=1.0, cap=1e15, rel_tol=1e-12):
    """Find theta with fn(theta) = target for an increasing rate function."""
    hi = hi_start
    while fn(hi) < target:
        hi *= 2.0
        if hi > cap:
            raise CalibrationFailed(f"target rate {target} unreachable")
    while fn(lo) > target:
        lo /= 2.0
        if lo < 1e-300:
            raise CalibrationFailed(f"target rate {target} unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
        if (hi - lo) <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)


def calibrate_open_loop(steady_stats, target_rate, basis=None):
    """Trigger weight theta * basis whose open-loop rate equals the target.

    Closed form for scalar measurements, bisection otherwise.
    """
    if not 0.0 < target_rate < 1.0:
        raise CalibrationFailed("target rate must lie in (0, 1)")
    m = steady_stats.Pi.shape[0]
    B = np.eye(m) if basis is None else np.asarray(basis, dtype=float)
    if m == 1:
        pi_b = float(steady_stats.Pi[0, 0] * B[0, 0])
        return ((1.0 / (1.0 - target_rate)) ** 2 - 1.0) / pi_b
    return _bisect_rate(lambda t: open_loop_rate(steady_stats, t * B), target_rate)


def calibrate_closed_loop(model, target_rate, basis=None):
    """Trigger weight theta * basis whose closed-loop upper rate bound equals
    the target (the bound is what the design machinery also uses)."""
    if not 0.0 < target_rate < 1.0:
        raise CalibrationFailed("target rate must lie in (0, 1)")
    B = np.eye(model.m) if basis is None else np.asarray(basis, dtype=float)

    def upper_rate(theta):
        return closed_loop_rate_bounds(model, theta * B).gamma_upper

    return _bisect_rate(upper_rate, target_rate)


def calibrate_period(target_rate, tol=0.025):
    if not 0.0 < target_rate < 1.0:
        raise CalibrationFailed("target rate must lie in (0, 1)")
    period = max(1, round(1.0 / target_rate))
    if abs(1.0 / period - target_rate) > tol:
        raise CalibrationFailed(
            f"no integer period reaches rate {target_rate} within {tol}"
        )
    return period


@dataclass(frozen=True, eq=False)
class ComparisonRow:
    scheduler: str
    param: float
    empirical_rate: float
    steady_trace: float
    steady_trace_stderr: float


def compare_schedulers(model, target_rate, horizon, runs, seed, burn_in=200, period_tol=0.025):
    """Calibrate the four schedulers to one rate and compare steady E[P-].

    Rows are ordered clset, olset, periodic, random.  All schedulers share
    the same master seed, hence identical plant noise per run index.
    """
    st = steady_state(model)
    theta_y = calibrate_open_loop(st, target_rate)
    theta_z = calibrate_closed_loop(model, target_rate)
    period = calibrate_period(target_rate, tol=period_tol)
    m = model.m
    setups = [
        ("clset", theta_z, TriggerPolicy.closed_loop(theta_z * np.eye(m)), "clset"),
        ("olset", theta_y, TriggerPolicy.open_loop(theta_y * np.eye(m)), "olset"),
        ("periodic", float(period), TriggerPolicy.periodic(period), "offline-baseline"),
        ("random", target_rate, TriggerPolicy.random_offline(target_rate), "offline-baseline"),
    ]
    rows = []
    for name, param, trig, filt in setups:
        scn = Scenario(
            model=model,
            trigger=trig,
            filter=filt,
            horizon=horizon,
            runs=runs,
            seed=seed,
            burn_in=burn_in,
        )
        stats = monte_carlo(scn)
        rows.append(
            ComparisonRow(
                scheduler=name,
                param=float(param),
                empirical_rate=stats.rate_overall,
                steady_trace=stats.steady_trace_mean,
                steady_trace_stderr=stats.steady_trace_stderr,
            )
        )
    return rows


def singer_scenario(
    T,
    alpha,
    sigma_m2,
    z_scale=None,
    delta=None,
    a13="paper",
    runs=10_000,
    horizon=100,
    seed=0,
    burn_in=20,
):
    """Third-order kinematic target-tracking scenario (position, velocity,
    acceleration) with maneuver time constant 1/alpha and acceleration
    variance sigma_m2, full-state observation and unit measurement noise.

    The (1, 3) transition entry is T**2 by default ("paper"); pass
    a13="half" for the T**2/2 variant.  Exactly one of ``z_scale``
    (closed-loop trigger weight scale) or ``delta`` (deterministic
    threshold for the offline baseline) must be given.
    """
    if T <= 0 or alpha <= 0 or sigma_m2 <= 0:
        raise ConfigError("T, alpha and sigma_m2 must be positive")
    if (z_scale is None) == (delta is None):
        raise ConfigError("specify exactly one of z_scale or delta")
    if a13 not in ("paper", "half"):
        raise ConfigError("a13 must be 'paper' or 'half'")
    a13_val = T * T if a13 == "paper" else 0.5 * T * T
    A = np.array([[1.0, T, a13_val], [0.0, 1.0, T], [0.0, 0.0, 1.0]])
    Q = 2.0 * alpha * sigma_m2 * np.array(
        [
            [T**5 / 20.0, T**4 / 8.0, T**3 / 6.0],
            [T**4 / 8.0, T**3 / 3.0, T**2 / 2.0],
            [T**3 / 6.0, T**2 / 2.0, T],
        ]
    )
    model = validate_model(A, np.eye(3), Q, np.eye(3), np.eye(3))
    if z_scale is not None:
        trigger = TriggerPolicy.closed_loop(float(z_scale) * np.eye(3))
        filt = "clset"
    else:
        trigger = TriggerPolicy.deterministic_threshold(float(delta))
        filt = "offline-baseline"
    return Scenario(
        model=model,
        trigger=trigger,
        filter=filt,
        horizon=horizon,
        runs=runs,
        seed=seed,
        burn_in=burn_in,
    )


def _fmt(x):
    return f"{x:.12g}"


def write_trajectory_csv(record, fh):
    fh.write("k,gamma,P_trace,mse,P11,mse11\n")
    for k in range(record.gamma.shape[0]):
        fh.write(
            f"{k},{int(record.gamma[k])},{_fmt(record.P_trace[k])},"
            f"{_fmt(record.sq_err[k])},{_fmt(record.P11[k])},{_fmt(record.sq_err11[k])}\n"
        )


def write_monte_carlo_csv(stats, fh):
    fh.write("k,rate_mean,P_trace_mean,mse_mean,P11_mean,mse11_mean\n")
    for k in range(stats.steps.shape[0]):
        fh.write(
            f"{k},{_fmt(stats.rate_mean[k])},{_fmt(stats.P_trace_mean[k])},"
            f"{_fmt(stats.mse_mean[k])},{_fmt(stats.P_mean[k, 0, 0])},"
            f"{_fmt(stats.err_outer_mean[k, 0, 0])}\n"
        )


def write_comparison_csv(rows, fh):
    fh.write("scheduler,param,empirical_rate,steady_trace\n")
    for row in rows:
        fh.write(
            f"{row.scheduler},{_fmt(row.param)},{_fmt(row.empirical_rate)},"
            f"{_fmt(row.steady_trace)}\n"
        )


def write_report_csv(rows, fh):
    fh.write("quantity,value\n")
    for name, value in rows:
        fh.write(f"{name},{_fmt(value)}\n")
