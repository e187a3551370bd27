"""Seeded synthetic market.

Hidden orders arrive at random, are sized by a discrete power law, and fire
pieces at their own pace; one transaction is emitted per transaction-time
step. Returns follow r = eps*f(v) - lambda + noise under a pluggable
liquidity rule, so the same flow can be priced naively, by the
autoregressive predictor, or against the active-order book.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, fields, replace

import numpy as np

from . import estimators, liquidity
from .errors import (
    BracketFailure,
    ConfigInvalid,
    DomainError,
    RuleStateError,
    RunTooShort,
)
from .hidden_orders import HiddenOrderSet, build_order_set
from .impact import ImpactFunction
from .orderflow import ReturnSeries, TransactionSeries, derive_returns

_BIG = 2**62


@dataclass(frozen=True)
class _Dist:
    """A one-dimensional sampling spec parsed from name:params text."""

    name: str
    params: tuple

    def sample(self, rng: np.random.Generator) -> float:
        a = self.params
        if self.name == "fixed":
            return a[0]
        if self.name == "uniform":
            return float(rng.uniform(a[0], a[1]))
        if self.name == "loguniform":
            return float(np.exp(rng.uniform(np.log(a[0]), np.log(a[1]))))
        return float(rng.lognormal(a[0], a[1]))

    @property
    def support_min(self) -> float:
        if self.name == "lognormal":
            return 0.0
        return min(self.params) if self.name != "fixed" else self.params[0]

    @property
    def strictly_positive(self) -> bool:
        if self.name == "lognormal":
            return True
        return self.support_min > 0


_DIST_ARITY = {"fixed": 1, "uniform": 2, "loguniform": 2, "lognormal": 2}


def parse_dist(spec: str) -> _Dist:
    """Parse 'fixed:x', 'uniform:a:b', 'loguniform:a:b', or 'lognormal:mu:sigma'."""
    parts = str(spec).split(":")
    name = parts[0]
    if name not in _DIST_ARITY:
        raise ConfigInvalid(f"unknown distribution {name!r} in {spec!r}")
    try:
        params = tuple(float(p) for p in parts[1:])
    except ValueError:
        raise ConfigInvalid(f"non-numeric parameter in {spec!r}") from None
    if len(params) != _DIST_ARITY[name]:
        raise ConfigInvalid(f"{name} takes {_DIST_ARITY[name]} parameters, got {spec!r}")
    if name in ("uniform", "loguniform") and params[0] >= params[1]:
        raise ConfigInvalid(f"empty range in {spec!r}")
    if name == "lognormal" and params[1] <= 0:
        raise ConfigInvalid(f"lognormal sigma must be positive in {spec!r}")
    return _Dist(name, params)


@dataclass(frozen=True)
class LiquidityRule:
    """Parsed liquidity rule: none, E1:phi[:K], or E2[:mode[:timeout]]."""

    name: str
    phi: float | None = None
    k_max: int = 1000
    mode: str = "hindsight"
    timeout: int = 100


def parse_rule(spec: str) -> LiquidityRule:
    parts = str(spec).split(":")
    name = parts[0]
    if name == "none":
        if len(parts) > 1:
            raise ConfigInvalid(f"rule none takes no parameters, got {spec!r}")
        return LiquidityRule(name="none")
    if name == "E1":
        if len(parts) < 2:
            raise ConfigInvalid("rule E1 needs phi, e.g. E1:0.2 or E1:0.2:1000")
        try:
            phi = float(parts[1])
            k_max = int(parts[2]) if len(parts) > 2 else 1000
        except ValueError:
            raise ConfigInvalid(f"bad E1 parameters in {spec!r}") from None
        if not 0 < phi < 0.5 or k_max < 1 or len(parts) > 3:
            raise ConfigInvalid(f"bad E1 parameters in {spec!r}")
        return LiquidityRule(name="E1", phi=phi, k_max=k_max)
    if name == "E2":
        mode = parts[1] if len(parts) > 1 else "hindsight"
        if mode not in ("hindsight", "causal"):
            raise ConfigInvalid(f"E2 mode must be hindsight or causal, got {spec!r}")
        try:
            timeout = int(parts[2]) if len(parts) > 2 else 100
        except ValueError:
            raise ConfigInvalid(f"bad E2 timeout in {spec!r}") from None
        if timeout < 1 or len(parts) > 3:
            raise ConfigInvalid(f"bad E2 parameters in {spec!r}")
        return LiquidityRule(name="E2", mode=mode, timeout=timeout)
    raise ConfigInvalid(f"unknown liquidity rule {name!r}")


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a run; the seed fixes the output bytes."""

    alpha: float = 1.6
    order_start_prob: float = 0.5
    theta_dist: str = "loguniform:1:50"
    piece_volume_dist: str = "lognormal:0:1"
    impact: ImpactFunction = ImpactFunction(1e-4, 0.12)
    noise_sigma: float = 0.0
    liquidity_rule: str = "E2:hindsight:100"
    steps: int = 100000
    seed: int = 0


def validate(config: SimConfig) -> None:
    """Raise ConfigInvalid listing every problem at once."""
    problems = []
    if not config.alpha > 1:
        problems.append(f"alpha must exceed 1, got {config.alpha}")
    if not 0 < config.order_start_prob < 1:
        problems.append(f"order_start_prob must be in (0,1), got {config.order_start_prob}")
    for key, need_min in (("theta_dist", 1.0), ("piece_volume_dist", None)):
        try:
            d = parse_dist(getattr(config, key))
        except ConfigInvalid as exc:
            problems.append(str(exc))
            continue
        if need_min is not None and d.support_min < need_min:
            problems.append(f"{key} support must stay >= {need_min}, got {getattr(config, key)!r}")
        if need_min is None and not d.strictly_positive:
            problems.append(f"{key} must be strictly positive, got {getattr(config, key)!r}")
    if config.noise_sigma < 0:
        problems.append(f"noise_sigma must be >= 0, got {config.noise_sigma}")
    try:
        parse_rule(config.liquidity_rule)
    except ConfigInvalid as exc:
        problems.append(str(exc))
    if config.steps < 1:
        problems.append(f"steps must be >= 1, got {config.steps}")
    if problems:
        raise ConfigInvalid("; ".join(problems))


def config_as_dict(config: SimConfig) -> dict:
    """Flat JSON-ready view; the impact function collapses to 'f1:f2'."""
    out = {}
    for f in fields(config):
        v = getattr(config, f.name)
        out[f.name] = f"{v.f1!r}:{v.f2!r}" if isinstance(v, ImpactFunction) else v
    return out


def load_sim_config(source) -> SimConfig:
    """Read a flat key = value config file; unknown keys are errors.

    Lines starting with # and blank lines are skipped. Keys match SimConfig
    field names. The impact value is 'f1:f2'.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r") as fh:
            text = fh.read()
    known = {f.name: f.type for f in fields(SimConfig)}
    kwargs = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {ln}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigInvalid(f"line {ln}: unknown key {key!r}")
        if key in kwargs:
            raise ConfigInvalid(f"line {ln}: duplicate key {key!r}")
        try:
            if key in ("alpha", "order_start_prob", "noise_sigma"):
                kwargs[key] = float(value)
            elif key in ("steps", "seed"):
                kwargs[key] = int(value)
            elif key == "impact":
                f1, _, f2 = value.partition(":")
                kwargs[key] = ImpactFunction(float(f1), float(f2))
            else:
                kwargs[key] = value
        except (ValueError, DomainError) as exc:
            raise ConfigInvalid(f"line {ln}: bad value for {key!r}: {exc}") from None
    config = SimConfig(**kwargs)
    validate(config)
    return config


@dataclass(frozen=True)
class OrderFlow:
    """Generated flow plus its ground truth.

    intended_sizes and completed align with orders.orders; an order still
    running when the run ends has emitted fewer pieces than intended.
    """

    signs: np.ndarray
    volumes: np.ndarray
    ticks: np.ndarray
    orders: HiddenOrderSet
    intended_sizes: np.ndarray
    completed: np.ndarray


@dataclass(frozen=True)
class SimOutput:
    """A finished run: the series, its returns, ground truth, and the trace."""

    series: TransactionSeries
    returns: ReturnSeries
    orders: HiddenOrderSet
    lambda_trace: np.ndarray
    flow: OrderFlow
    config: SimConfig


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    flow_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return (
        np.random.Generator(np.random.PCG64(flow_ss)),
        np.random.Generator(np.random.PCG64(noise_ss)),
    )


def generate_order_flow(config: SimConfig) -> OrderFlow:
    """Run the arrival/firing process until `steps` transactions are emitted.

    Arrivals come one per tick at most. Idle orders fire with probability
    1/theta per tick (drawn as geometric gaps); firings wait in a pending
    pool and each tick with a nonempty pool emits exactly one transaction,
    chosen uniformly. Ticks where nothing can trade are skipped, so
    transaction indices are the only clock the output exposes.
    """
    validate(config)
    rng, _ = _streams(config.seed)
    p = config.order_start_prob
    theta_dist = parse_dist(config.theta_dist)
    vol_dist = parse_dist(config.piece_volume_dist)

    o_sign: list[int] = []
    o_theta: list[float] = []
    o_vol: list[float] = []
    o_intended: list[int] = []
    o_left: list[int] = []
    o_pieces: list[list[int]] = []

    heap: list[tuple[int, int]] = []
    pending: list[int] = []
    next_arrival = int(rng.geometric(p)) - 1

    steps = config.steps
    signs = np.empty(steps, dtype=np.int64)
    vols = np.empty(steps, dtype=np.float64)
    ticks = np.empty(steps, dtype=np.int64)

    emitted = 0
    t = 0
    while emitted < steps:
        if not pending:
            t = min(heap[0][0] if heap else _BIG, next_arrival)
        if t == next_arrival:
            seq = len(o_sign)
            o_sign.append(int(rng.integers(0, 2)) * 2 - 1)
            o_intended.append(int(rng.zipf(1.0 + config.alpha)))
            theta = theta_dist.sample(rng)
            o_theta.append(theta)
            o_vol.append(vol_dist.sample(rng))
            o_left.append(o_intended[-1])
            o_pieces.append([])
            heapq.heappush(heap, (t + int(rng.geometric(1.0 / theta)) - 1, seq))
            next_arrival = t + int(rng.geometric(p))
        while heap and heap[0][0] <= t:
            pending.append(heapq.heappop(heap)[1])
        if pending:
            if len(pending) == 1:
                seq = pending.pop()
            else:
                ix = int(rng.integers(len(pending)))
                last = pending.pop()
                if ix < len(pending):
                    seq, pending[ix] = pending[ix], last
                else:
                    seq = last
            signs[emitted] = o_sign[seq]
            vols[emitted] = o_vol[seq]
            ticks[emitted] = t
            o_pieces[seq].append(emitted)
            o_left[seq] -= 1
            if o_left[seq] > 0:
                heapq.heappush(heap, (t + int(rng.geometric(1.0 / o_theta[seq])), seq))
            emitted += 1
        t += 1

    live = [j for j in range(len(o_pieces)) if o_pieces[j]]
    orders = build_order_set(
        [o_pieces[j] for j in live],
        [o_sign[j] for j in live],
        [o_vol[j] for j in live],
        steps,
    )
    # build_order_set renumbers by start time; realign the per-order extras
    seq_at_start = {o_pieces[j][0]: j for j in live}
    intended = np.array(
        [o_intended[seq_at_start[o.start]] for o in orders.orders], dtype=np.int64
    )
    completed = np.array(
        [o_left[seq_at_start[o.start]] == 0 for o in orders.orders], dtype=bool
    )
    return OrderFlow(
        signs=signs,
        volumes=vols,
        ticks=ticks,
        orders=orders,
        intended_sizes=intended,
        completed=completed,
    )


def simulate_returns(flow: OrderFlow, config: SimConfig) -> SimOutput:
    """Price the flow: r = eps*f(v) - lambda + eta under the configured rule.

    The liquidity term lands in the initial impact l and the noise in the
    quote revision q, so the emitted series round-trips through
    derive_returns. Lambda at index i conditions on information through i-1.
    """
    validate(config)
    n = flow.signs.size
    if flow.orders.n_transactions != n:
        raise RuleStateError("order set does not cover the flow")
    rule = parse_rule(config.liquidity_rule)
    f_vals = config.impact(flow.volumes)
    eps_f = flow.signs * f_vals
    if rule.name == "none":
        lam = np.zeros(n)
    elif rule.name == "E1":
        coeffs = liquidity.ar_coefficients(rule.phi, rule.k_max, normalize=True)
        lam, _ = liquidity.e1_traces(flow.signs, f_vals, coeffs)
    else:
        lam, _ = liquidity.e2_traces(
            flow.orders, config.alpha, fn=config.impact, mode=rule.mode, timeout=rule.timeout
        )

    _, noise_rng = _streams(config.seed)
    eta = config.noise_sigma * noise_rng.standard_normal(n)
    l = eps_f - lam
    pre = np.concatenate(([0.0], np.cumsum(l + eta)))[:n]
    post = pre + l
    series = TransactionSeries(
        brokers=[str(int(j)) for j in flow.orders.order_of],
        signs=flow.signs,
        volumes=flow.volumes,
        log_mid_pre=pre,
        log_mid_post=post,
    )
    return SimOutput(
        series=series,
        returns=derive_returns(series),
        orders=flow.orders,
        lambda_trace=lam,
        flow=flow,
        config=config,
    )


def simulate(config: SimConfig) -> SimOutput:
    return simulate_returns(generate_order_flow(config), config)


def calibrate_noise(target: float, probe: SimConfig) -> float:
    """Noise level whose lag-1 volatility clustering matches the target.

    One probe run is priced at sigma = 0; because the noise stream is fixed
    by the seed and enters additively, every candidate sigma is evaluated on
    the same run without re-simulating. Bisection stops within 0.01 of the
    target or after 40 halvings.
    """
    if not 0 < target < 0.5:
        raise DomainError(f"target must be in (0, 0.5), got {target}")
    base = simulate(replace(probe, noise_sigma=0.0))
    r0 = base.returns.r
    _, noise_rng = _streams(probe.seed)
    z = noise_rng.standard_normal(base.series.signs.size)[: r0.size]

    def acf1(sigma: float) -> float:
        return float(estimators.acf(np.abs(r0 + sigma * z), 1).values[1])

    a0 = acf1(0.0)
    if a0 < target - 0.01:
        raise BracketFailure(
            f"noise only weakens clustering: sigma=0 gives {a0:.4f} < target {target}"
        )
    if abs(a0 - target) <= 0.01:
        return 0.0
    hi = max(float(np.std(r0)), 1e-12)
    for _ in range(60):
        if acf1(hi) < target:
            break
        hi *= 2.0
    else:
        raise BracketFailure("no sigma large enough to reach the target")
    lo = 0.0
    sigma = hi
    for _ in range(40):
        sigma = 0.5 * (lo + hi)
        v = acf1(sigma)
        if abs(v - target) <= 0.01:
            return sigma
        if v > target:
            lo = sigma
        else:
            hi = sigma
    return sigma


@dataclass(frozen=True)
class StylizedFactsReport:
    """Headline checks: sign-free returns, heavy order tails, slow |r| decay."""

    n_transactions: int
    n_orders: int
    return_acf_max_abs: float
    white_noise_band: float
    band_ratio: float
    within_3x_band: bool
    hidden_order_return_xi: float
    abs_return_acf_exponent: float

    def as_dict(self) -> dict:
        return {
            "n_transactions": self.n_transactions,
            "n_orders": self.n_orders,
            "return_acf_max_abs": self.return_acf_max_abs,
            "white_noise_band": self.white_noise_band,
            "band_ratio": self.band_ratio,
            "within_3x_band": self.within_3x_band,
            "hidden_order_return_xi": self.hidden_order_return_xi,
            "abs_return_acf_exponent": self.abs_return_acf_exponent,
        }


def stylized_facts_report(
    series: TransactionSeries,
    returns: ReturnSeries,
    orders: HiddenOrderSet,
    acf_band_lags: tuple[int, int] = (20, 200),
    decay_lags: tuple[int, int] = (10, 1000),
) -> StylizedFactsReport:
    """Measure the three stylized facts on a finished run.

    (a) the largest return autocorrelation past the impact horizon against
    the white-noise band, (b) the tail exponent of hidden-order returns, and
    (c) the power-law decay rate of absolute-return autocorrelation.
    """
    n = len(series)
    if n < 10**5:
        raise RunTooShort(f"need at least 1e5 transactions, got {n}")
    r = returns.r
    lo, hi = acf_band_lags
    est = estimators.acf(r, hi)
    band = estimators.white_noise_band(r.size)
    max_abs = float(np.max(np.abs(est.values[lo : hi + 1])))

    starts = np.array([o.start for o in orders.orders], dtype=np.int64)
    ends = np.array([o.end for o in orders.orders], dtype=np.int64)
    big_r = np.abs(series.log_mid_post[ends] - series.log_mid_pre[starts])
    xi = estimators.hill_tail(big_r[big_r > 0]).xi

    dfit = estimators.fit_power_law_decay(
        estimators.acf(np.abs(r), decay_lags[1]), decay_lags[0], decay_lags[1]
    )
    return StylizedFactsReport(
        n_transactions=n,
        n_orders=len(orders.orders),
        return_acf_max_abs=max_abs,
        white_noise_band=band,
        band_ratio=max_abs / band,
        within_3x_band=bool(max_abs <= 3.0 * band),
        hidden_order_return_xi=float(xi),
        abs_return_acf_exponent=float(dfit.exponent),
    )
