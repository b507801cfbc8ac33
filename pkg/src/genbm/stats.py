"""Estimators and hypothesis tests connecting walk ensembles to the oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine as eng
from .coeffs import WalkParamsLine, WalkParamsTwoHalf
from .domain import DomainFunction
from .errors import InvalidWindowError, NoDataError, UnsupportedQueryError
from .states import LINE
from .walk import ENDPOINTS_ONLY, FULL_PATH, Ensemble, holding_periods


@dataclass(frozen=True)
class EstimateWithError:
    """Sample mean with standard error and the implied normal 95% interval."""

    value: float
    std_error: float
    n_samples: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - 1.96 * self.std_error, self.value + 1.96 * self.std_error)


def mean_estimate(samples: np.ndarray, **meta) -> EstimateWithError:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise NoDataError("no samples")
    se = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return EstimateWithError(float(samples.mean()), se, int(samples.size), dict(meta))


def _eval_states(f: DomainFunction, x: np.ndarray, side: np.ndarray,
                 alive: np.ndarray) -> np.ndarray:
    """f at endpoint states: killed paths contribute f(cemetery) = 0."""
    out = np.zeros(len(x))
    for s in (+1, -1):
        m = alive & (side == s)
        if m.any():
            out[m] = f.eval_side(x[m], s)
    return out


def empirical_semigroup(ensemble: Ensemble, f: DomainFunction, t: float) -> EstimateWithError:
    """Mean of f(X(t)) over non-truncated paths; killed paths count as zero.

    With endpoint records t must be the ensemble horizon; full records
    support any t in [0, horizon].
    """
    flags = ensemble.flags()
    keep = flags != eng.TRUNCATED
    if not keep.any():
        raise NoDataError("all paths truncated")
    if abs(t - ensemble.horizon) < 1e-12:
        x, side, alive = ensemble.final_positions()
        vals = _eval_states(f, x[keep], side[keep], alive[keep])
    else:
        if ensemble.config.record_mode != FULL_PATH:
            raise UnsupportedQueryError(
                "interior-time queries need full_path records (or t = horizon)"
            )
        vals = np.array([
            f(rec.state_at(t).to_point(ensemble.n))
            for rec, k in zip(ensemble, keep) if k
        ])
    return mean_estimate(vals, truncated_fraction=ensemble.truncated_fraction(), t=t)


def survival_probability(ensemble: Ensemble, t: float) -> EstimateWithError:
    """Fraction of paths not yet absorbed at the cemetery by time t."""
    c = ensemble.columns
    flags = c["flag"]
    known = (flags != eng.TRUNCATED) | (c["trunc_t"] >= t)
    if not known.any():
        raise NoDataError("no path determines survival at this time")
    killed_by_t = (flags == eng.KILLED) & (c["kill_t"] <= t)
    alive = 1.0 - killed_by_t[known].astype(float)
    m = int(known.sum())
    p = float(alive.mean())
    se = math.sqrt(max(p * (1.0 - p), 0.0) / m)
    return EstimateWithError(p, se, m, {"t": t, "excluded": int((~known).sum())})


def gaussian_survival_target(u: float, t: float) -> float:
    """P(standard BM from u avoids 0 up to t), by the reflection principle."""
    return math.erf(abs(u) / math.sqrt(2.0 * t))


@dataclass(frozen=True)
class ExitStatistics:
    p_right: EstimateWithError
    mean_exit_time: EstimateWithError
    timeouts: int


def exit_statistics(p, n: int, x_start: float, h1: float, h2: float, m: int,
                    seed: int, t_max: float | None = None) -> ExitStatistics:
    """Empirical exit law of the free walk from the window (x - h1, x + h2).

    The window must exclude the origin and be grid aligned; the boundary
    rates in ``p`` are never exercised and are accepted only for interface
    symmetry with the other estimators.
    """
    if h1 <= 0 or h2 <= 0:
        raise InvalidWindowError("window widths must be positive")
    for name, v in (("h1", h1), ("h2", h2), ("x_start", x_start)):
        if abs(v * n - round(v * n)) > 1e-9 * max(1.0, abs(v * n)):
            raise InvalidWindowError(f"{name} must be grid aligned at scale n={n}")
    k0 = round(x_start * n)
    klo = k0 - round(h1 * n)
    khi = k0 + round(h2 * n)
    if klo <= 0 <= khi:
        raise InvalidWindowError("window touches the origin")
    if t_max is None:
        t_max = 20.0 * (h1 + h2) ** 2 + 100.0 * h1 * h2
    out_time = np.empty(m, dtype=np.float64)
    out_high = np.empty(m, dtype=np.int64)
    out_flag = np.empty(m, dtype=np.int64)
    eng._exit_batch(np.uint64(seed), m, float(n) * float(n),
                    k0 - klo, khi - klo, t_max, out_time, out_high, out_flag)
    exited = out_flag == eng.KILLED
    if not exited.any():
        raise NoDataError("no exits observed; window too wide for t_max")
    pr = mean_estimate(out_high[exited].astype(float))
    mt = mean_estimate(out_time[exited])
    return ExitStatistics(pr, mt, int((~exited).sum()))


def exit_targets(h1: float, h2: float) -> tuple[float, float]:
    """Exact exit-right probability h1/(h1+h2) and mean exit time h1*h2."""
    return h1 / (h1 + h2), h1 * h2


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov test for exponential holding times.
# ---------------------------------------------------------------------------


def kolmogorov_pvalue(z: float, terms: int = 100) -> float:
    """Asymptotic Kolmogorov tail Q(z) = 2 sum (-1)^(k-1) exp(-2 k^2 z^2)."""
    if z <= 0:
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * z * z)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, total))


def ks_exponential(samples: np.ndarray, rate: float) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value against Exp(rate)."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    if m == 0:
        raise NoDataError("no samples for the KS test")
    cdf = 1.0 - np.exp(-rate * x)
    up = np.arange(1, m + 1) / m - cdf
    down = cdf - np.arange(0, m) / m
    d = float(max(up.max(), down.max()))
    return d, kolmogorov_pvalue(math.sqrt(m) * d)


def boundary_exit_rate(p, n: int, at: str) -> float:
    """Total exit rate of an origin state, e.g. A+ + n*B+ + C+ at 0+."""
    if isinstance(p, WalkParamsLine):
        if at != "0":
            raise UnsupportedQueryError("line walks hold only at '0'")
        return p.A + n * (p.B_plus + p.B_minus)
    if not isinstance(p, WalkParamsTwoHalf):
        raise UnsupportedQueryError(f"unsupported params {type(p)!r}")
    if at == "0+":
        return p.A_plus + n * p.B_plus + p.C_plus
    if at == "0-":
        return p.A_minus + n * p.B_minus + p.C_minus
    raise UnsupportedQueryError("at must be '0+', '0-' or '0'")


def holding_time_ks(ensemble: Ensemble, at: str, p, n: int,
                    min_obs: int = 100) -> dict:
    """KS test of completed origin holding times against the exponential law."""
    if ensemble.config.record_mode == ENDPOINTS_ONLY:
        raise UnsupportedQueryError("holding times need boundary or full records")
    side = +1 if at in ("0+", "0") else -1
    holds: list[float] = []
    for rec in ensemble:
        holds.extend(holding_periods(rec, side))
    if len(holds) < min_obs:
        raise NoDataError(f"only {len(holds)} holding observations (< {min_obs})")
    rate = boundary_exit_rate(p, n, at)
    d, pv = ks_exponential(np.array(holds), rate)
    return {"ks_stat": d, "p_value": pv, "n_obs": len(holds), "rate": rate}


# ---------------------------------------------------------------------------
# Occupation and switching.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OccupationReport:
    frac_neg: EstimateWithError
    frac_pos: EstimateWithError
    frac_origin: EstimateWithError
    switches_pm: EstimateWithError
    switches_mp: EstimateWithError


def occupation_and_switch(ensemble: Ensemble, t: float) -> OccupationReport:
    """Side occupation fractions over [0, t] and mean directed switch counts.

    Origin states count toward their side; time past absorption counts to
    neither side, so the fractions add up to the live fraction of [0, t].
    Occupation at interior times needs full records; at t = horizon the
    batch summaries suffice.
    """
    if abs(t - ensemble.horizon) < 1e-12:
        c = ensemble.columns
        pos = (c["tip"] + c["t0p"]) / t
        neg = (c["tin"] + c["t0m"]) / t
        orig = (c["t0p"] + c["t0m"]) / t
        swpm = c["swpm"].astype(float)
        swmp = c["swmp"].astype(float)
    else:
        if ensemble.config.record_mode != FULL_PATH:
            raise UnsupportedQueryError(
                "occupation at interior times needs full_path records"
            )
        pos, neg, orig, swpm, swmp = _occupation_from_records(ensemble, t)
    return OccupationReport(
        frac_neg=mean_estimate(neg),
        frac_pos=mean_estimate(pos),
        frac_origin=mean_estimate(orig),
        switches_pm=mean_estimate(swpm),
        switches_mp=mean_estimate(swmp),
    )


def _occupation_from_records(ensemble: Ensemble, t: float):
    from .states import state_from_code

    m = len(ensemble)
    pos = np.zeros(m)
    neg = np.zeros(m)
    orig = np.zeros(m)
    swpm = np.zeros(m)
    swmp = np.zeros(m)
    for i, rec in enumerate(ensemble):
        prev = None
        tprev = 0.0
        for tt, code in zip(rec.times, rec.codes):
            tt = float(tt)
            st = state_from_code(int(code), rec.topology)
            if tt >= t:
                if prev is not None:
                    _add_occ(prev, t - tprev, i, pos, neg, orig)
                prev = None
                break
            if prev is not None:
                _add_occ(prev, tt - tprev, i, pos, neg, orig)
                if prev.is_origin and st.is_origin and rec.topology != LINE:
                    if prev.side > 0 and st.side < 0:
                        swpm[i] += 1
                    elif prev.side < 0 and st.side > 0:
                        swmp[i] += 1
            prev, tprev = st, tt
        if prev is not None:
            _add_occ(prev, t - tprev, i, pos, neg, orig)
    return pos / t, neg / t, orig / t, swpm, swmp


def _add_occ(st, dt, i, pos, neg, orig):
    if st.cemetery or dt <= 0:
        return
    if st.is_origin:
        orig[i] += dt
        if st.topology == LINE or st.side > 0:
            pos[i] += dt
        else:
            neg[i] += dt
    elif st.site > 0:
        pos[i] += dt
    else:
        neg[i] += dt


# ---------------------------------------------------------------------------
# Lattice-bias fitting for oracle comparisons.
# ---------------------------------------------------------------------------


def fit_inverse_n_bias(ns, discrepancies, std_errors, z: float = 3.0) -> dict:
    """Fit the excess |MC - oracle| - z*SE to a c/n bias model.

    Returns the conservative constant c_max = max_n n * excess (so the bound
    3*SE + c_max/n holds at every n by construction) and the least-squares
    fit c_ls; c_max is what acceptance thresholds should use.
    """
    ns = np.asarray(ns, dtype=float)
    d = np.asarray(discrepancies, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    excess = np.maximum(d - z * se, 0.0)
    c_max = float(np.max(ns * excess))
    w = 1.0 / ns
    c_ls = float((w @ excess) / (w @ w)) if np.any(excess > 0) else 0.0
    return {"c_max": c_max, "c_ls": c_ls, "excess": excess.tolist()}
