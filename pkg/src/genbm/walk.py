"""Event-driven simulation of the boundary random walks.

States live on the lattice of spacing 1/n: interior sites jump to each
neighbour at rate n^2/2; the origin site(s) carry the boundary rates (kill
A, escape n*B, switch C).  Paths are reproducible: path i of a batch uses
the stream keyed by (master seed, i), so results do not depend on
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _engine as eng
from .coeffs import WalkParamsLine, WalkParamsTwoHalf
from .errors import EventCapError, InvalidFunctionError, UnsupportedQueryError
from .states import (
    LINE,
    TWO_HALF,
    LatticeState,
    half_site,
    lattice_cemetery,
    line_site,
    state_from_code,
)

FLAG_NAMES = {eng.ALIVE: "alive", eng.KILLED: "killed", eng.TRUNCATED: "truncated"}

FULL_PATH = "full_path"
ENDPOINTS_ONLY = "endpoints_only"
BOUNDARY_EVENTS_ONLY = "boundary_events_only"
_MODES = (FULL_PATH, ENDPOINTS_ONLY, BOUNDARY_EVENTS_ONLY)


@dataclass(frozen=True)
class SimConfig:
    """Simulation setup: lattice scale, horizon, start, seed, truncation.

    ``start`` is a macroscopic coordinate u (mapped to the site floor(u*n)),
    one of the strings '0', '0+', '0-', or an explicit :class:`LatticeState`.
    Paths reaching lattice distance ceil(L*n) from the origin stop with the
    ``truncated`` flag.
    """

    n: int
    t_horizon: float
    start: float | str | LatticeState
    seed: int
    L: float | None = None
    record_mode: str = ENDPOINTS_ONLY
    event_cap: int = 20_000_000

    def __post_init__(self):
        if self.n < 1:
            raise InvalidFunctionError("n must be >= 1")
        if self.t_horizon <= 0:
            raise InvalidFunctionError("t_horizon must be positive")
        if self.record_mode not in _MODES:
            raise InvalidFunctionError(f"record_mode must be one of {_MODES}")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise InvalidFunctionError("seed must fit in 64 bits")

    def start_state(self, topology: str) -> LatticeState:
        s = self.start
        if isinstance(s, LatticeState):
            if s.topology != topology:
                raise InvalidFunctionError("start state topology mismatch")
            return s
        if isinstance(s, str):
            if s == "0" and topology == LINE:
                return line_site(0)
            if s == "0+" and topology == TWO_HALF:
                return half_site(0, +1)
            if s == "0-" and topology == TWO_HALF:
                return half_site(0, -1)
            raise InvalidFunctionError(f"bad start label {s!r} for {topology}")
        site = math.floor(float(s) * self.n)
        if topology == LINE:
            return line_site(site)
        if site == 0 and float(s) < 0:
            return half_site(0, -1)
        return half_site(site, 1 if site >= 0 else -1)

    def radius(self) -> float:
        if self.L is not None:
            return self.L
        u = 0.0
        if not isinstance(self.start, (str, LatticeState)):
            u = abs(float(self.start))
        return u + 10.0 * math.sqrt(self.t_horizon) + 1.0

    def lattice_radius(self) -> int:
        return int(math.ceil(self.radius() * self.n))


@dataclass(frozen=True)
class PathSummary:
    terminal_flag: str
    final_state: LatticeState
    final_time: float
    kill_time: float | None
    truncation_time: float | None
    first_origin_time: float | None
    time_at_origin_pos: float
    time_at_origin_neg: float
    time_interior_pos: float
    time_interior_neg: float
    switches_pm: int
    switches_mp: int
    origin_visits_pos: int
    origin_visits_neg: int


@dataclass(frozen=True)
class PathRecord:
    """Piecewise-constant trajectory: event times with post-jump states."""

    topology: str
    n: int
    path_index: int
    record_mode: str
    horizon: float
    times: np.ndarray
    codes: np.ndarray
    summary: PathSummary

    @property
    def terminal_flag(self) -> str:
        return self.summary.terminal_flag

    @property
    def events(self) -> list[tuple[float, LatticeState]]:
        return [
            (float(t), state_from_code(int(c), self.topology))
            for t, c in zip(self.times, self.codes)
        ]

    def state_at(self, t: float) -> LatticeState:
        return state_at(self, t)


def state_at(path: PathRecord, t: float) -> LatticeState:
    """Right-continuous evaluation of the recorded step function.

    Thinned records (endpoints or boundary events) only answer queries they
    determine: t = 0, t at/after the final event, or, for boundary records,
    times inside a recorded boundary stay.
    """
    if t < 0 or t > path.horizon + 1e-12:
        raise UnsupportedQueryError(f"t={t} outside [0, horizon={path.horizon}]")
    times, codes = path.times, path.codes
    i = int(np.searchsorted(times, t, side="right")) - 1
    if i < 0:
        raise UnsupportedQueryError("query before the first recorded event")
    state = state_from_code(int(codes[i]), path.topology)
    if path.record_mode == FULL_PATH or i == len(times) - 1 or t == times[i]:
        return state
    if path.record_mode == BOUNDARY_EVENTS_ONLY and (state.is_origin or state.cemetery):
        # Inside a recorded boundary stay the state is determined.
        return state
    raise UnsupportedQueryError(
        f"record mode {path.record_mode} cannot resolve the state at t={t}"
    )


def step_rates(s: LatticeState, p, n: int) -> list[tuple[LatticeState, float]]:
    """Outgoing (target, rate) pairs of a lattice state; zero rates omitted."""
    if s.cemetery:
        return []
    out: list[tuple[LatticeState, float]] = []
    if s.topology == LINE:
        if not isinstance(p, WalkParamsLine):
            raise InvalidFunctionError("line state needs WalkParamsLine")
        if s.site == 0:
            if p.A > 0:
                out.append((lattice_cemetery(LINE), p.A))
            if p.B_plus > 0:
                out.append((line_site(1), n * p.B_plus))
            if p.B_minus > 0:
                out.append((line_site(-1), n * p.B_minus))
        else:
            half = 0.5 * n * n
            out.append((line_site(s.site - 1), half))
            out.append((line_site(s.site + 1), half))
        return out
    if not isinstance(p, WalkParamsTwoHalf):
        raise InvalidFunctionError("two-half state needs WalkParamsTwoHalf")
    if s.site == 0:
        if s.side > 0:
            a, b, c = p.A_plus, p.B_plus, p.C_plus
            nxt, other = half_site(1, +1), half_site(0, -1)
        else:
            a, b, c = p.A_minus, p.B_minus, p.C_minus
            nxt, other = half_site(-1, -1), half_site(0, +1)
        if a > 0:
            out.append((lattice_cemetery(TWO_HALF), a))
        if b > 0:
            out.append((nxt, n * b))
        if c > 0:
            out.append((other, c))
    else:
        half = 0.5 * n * n
        step = 1 if s.site > 0 else -1
        lo = s.site - step
        out.append((half_site(lo, s.side) if lo != 0 else half_site(0, s.side), half))
        out.append((half_site(s.site + step, s.side), half))
    return out


def _kernel_args(p) -> tuple[int, str]:
    if isinstance(p, WalkParamsLine):
        return eng.T_LINE, LINE
    if isinstance(p, WalkParamsTwoHalf):
        return eng.T_TWOHALF, TWO_HALF
    raise InvalidFunctionError(f"unsupported walk params {type(p)!r}")


def _rates(p, n: int):
    if isinstance(p, WalkParamsLine):
        return (p.A, 0.0, n * p.B_plus, n * p.B_minus, 0.0, 0.0)
    return (p.A_plus, p.A_minus, n * p.B_plus, n * p.B_minus, p.C_plus, p.C_minus)


def _start_tuple(state: LatticeState) -> tuple[int, int, int]:
    if state.cemetery:
        return 1, 0, 1
    if state.topology == LINE:
        side = 1 if state.site >= 0 else -1
        return side, abs(state.site), 0
    return state.side, abs(state.site), 0


def _summary_from_kernel(topology, n, horizon, flag, side, d, kill_t, trunc_t,
                         first0, t0p, t0m, tip, tin, swpm, swmp, visp, vism) -> PathSummary:
    if flag == eng.KILLED:
        final = lattice_cemetery(topology)
        final_time = kill_t
    else:
        site = int(side * d)
        final = line_site(site) if topology == LINE else half_site(site, int(side))
        final_time = trunc_t if flag == eng.TRUNCATED else horizon
    return PathSummary(
        terminal_flag=FLAG_NAMES[int(flag)],
        final_state=final,
        final_time=float(final_time),
        kill_time=None if kill_t < 0 else float(kill_t),
        truncation_time=None if trunc_t < 0 else float(trunc_t),
        first_origin_time=None if first0 < 0 else float(first0),
        time_at_origin_pos=float(t0p),
        time_at_origin_neg=float(t0m),
        time_interior_pos=float(tip),
        time_interior_neg=float(tin),
        switches_pm=int(swpm),
        switches_mp=int(swmp),
        origin_visits_pos=int(visp),
        origin_visits_neg=int(vism),
    )


def simulate_path(cfg: SimConfig, p, path_index: int = 0) -> PathRecord:
    """One exact path; equals entry ``path_index`` of a batch with the same seed."""
    topo_int, topology = _kernel_args(p)
    start = cfg.start_state(topology)
    side0, d0, cem = _start_tuple(start)
    rates = _rates(p, cfg.n)
    lsites = cfg.lattice_radius()

    def stream():
        return eng._stream_init(np.uint64(cfg.seed), np.uint64(path_index))

    if cfg.record_mode == FULL_PATH:
        # Start from a generous event-count estimate; an overflow retries
        # once at the configured cap (the stream is re-created, so the retry
        # reproduces the identical path).
        est = int(4 * cfg.n * cfg.n * cfg.t_horizon + 10_000)
        nev = -1
        for cap in sorted({min(est, cfg.event_cap), cfg.event_cap}):
            ev_t = np.empty(cap, dtype=np.float64)
            ev_c = np.empty(cap, dtype=np.int64)
            flag, kill_t, trunc_t, nev = eng._sim_full(
                stream(), topo_int, cfg.n, *rates, side0, d0, cem,
                cfg.t_horizon, lsites, ev_t, ev_c, cap)
            if nev >= 0:
                break
        if nev < 0:
            raise EventCapError(f"path exceeded event cap {cfg.event_cap}")
        times = ev_t[:nev].copy()
        codes = ev_c[:nev].copy()
        summary = _full_summary(topology, cfg.n, cfg.t_horizon, times, codes,
                                int(flag), float(kill_t), float(trunc_t))
        return PathRecord(topology, cfg.n, path_index, cfg.record_mode,
                          cfg.t_horizon, times, codes, summary)

    mode = eng.MODE_BOUNDARY if cfg.record_mode == BOUNDARY_EVENTS_ONLY else eng.MODE_SUMMARY
    if mode == eng.MODE_BOUNDARY:
        out = None
        for cap in sorted({min(2_000_000, cfg.event_cap), cfg.event_cap}):
            ev_t = np.empty(cap, dtype=np.float64)
            ev_c = np.empty(cap, dtype=np.int64)
            out = eng._sim_unified(stream(), topo_int, cfg.n, *rates, side0, d0, cem,
                                   cfg.t_horizon, lsites, mode, ev_t, ev_c, cap)
            if out[-1] >= 0:
                break
        if out[-1] < 0:
            raise EventCapError(f"path exceeded event cap {cfg.event_cap}")
    else:
        ev_t = np.empty(0, dtype=np.float64)
        ev_c = np.empty(0, dtype=np.int64)
        out = eng._sim_unified(stream(), topo_int, cfg.n, *rates, side0, d0, cem,
                               cfg.t_horizon, lsites, mode, ev_t, ev_c, 0)
    (flag, side, d, kill_t, trunc_t, first0, t0p, t0m, tip, tin,
     swpm, swmp, visp, vism, nev) = out
    summary = _summary_from_kernel(topology, cfg.n, cfg.t_horizon, flag, side, d,
                                   kill_t, trunc_t, first0, t0p, t0m, tip, tin,
                                   swpm, swmp, visp, vism)
    if mode == eng.MODE_BOUNDARY:
        times = ev_t[:nev].copy()
        codes = ev_c[:nev].copy()
    else:
        start_code = start.code()
        end_code = summary.final_state.code()
        if end_code == start_code:
            times = np.array([0.0])
            codes = np.array([start_code], dtype=np.int64)
        else:
            times = np.array([0.0, summary.final_time])
            codes = np.array([start_code, end_code], dtype=np.int64)
    return PathRecord(topology, cfg.n, path_index, cfg.record_mode,
                      cfg.t_horizon, times, codes, summary)


def _full_summary(topology, n, horizon, times, codes, flag, kill_t, trunc_t) -> PathSummary:
    """Derive the summary statistics from a full event record."""
    t0p = t0m = tip = tin = 0.0
    swpm = swmp = 0
    visp = vism = 0
    first0 = None
    tprev = 0.0
    prev: LatticeState | None = None
    for t, c in zip(times, codes):
        st = state_from_code(int(c), topology)
        if prev is not None:
            dt = t - tprev
            t0p, t0m, tip, tin = _accumulate(prev, dt, t0p, t0m, tip, tin)
        if st.is_origin:
            if first0 is None:
                first0 = float(t)
            if prev is None or not (prev.is_origin and prev.side == st.side):
                if st.topology == LINE or st.side > 0:
                    visp += 1
                else:
                    vism += 1
            if prev is not None and prev.is_origin and st.topology == TWO_HALF:
                if prev.side > 0 and st.side < 0:
                    swpm += 1
                elif prev.side < 0 and st.side > 0:
                    swmp += 1
        prev, tprev = st, t
    if prev is not None and not prev.cemetery:
        end = horizon if flag != eng.TRUNCATED else trunc_t
        t0p, t0m, tip, tin = _accumulate(prev, end - tprev, t0p, t0m, tip, tin)
    if flag == eng.KILLED:
        final = lattice_cemetery(topology)
        final_time = kill_t
    else:
        final = state_from_code(int(codes[-1]), topology)
        final_time = trunc_t if flag == eng.TRUNCATED else horizon
    return PathSummary(
        FLAG_NAMES[flag], final, float(final_time),
        None if kill_t < 0 else kill_t, None if trunc_t < 0 else trunc_t,
        first0, t0p, t0m, tip, tin, swpm, swmp, visp, vism,
    )


def _accumulate(st: LatticeState, dt: float, t0p, t0m, tip, tin):
    if st.cemetery or dt <= 0:
        return t0p, t0m, tip, tin
    if st.is_origin:
        if st.topology == LINE or st.side > 0:
            t0p += dt
        else:
            t0m += dt
    elif st.site > 0:
        tip += dt
    else:
        tin += dt
    return t0p, t0m, tip, tin


@dataclass
class Ensemble:
    """Columnar batch of paths; records are synthesized on demand."""

    config: SimConfig
    params: object
    topology: str
    columns: dict[str, np.ndarray]
    records: list[PathRecord] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.columns["flag"])

    @property
    def m(self) -> int:
        return len(self)

    def __getitem__(self, i: int) -> PathRecord:
        if self.records is not None:
            return self.records[i]
        c = self.columns
        summary = _summary_from_kernel(
            self.topology, self.config.n, self.config.t_horizon,
            c["flag"][i], c["side"][i], c["d"][i], c["kill_t"][i], c["trunc_t"][i],
            c["first0_t"][i], c["t0p"][i], c["t0m"][i], c["tip"][i], c["tin"][i],
            c["swpm"][i], c["swmp"][i], c["visp"][i], c["vism"][i])
        start = self.config.start_state(self.topology)
        start_code = start.code()
        end_code = summary.final_state.code()
        if end_code == start_code:
            times = np.array([0.0])
            codes = np.array([start_code], dtype=np.int64)
        else:
            times = np.array([0.0, summary.final_time])
            codes = np.array([start_code, end_code], dtype=np.int64)
        return PathRecord(self.topology, self.config.n, i, self.config.record_mode,
                          self.config.t_horizon, times, codes, summary)

    def __iter__(self) -> Iterator[PathRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def horizon(self) -> float:
        return self.config.t_horizon

    @property
    def n(self) -> int:
        return self.config.n

    def flags(self) -> np.ndarray:
        return self.columns["flag"]

    def truncated_fraction(self) -> float:
        return float(np.mean(self.columns["flag"] == eng.TRUNCATED))

    def final_positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, side, alive_mask) of the endpoint states, x in macroscopic units."""
        c = self.columns
        x = c["side"] * c["d"] / self.config.n
        alive = c["flag"] == eng.ALIVE
        return x, c["side"].astype(np.int64), alive


def simulate_batch(cfg: SimConfig, p, m: int) -> Ensemble:
    """m independent paths; path i uses the stream keyed by (seed, i)."""
    if m < 1:
        raise InvalidFunctionError("m must be >= 1")
    topo_int, topology = _kernel_args(p)
    start = cfg.start_state(topology)
    side0, d0, cem = _start_tuple(start)
    rates = _rates(p, cfg.n)
    lsites = cfg.lattice_radius()

    if cfg.record_mode == ENDPOINTS_ONLY:
        cols = {
            "flag": np.empty(m, dtype=np.int64),
            "side": np.empty(m, dtype=np.int64),
            "d": np.empty(m, dtype=np.int64),
            "kill_t": np.empty(m, dtype=np.float64),
            "trunc_t": np.empty(m, dtype=np.float64),
            "first0_t": np.empty(m, dtype=np.float64),
            "t0p": np.empty(m, dtype=np.float64),
            "t0m": np.empty(m, dtype=np.float64),
            "tip": np.empty(m, dtype=np.float64),
            "tin": np.empty(m, dtype=np.float64),
            "swpm": np.empty(m, dtype=np.int64),
            "swmp": np.empty(m, dtype=np.int64),
            "visp": np.empty(m, dtype=np.int64),
            "vism": np.empty(m, dtype=np.int64),
        }
        eng._batch_summary(
            np.uint64(cfg.seed), m, topo_int, cfg.n, *rates,
            side0, d0, cem, cfg.t_horizon, lsites,
            cols["flag"], cols["side"], cols["d"], cols["kill_t"], cols["trunc_t"],
            cols["first0_t"], cols["t0p"], cols["t0m"], cols["tip"], cols["tin"],
            cols["swpm"], cols["swmp"], cols["visp"], cols["vism"])
        return Ensemble(cfg, p, topology, cols)

    records = [simulate_path(cfg, p, path_index=i) for i in range(m)]
    cols = _columns_from_records(records)
    return Ensemble(cfg, p, topology, cols, records=records)


def _columns_from_records(records: Sequence[PathRecord]) -> dict[str, np.ndarray]:
    m = len(records)
    cols = {
        "flag": np.empty(m, dtype=np.int64),
        "side": np.empty(m, dtype=np.int64),
        "d": np.empty(m, dtype=np.int64),
        "kill_t": np.empty(m, dtype=np.float64),
        "trunc_t": np.empty(m, dtype=np.float64),
        "first0_t": np.empty(m, dtype=np.float64),
        "t0p": np.empty(m, dtype=np.float64),
        "t0m": np.empty(m, dtype=np.float64),
        "tip": np.empty(m, dtype=np.float64),
        "tin": np.empty(m, dtype=np.float64),
        "swpm": np.empty(m, dtype=np.int64),
        "swmp": np.empty(m, dtype=np.int64),
        "visp": np.empty(m, dtype=np.int64),
        "vism": np.empty(m, dtype=np.int64),
    }
    flag_codes = {"alive": eng.ALIVE, "killed": eng.KILLED, "truncated": eng.TRUNCATED}
    for i, r in enumerate(records):
        s = r.summary
        fs = s.final_state
        cols["flag"][i] = flag_codes[s.terminal_flag]
        if fs.cemetery:
            cols["side"][i], cols["d"][i] = 0, 0
        elif r.topology == LINE:
            cols["side"][i] = 1 if fs.site >= 0 else -1
            cols["d"][i] = abs(fs.site)
        else:
            cols["side"][i], cols["d"][i] = fs.side, abs(fs.site)
        cols["kill_t"][i] = -1.0 if s.kill_time is None else s.kill_time
        cols["trunc_t"][i] = -1.0 if s.truncation_time is None else s.truncation_time
        cols["first0_t"][i] = -1.0 if s.first_origin_time is None else s.first_origin_time
        cols["t0p"][i] = s.time_at_origin_pos
        cols["t0m"][i] = s.time_at_origin_neg
        cols["tip"][i] = s.time_interior_pos
        cols["tin"][i] = s.time_interior_neg
        cols["swpm"][i] = s.switches_pm
        cols["swmp"][i] = s.switches_mp
        cols["visp"][i] = s.origin_visits_pos
        cols["vism"][i] = s.origin_visits_neg
    return cols


def holding_periods(record: PathRecord, side: int) -> list[float]:
    """Completed holding durations at the origin of ``side`` in a record.

    The final stay is censored by the horizon (or by nothing at all for the
    line topology with no exit channel) and is excluded.
    """
    if record.record_mode == ENDPOINTS_ONLY:
        raise UnsupportedQueryError("holding periods need boundary or full records")
    holds = []
    times, codes = record.times, record.codes
    for i in range(len(times) - 1):
        st = state_from_code(int(codes[i]), record.topology)
        if st.is_origin and (record.topology == LINE or st.side == side):
            holds.append(float(times[i + 1] - times[i]))
    return holds


def path_to_rows(record: PathRecord) -> list[tuple[float, str]]:
    """CSV rows (t, state label) of a record."""
    return [(float(t), state_from_code(int(c), record.topology).label)
            for t, c in zip(record.times, record.codes)]
