import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from sqpack.domain.errors import InfeasibleError, InsufficientDataError, SqpackError
from sqpack.domain.models import FitResult, Layout, PackingStats, StripSpec, SweepRecord, TrapezoidSpec
from sqpack.domain.quad_primitive import build_quad_packing, derive_params
from sqpack.domain.square import STACK_EXCESS, pack_square, pack_trivial
from sqpack.domain.strip import pack_parallel_strip, solve_tilt, tilted_strip_region
from sqpack.domain.trapezoid import pack_right_trapezoid
from sqpack.domain.verifier import measure_waste

# --- ANALYSIS CONSTANTS ---
METHODS = ("trivial", "strip", "quad", "trapezoid", "square")
MIN_FIT_POINTS = 3
PRIOR_EXPONENTS = {
    "7/11": 7.0 / 11.0,
    "(3+sqrt2)/7": (3.0 + math.sqrt(2.0)) / 7.0,
    "5/8": 5.0 / 8.0,
    "3/5": 3.0 / 5.0,
}
DEFAULT_PARAMS: Dict[str, Dict[str, float]] = {
    "trivial": {},
    "strip": {},
    "quad": {"theta": 0.1, "sigma1": 0.01},
    "trapezoid": {"beta": 0.75, "gamma": 0.5},
    "square": {"beta": 0.75, "epsilon": 0.0, "nu": 0.75},
}


def reference_curve(beta: float, epsilon: float, xs: Sequence[float]) -> np.ndarray:
    """x^(2 beta / (2 beta + 1)) * log(x)^(epsilon / (2 beta + 1))."""
    x = np.asarray(xs, dtype=float)
    k = 2.0 * beta + 1.0
    return x ** (2.0 * beta / k) * np.log(x) ** (epsilon / k)


def _strip(x: float, params: Mapping[str, Any], workers: int) -> Tuple[Layout, PackingStats]:
    stack = math.ceil(x + STACK_EXCESS)
    alpha = solve_tilt(stack, x).alpha
    stacks = max(1, math.floor(params.get("length", x) * math.cos(alpha)))
    region = tilted_strip_region(x, alpha, stacks)
    layout = pack_parallel_strip(StripSpec(x, stacks / math.cos(alpha), stack), region)
    return layout, measure_waste(layout, workers=workers)


def _quad(x: float, params: Mapping[str, Any], workers: int) -> Tuple[Layout, PackingStats]:
    packing = build_quad_packing(derive_params(round(x), params["theta"], params["sigma1"]))
    return packing.layout, packing.stats


def _trapezoid(x: float, params: Mapping[str, Any], workers: int) -> Tuple[Layout, PackingStats]:
    beta, gamma = params["beta"], params["gamma"]
    return pack_right_trapezoid(TrapezoidSpec(x, x**beta, math.atan(x**-gamma), beta=beta, gamma=gamma))


def _square(x: float, params: Mapping[str, Any], workers: int) -> Tuple[Layout, PackingStats]:
    return pack_square(x, params["beta"], params["epsilon"], params["nu"], workers=workers)


def _trivial(x: float, params: Mapping[str, Any], workers: int) -> Tuple[Layout, PackingStats]:
    return pack_trivial(x)


BUILDERS: Dict[str, Callable[[float, Mapping[str, Any], int], Tuple[Layout, PackingStats]]] = {
    "trivial": _trivial,
    "strip": _strip,
    "quad": _quad,
    "trapezoid": _trapezoid,
    "square": _square,
}


def _run_point(method: str, x: float, params: Mapping[str, Any], timed: bool) -> SweepRecord:
    start = time.perf_counter()
    try:
        _, stats = BUILDERS[method](x, params, 1)
    except SqpackError as e:
        logging.warning(f"Sweep {method} x={x:g} failed: {e}")
        seconds = time.perf_counter() - start if timed else 0.0
        return SweepRecord(x, method, math.nan, 0, seconds, False)
    seconds = time.perf_counter() - start if timed else 0.0
    logging.debug(f"Sweep {method} x={x:g}: waste {stats.waste:.6g} in {seconds:.3f}s")
    return SweepRecord(x, method, max(0.0, stats.waste), stats.square_count, seconds, stats.verified)


def sweep(
    method: str,
    xs: Sequence[float],
    params: Optional[Mapping[str, Any]] = None,
    workers: int = 1,
    timed: bool = True,
) -> List[SweepRecord]:
    """One record per x, in x order; points run as independent tasks.

    With `timed=False` every record reports zero seconds, so identical inputs give
    identical records.
    """
    if method not in BUILDERS:
        raise InfeasibleError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    xs = [float(x) for x in xs]
    if not xs:
        return []
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise InfeasibleError("sweep points must be strictly increasing")
    merged = {**DEFAULT_PARAMS[method], **(params or {})}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(lambda x: _run_point(method, x, merged, timed), xs))

    failed = sum(not r.verified for r in records)
    logging.info(f"Sweep {method}: {len(records)} points, {failed} failed")
    return records


def fit_exponent(records: Sequence[SweepRecord]) -> FitResult:
    """Least-squares line through (log x, log waste) over verified records with positive waste."""
    usable = [r for r in records if r.verified and r.waste > 0 and math.isfinite(r.waste)]
    if len(usable) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need {MIN_FIT_POINTS} usable records, got {len(usable)}")
    lx = np.log([r.x for r in usable])
    lw = np.log([r.waste for r in usable])
    slope, intercept = np.polyfit(lx, lw, 1)
    residual = lw - (slope * lx + intercept)
    total = float(np.sum((lw - lw.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual**2)) / total if total > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, len(usable))
