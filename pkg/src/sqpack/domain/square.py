"""Packing an x by x square by reduction to tilted-stack slabs and end trapezoids.

Layout of the decomposition, with H = W = floor(x - m) and h = x - H:

    +-----------+-----+
    |           |  R  |    grid  [0, W] x [h, x], packed exactly
    |   grid    |  slab    R     [W, x] x [h, x], a slab rotated a quarter turn
    |           |     |    B     [0, x] x [0, h]
    +-----------+-----+
    |       B slab    |
    +-----------------+

Each slab is a parallelogram of flush tilted stacks with a right trapezoid at both ends.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from sqpack.domain.errors import InfeasibleError, SqpackError
from sqpack.domain.geometry import GridBlock, Point, Region
from sqpack.domain.models import Layout, PackingStats, SquarePlan, StripSpec, TrapezoidSpec, merge_layouts
from sqpack.domain.strip import pack_naive_region, pack_parallel_strip, solve_tilt, tilted_strip_region
from sqpack.domain.trapezoid import pack_right_trapezoid
from sqpack.domain.verifier import ensure_verified, measure_waste

# --- SQUARE CONSTANTS ---
SMALL_SIDE = 32.0
MIN_GRID_MARGIN = 8
# Stack length exceeds the slab span by 1/2 to 3/2
STACK_EXCESS = 0.5
SLAB_GAMMA = 0.5
NAIVE_END_TAG = "naive-end"
IDENTITY = np.eye(2)
HALF_TURN = -np.eye(2)
QUARTER_TURN_CCW = np.array([[0.0, -1.0], [1.0, 0.0]])
TRANSPOSE = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class _Piece:
    tag: str
    region: Region  # in the square's frame
    matrix: np.ndarray  # canonical frame -> square frame
    shift: np.ndarray
    job: Union[GridBlock, StripSpec, TrapezoidSpec]
    local_region: Optional[Region] = None


def choose_m(x: float, beta: float, epsilon: float = 0.0) -> int:
    """Slab parameter m = (x / log^eps x)^(2 / (2 beta + 1)), clamped to [8, x / 4]."""
    if not 0.5 < beta < 1.0:
        raise InfeasibleError(f"beta must lie in (1/2, 1), got {beta}")
    base = x * math.log(x) ** -epsilon if epsilon else x
    m = round(base ** (2.0 / (2.0 * beta + 1.0)))
    return int(min(max(m, 8), math.floor(x / 4.0)))


def _slab_pieces(length: float, span: float, m: int, nu: float) -> Tuple[List[_Piece], float, float]:
    """Left trapezoid, strip parallelogram and right trapezoid of a slab [0, length] x [0, span]."""
    stack = math.ceil(span + STACK_EXCESS)
    alpha = solve_tilt(stack, span).alpha
    lean = span * math.tan(alpha)
    small = m**nu
    pitch = 1.0 / math.cos(alpha)
    stacks = math.floor((length - 2.0 * small - lean) / pitch)
    if stacks < 1:
        raise InfeasibleError(f"slab of length {length:g} leaves no room for tilted stacks")
    p = small + lean
    q = p + stacks * pitch
    strip = tilted_strip_region(span, alpha, stacks, x0=p)
    left = TrapezoidSpec(span, small, alpha, beta=nu, gamma=SLAB_GAMMA)
    right = TrapezoidSpec(span, length - q, alpha, beta=nu, gamma=SLAB_GAMMA)
    pieces = [
        _Piece("trapezoid", left.region(), IDENTITY, np.zeros(2), left),
        _Piece("strip", strip, IDENTITY, np.zeros(2), StripSpec(span, stacks * pitch, stack), strip),
        _Piece("trapezoid", right.region().transformed(HALF_TURN, (length, span)), HALF_TURN,
               np.array([length, span]), right),
    ]
    return pieces, alpha, small


def _placed(piece: _Piece, matrix: np.ndarray, shift: np.ndarray) -> _Piece:
    return _Piece(
        piece.tag,
        piece.region.transformed(matrix, shift),
        matrix @ piece.matrix,
        matrix @ piece.shift + shift,
        piece.job,
        piece.local_region,
    )


def _plan_pieces(x: float, m: int, nu: float, beta: float, epsilon: float) -> Tuple[SquarePlan, List[_Piece]]:
    if not 0.0 < nu < beta + 0.5:
        raise InfeasibleError(f"nu must lie in (0, beta + 1/2), got {nu}")
    if x == math.floor(x):
        whole = Region.rectangle(0.0, 0.0, x, x)
        grid = GridBlock(Point(0.0, 0.0), int(x), int(x))
        plan = SquarePlan(x, beta, epsilon, nu, m, ((whole, "grid"),), grid_side=int(x))
        return plan, [_Piece("grid", whole, IDENTITY, np.zeros(2), grid)]
    if x - m < MIN_GRID_MARGIN:
        raise InfeasibleError(f"x - m = {x - m:g} leaves too small a grid")
    side = math.floor(x - m)
    h = x - side
    bottom, alpha, small = _slab_pieces(x, h, m, nu)
    right, _, _ = _slab_pieces(float(side), h, m, nu)
    grid = GridBlock(Point(0.0, h), side, side)
    pieces = [_Piece("grid", Region.rectangle(0.0, h, side, x), IDENTITY, np.zeros(2), grid)]
    pieces += bottom
    pieces += [_placed(p, QUARTER_TURN_CCW, np.array([x, h])) for p in right]
    plan = SquarePlan(
        x, beta, epsilon, nu, m,
        tuple((p.region, p.tag) for p in pieces),
        grid_side=side, slab_height=h, tilt=alpha, end_base=small,
    )
    return plan, pieces


def plan_decomposition(x: float, m: int, nu: float, beta: float = 0.75, epsilon: float = 0.0) -> SquarePlan:
    """Regions tiling [0, x]^2: the integer grid, then per slab end trapezoids and a strip."""
    return _plan_pieces(x, m, nu, beta, epsilon)[0]


def _naive_best(region: Region, tag: str) -> Layout:
    """Naive rows or naive columns, whichever holds more squares."""
    rows = pack_naive_region(region, tag=tag)
    columns = pack_naive_region(region.transformed(TRANSPOSE, (0.0, 0.0)), tag=tag).transformed(TRANSPOSE, (0.0, 0.0))
    return rows if rows.total_count >= columns.total_count else columns


def _flatten(layout: Layout) -> Layout:
    return Layout(layout.region, layout.centers, layout.angles, layout.grid_blocks, layout.tags, meta=dict(layout.meta))


def _pack_piece(piece: _Piece) -> Tuple[Layout, str, Tuple[str, ...]]:
    job = piece.job
    if isinstance(job, GridBlock):
        return Layout(piece.region, grid_blocks=(job,), tags=("grid",)), "grid", ()
    try:
        if isinstance(job, StripSpec):
            local = pack_parallel_strip(job, piece.local_region)
            return _flatten(local).transformed(piece.matrix, piece.shift), "strip", ()
        local, stats = pack_right_trapezoid(job)
        if not stats.flags:
            built = _flatten(local).transformed(piece.matrix, piece.shift)
            naive = _naive_best(piece.region, NAIVE_END_TAG)
            if naive.total_count > built.total_count:
                logging.info(
                    f"End trapezoid h={job.height:g}: naive packing holds "
                    f"{naive.total_count - built.total_count} more squares than the construction"
                )
                return naive, NAIVE_END_TAG, ()
            return built, "trapezoid", ()
        flags = stats.flags
    except SqpackError as e:
        logging.warning(f"{piece.tag} region could not be constructed ({e}); packing naively")
        flags = ("fallback",)
    return _naive_best(piece.region, "fallback"), "fallback", tuple(flags) + ("fallback",)


def _trivial(x: float, flags: Tuple[str, ...] = ()) -> Layout:
    square = Region.rectangle(0.0, 0.0, x, x)
    k = math.floor(x)
    blocks = (GridBlock(Point(0.0, 0.0), k, k),) if k >= 1 else ()
    part = Layout(square, grid_blocks=blocks, tags=("grid",) * len(blocks))
    return merge_layouts(square, [part], labels=["grid"], meta={"flags": list(flags), "side": x})


def pack_trivial(x: float) -> Tuple[Layout, PackingStats]:
    """floor(x)^2 axis-aligned squares in the corner; waste x^2 - floor(x)^2."""
    if x <= 0:
        raise InfeasibleError(f"square side must be positive, got {x}")
    layout = _trivial(x)
    return layout, measure_waste(layout)


def pack_square(
    x: float,
    beta: float = 0.75,
    epsilon: float = 0.0,
    nu: float = 0.75,
    workers: int = 1,
) -> Tuple[Layout, PackingStats]:
    if x <= 0:
        raise InfeasibleError(f"square side must be positive, got {x}")
    if x < SMALL_SIDE:
        layout = _trivial(x, () if x == math.floor(x) else ("trivial-grid",))
        return layout, measure_waste(layout)

    m = choose_m(x, beta, epsilon)
    try:
        plan, pieces = _plan_pieces(x, m, nu, beta, epsilon)
    except InfeasibleError as e:
        logging.warning(f"Square x={x:g}: no decomposition ({e}), using the trivial grid")
        layout = _trivial(x, ("fallback",))
        return layout, measure_waste(layout)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(_pack_piece, pieces))

    flags = sorted({f for _, _, fl in results for f in fl})
    square = Region.rectangle(0.0, 0.0, x, x)
    meta = {
        "flags": flags,
        "side": x,
        "m": plan.m,
        "slab_height": plan.slab_height,
        "tilt": plan.tilt,
        "end_base": plan.end_base,
    }
    layout = merge_layouts(square, [r[0] for r in results], labels=[r[1] for r in results], meta=meta)
    ensure_verified(layout, "pack_square", workers=workers)
    stats = measure_waste(layout, workers=workers)
    logging.info(f"Square x={x:g} m={m}: {stats.square_count} squares, waste {stats.waste:.3f}, flags {flags}")
    return layout, stats
