"""Real roots of the characteristic function and their two-sided labels.

Labels run -n_max, ..., -1, -0, +0, +1, ..., +n_max. The four roots of smallest modulus take
-1, -0, +0, +1 in ascending order (the unperturbed function has a four-fold zero at the origin);
every other root is attached to the unperturbed zero it rounds to: mu near k > 0 gets +(k+1) and
mu near k < 0 gets -(|k|+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np
import structlog

from retarded_spectrum.errors import IndexingError, MissingLabelError
from retarded_spectrum.expr import FloatArray
from retarded_spectrum.models import SuspectedDoubleRoot
from retarded_spectrum.problem import Problem
from retarded_spectrum.spectral.charfn import CharFn, Method, characteristic_function
from retarded_spectrum.spectral.dde import GridSpec

log = structlog.get_logger()

DEFAULT_SCAN_STEP = 0.05
MAX_SCAN_STEP = 0.1
DEFAULT_ROOT_TOL = 1e-12
TANGENCY_RATIO = 1e-6
RESCAN_FACTOR = 16
MAX_REFINE_ITER = 200
CLUSTER_SIZE = 4


@total_ordering
@dataclass(frozen=True)
class Label:
    """A spectrum label; ``sign`` distinguishes -0 from +0."""

    sign: int
    n: int

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1) or self.n < 0:
            msg = f"invalid label sign={self.sign}, n={self.n}"
            raise ValueError(msg)

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}{self.n}"

    def _key(self) -> tuple[int, int]:
        return (self.n, 0) if self.sign > 0 else (-self.n, -1)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Label):
            return NotImplemented
        return self._key() < other._key()


def unperturbed_zero(label: Label | int) -> float:
    """mu_n^0: n - 1 for positive labels, -(|n| - 1) for negative ones, 0 for +-0.

    A plain int is read as a signed label (0 meaning +0).
    """
    if isinstance(label, int):
        label = Label(-1 if label < 0 else 1, abs(label))
    if label.n == 0:
        return 0.0
    return float(label.sign * (label.n - 1))


def all_labels(n_max: int) -> list[Label]:
    """-n_max .. -1, -0, +0, +1 .. +n_max."""
    negative = [Label(-1, n) for n in range(n_max, -1, -1)]
    positive = [Label(1, n) for n in range(n_max + 1)]
    return negative + positive


@dataclass(frozen=True)
class SpectrumEntry:
    mu: float
    mu0: float
    eps: float


@dataclass(frozen=True)
class IndexedSpectrum:
    """Labelled eigenvalues with their unperturbed anchors."""

    n_max: int
    entries: dict[Label, SpectrumEntry]
    warnings: tuple[str, ...] = field(default=())

    def entry(self, label: Label) -> SpectrumEntry:
        try:
            return self.entries[label]
        except KeyError:
            raise MissingLabelError(str(label)) from None

    def mu(self, label: Label) -> float:
        return self.entry(label).mu

    def ordered(self) -> list[tuple[Label, SpectrumEntry]]:
        return sorted(self.entries.items())


@dataclass(frozen=True)
class RootScan:
    """Refined roots in ascending order plus unresolved near-tangencies."""

    roots: list[float]
    suspects: list[SuspectedDoubleRoot]


def scan_grid(n_max: int, scan_step: float) -> FloatArray:
    """Symmetric grid k * step covering [-(n_max - 1) - 1/2, (n_max - 1) + 1/2]; contains 0."""
    bound = (n_max - 1) + 0.5
    k_max = math.floor(bound / scan_step + 1e-9)
    return scan_step * np.arange(-k_max, k_max + 1, dtype=np.float64)


def _refine(fn: CharFn, lo: FloatArray, hi: FloatArray, flo: FloatArray, fhi: FloatArray, tol: float) -> FloatArray:
    """Shrink every sign-change bracket to width <= tol.

    Each pass evaluates the midpoint, the secant point and the secant point +- 0.4 tol, and keeps the
    leftmost sub-bracket with a sign change, so a good secant step closes the bracket at once and a
    bad one still halves it.
    """
    lo, hi, flo, fhi = lo.copy(), hi.copy(), flo.copy(), fhi.copy()
    # Points at secant +- nudge straddle the root once the secant estimate is within tol/2 of it,
    # so the surviving sub-bracket is narrower than tol and the bracket drops out next pass.
    nudge = 0.4 * tol
    for _ in range(MAX_REFINE_ITER):
        active = np.flatnonzero(hi - lo > tol)
        if active.size == 0:
            break
        a, b, fa, fb = lo[active], hi[active], flo[active], fhi[active]
        mid = a + 0.5 * (b - a)
        secant = np.clip(a - fa * (b - a) / (fb - fa), a, b)
        # One row of trial points per bracket, sorted so that row i reads a < t1 <= ... <= t4 < b.
        # Every trial point of every bracket goes to fn in a single batched call.
        trial = np.sort(np.column_stack([mid, secant - nudge, secant, secant + nudge]), axis=1)
        trial = np.clip(trial, a[:, None], b[:, None])
        f_trial = fn(trial.ravel()).reshape(trial.shape)

        xs = np.column_stack([a, trial, b])
        fs = np.column_stack([fa, f_trial, fb])
        rows = np.arange(active.size)

        # an exact zero collapses the bracket onto that point
        hits = fs[:, 1:-1] == 0.0
        has_hit = hits.any(axis=1)
        hit_x = trial[rows, np.argmax(hits, axis=1)]

        # Otherwise keep the leftmost sign change. The end values have opposite signs, so every
        # row has one. The midpoint is a split point, so the kept piece is at most half as wide.
        change = fs[:, :-1] * fs[:, 1:] < 0.0
        first = np.argmax(change, axis=1)
        new_lo = np.where(has_hit, hit_x, xs[rows, first])
        new_hi = np.where(has_hit, hit_x, xs[rows, first + 1])
        lo[active] = new_lo
        hi[active] = new_hi
        flo[active] = np.where(has_hit, 0.0, fs[rows, first])
        fhi[active] = np.where(has_hit, 0.0, fs[rows, first + 1])
    else:
        log.warning("root_refinement_capped", iterations=MAX_REFINE_ITER, widest=float(np.max(hi - lo)))
    return 0.5 * (lo + hi)


def _sign_brackets(mus: FloatArray, f: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    idx = np.flatnonzero(f[:-1] * f[1:] < 0.0)
    return mus[idx], mus[idx + 1], f[idx], f[idx + 1]


def _tangency_candidates(f: FloatArray, window: int) -> list[tuple[int, float]]:
    """Interior local minima of |F| with no sign change that sit far below the local scale."""
    mag = np.abs(f)
    found: list[tuple[int, float]] = []
    for i in range(1, f.size - 1):
        if not (mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1]):
            continue
        if f[i] == 0.0 or f[i - 1] * f[i] <= 0.0 or f[i] * f[i + 1] <= 0.0:
            continue
        scale = float(np.max(mag[max(0, i - window) : i + window + 1]))
        if mag[i] < TANGENCY_RATIO * scale:
            found.append((i, scale))
    return found


def find_roots(fn: CharFn, mus: FloatArray, root_tol: float = DEFAULT_ROOT_TOL) -> RootScan:
    """Locate every real root of ``fn`` sampled on the ascending grid ``mus``.

    Args:
        fn: Vectorised characteristic function.
        mus: Ascending, evenly spaced scan grid.
        root_tol: Final bracket width.

    Returns:
        Merged ascending roots and the near-tangencies that a local rescan could not split.
    """
    f = fn(mus)
    step = float(mus[1] - mus[0]) if mus.size > 1 else 1.0
    exact = [float(m) for m in mus[f == 0.0]]
    lo, hi, flo, fhi = _sign_brackets(mus, f)

    # Two roots closer than one scan step leave no sign change, only a dip of |F| between
    # samples of the same sign. Each such dip is rescanned on a grid RESCAN_FACTOR times finer.
    # A sign change there adds brackets. A dip that survives is reported, never dropped.
    suspects: list[SuspectedDoubleRoot] = []
    extra: list[tuple[FloatArray, FloatArray, FloatArray, FloatArray]] = []
    # local scale is measured over about one unit of mu, the spacing of unperturbed zeros
    window = max(1, round(0.5 / step))
    for i, scale in _tangency_candidates(f, window):
        fine = np.linspace(mus[i - 1], mus[i + 1], 2 * RESCAN_FACTOR + 1)
        f_fine = fn(fine)
        exact.extend(float(m) for m in fine[f_fine == 0.0])
        bracket = _sign_brackets(fine, f_fine)
        if bracket[0].size or np.any(f_fine == 0.0):
            extra.append(bracket)
            continue
        at = int(np.argmin(np.abs(f_fine)))
        suspect = SuspectedDoubleRoot(mu=float(fine[at]), f_value=float(f_fine[at]), local_scale=scale)
        log.warning("suspected_double_root", mu=suspect.mu, f_value=suspect.f_value, local_scale=scale)
        suspects.append(suspect)

    for bracket in extra:
        lo, hi, flo, fhi = (np.concatenate([old, new]) for old, new in zip((lo, hi, flo, fhi), bracket, strict=True))

    refined = _refine(fn, lo, hi, flo, fhi, root_tol) if lo.size else np.empty(0)
    # an exact zero on the grid can also be the end of a neighbouring bracket
    roots = _merge(sorted([*refined.tolist(), *exact]), 10.0 * root_tol)
    log.info(
        "roots_scanned",
        grid_points=int(mus.size),
        brackets=int(lo.size),
        exact_zeros=len(exact),
        suspects=len(suspects),
        roots=len(roots),
    )
    return RootScan(roots=roots, suspects=suspects)


def _merge(values: list[float], tol: float) -> list[float]:
    merged: list[float] = []
    for v in values:
        if merged and v - merged[-1] <= tol:
            continue
        merged.append(v)
    return merged


def scan_roots_detailed(
    p: Problem,
    n_max: int,
    scan_step: float,
    g: GridSpec,
    *,
    method: Method = "solver",
    root_tol: float = DEFAULT_ROOT_TOL,
    threads: int = 1,
) -> RootScan:
    """Scan F over the labelled range and refine every bracket; keeps near-tangency diagnostics."""
    if not 0.0 < scan_step <= MAX_SCAN_STEP:
        msg = f"scan_step must be in (0, {MAX_SCAN_STEP}], got {scan_step}"
        raise ValueError(msg)
    if n_max < 2:
        msg = f"n_max must be at least 2, got {n_max}"
        raise ValueError(msg)
    fn = characteristic_function(p, g, method, threads)
    return find_roots(fn, scan_grid(n_max, scan_step), root_tol)


def scan_roots(
    p: Problem,
    n_max: int,
    scan_step: float,
    g: GridSpec,
    *,
    method: Method = "solver",
    root_tol: float = DEFAULT_ROOT_TOL,
    threads: int = 1,
) -> list[float]:
    """Ascending real roots of F in [-(n_max - 1) - 1/2, (n_max - 1) + 1/2].

    Args:
        p: The problem.
        n_max: Largest label magnitude; sets the scan range.
        scan_step: Grid spacing, at most ``MAX_SCAN_STEP``.
        g: Solver grid.
        method: ``"solver"`` or ``"closed_form"``.
        root_tol: Final bracket width.
        threads: Worker threads for the batched F evaluations.

    Returns:
        The roots; use ``scan_roots_detailed`` to also get suspected double roots.
    """
    return scan_roots_detailed(p, n_max, scan_step, g, method=method, root_tol=root_tol, threads=threads).roots


def index_spectrum(roots: list[float], n_max: int) -> IndexedSpectrum:
    """Attach the two-sided labels to sorted roots.

    Args:
        roots: Ascending real roots from a scan over the labelled range.
        n_max: Largest label magnitude to fill.

    Returns:
        One entry per label in -n_max..+n_max, plus a warning when the zero cluster crowds mu = +-1.

    Raises:
        IndexingError: When a label in -n_max..+n_max receives no root or more than one.
    """
    if any(b < a for a, b in zip(roots, roots[1:], strict=False)):
        msg = "roots must be sorted ascending"
        raise ValueError(msg)

    # The unperturbed function has a four-fold zero at mu = 0, so four roots cluster near the
    # origin. The four of smallest modulus take -1, -0, +0, +1 in ascending order. Ties in
    # modulus break towards the negative root so the choice does not depend on input order.
    by_modulus = sorted(range(len(roots)), key=lambda i: (abs(roots[i]), roots[i]))
    cluster_idx = sorted(by_modulus[:CLUSTER_SIZE])
    if len(cluster_idx) < CLUSTER_SIZE:
        raise IndexingError("+-0/+-1", [roots[i] for i in cluster_idx])

    candidates: dict[Label, list[float]] = {label: [] for label in all_labels(n_max)}
    for label, i in zip((Label(-1, 1), Label(-1, 0), Label(1, 0), Label(1, 1)), cluster_idx, strict=True):
        candidates[label].append(roots[i])

    # Every other root belongs to the unperturbed zero nearest to it: k = round(mu) is
    # mu^0 = n - 1 for label +n, or -(n - 1) for label -n. A second root rounding to 0 means
    # the cluster has more than four members.
    cluster = set(cluster_idx)
    for i, mu in enumerate(roots):
        if i in cluster:
            continue
        k = round(mu)
        if k == 0:
            raise IndexingError("+-0/+-1", [roots[j] for j in cluster_idx] + [mu])
        label = Label(1 if k > 0 else -1, abs(k) + 1)
        if label.n > n_max:
            continue
        candidates[label].append(mu)

    # roots past n_max were skipped above; every label in range must hold exactly one
    entries: dict[Label, SpectrumEntry] = {}
    for label, found in candidates.items():
        if len(found) != 1:
            raise IndexingError(str(label), found)
        mu0 = unperturbed_zero(label)
        entries[label] = SpectrumEntry(mu=found[0], mu0=mu0, eps=found[0] - mu0)

    warnings: list[str] = []
    cluster_max = max(abs(roots[i]) for i in cluster_idx)
    if cluster_max >= 0.5:
        warnings.append(f"zero cluster not well separated: max |mu| over labels +-0, +-1 is {cluster_max:.6g}")
        log.warning("cluster_not_separated", cluster_max=cluster_max)
    log.info("spectrum_indexed", n_max=n_max, labels=len(entries))
    return IndexedSpectrum(n_max=n_max, entries=entries, warnings=tuple(warnings))
