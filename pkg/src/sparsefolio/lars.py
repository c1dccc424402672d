"""Least-angle regression with the lasso modification.

The path is traced in penalty space: at penalty ``lam`` every active column
has ``|x_j'(y - X b)| = lam`` and every inactive one ``<= lam``.  Between knots
the coefficients move linearly, so the whole lasso solution set is stored as
a list of knots.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scaling import Standardization, prepare


@dataclass(frozen=True)
class Knot:
    penalty: float
    active: tuple[int, ...]
    coeffs: np.ndarray


@dataclass(frozen=True)
class SelectionPath:
    knots: tuple[Knot, ...]
    entry_order: tuple[int, ...]
    standardization: Standardization = field(repr=False)
    lasso: bool = True

    @property
    def penalties(self) -> np.ndarray:
        return np.array([kn.penalty for kn in self.knots])

    @property
    def coef_matrix(self) -> np.ndarray:
        """``(n_knots, k)`` raw-scale coefficients."""
        return np.vstack([kn.coeffs for kn in self.knots])

    def coeffs_at(self, penalty: float) -> np.ndarray:
        """Lasso solution at an arbitrary penalty by linear interpolation between knots."""
        pens = self.penalties
        if penalty >= pens[0]:
            return np.zeros_like(self.knots[0].coeffs) if penalty > pens[0] else self.knots[0].coeffs.copy()
        if penalty <= pens[-1]:
            if penalty < pens[-1] and pens[-1] > 0:
                raise ValueError(f"penalty {penalty} below the end of the path ({pens[-1]})")
            return self.knots[-1].coeffs.copy()
        i = int(np.searchsorted(-pens, -penalty))  # pens[i-1] > penalty >= pens[i]
        hi, lo = self.knots[i - 1], self.knots[i]
        t = (hi.penalty - penalty) / (hi.penalty - lo.penalty)
        return (1 - t) * hi.coeffs + t * lo.coeffs

    def knot_for_cardinality(self, size: int) -> Knot:
        """First knot with exactly ``size`` nonzero coefficients.

        A column enters the active set at a knot with coefficient zero, so this
        is the knot where the ``size + 1``-th column joins (or the end of the
        path).  If drops skip ``size``, the first knot with the most nonzeros
        not exceeding ``size`` is returned.
        """
        counts = [int(np.count_nonzero(kn.coeffs)) for kn in self.knots]
        fit = [c for c in counts if c <= size]
        return self.knots[counts.index(size if size in fit else max(fit))]


def kkt_gap(design, target, coeffs, penalty: float, standardization: Standardization | None = None,
            active=None) -> float:
    """Largest violation of the lasso stationarity conditions at ``penalty``.

    Works in the standardized space the path was traced in.  Columns listed in
    ``active`` (default: nonzero coefficients) must have correlation exactly
    ``penalty`` with matching sign; the rest must not exceed it.
    """
    st = standardization or Standardization.identity(np.shape(design)[1])
    Xs, ys = st.transform(design, target)
    b = st.to_std(coeffs)
    c = Xs.T @ (ys - Xs @ b)
    if active is None:
        active = np.flatnonzero(b != 0)
    mask = np.zeros(c.size, dtype=bool)
    mask[list(active)] = True
    gap = 0.0
    nz = mask & (b != 0)
    if nz.any():
        gap = max(gap, float(np.max(np.abs(c[nz] - penalty * np.sign(b[nz])))))
    on_zero = mask & (b == 0)
    if on_zero.any():
        gap = max(gap, float(np.max(np.abs(np.abs(c[on_zero]) - penalty))))
    if (~mask).any():
        gap = max(gap, float(np.max(np.maximum(np.abs(c[~mask]) - penalty, 0.0))))
    return gap


def lars_path(design, target, lasso: bool = True, standardize: bool = True) -> SelectionPath:
    """Full lasso-LARS path.

    With ``lasso=True`` a coefficient that hits zero leaves the active set
    (the lasso modification); ``lasso=False`` gives plain LARS, which only
    ever adds columns.
    """
    Xs, ys, st = prepare(design, target, standardize)
    T, k = Xs.shape
    rank_cap = min(k, T - 1 if standardize else T)

    b = np.zeros(k)
    c = Xs.T @ ys
    lam = float(np.max(np.abs(c))) if k else 0.0
    scale = max(lam, float(np.linalg.norm(ys)), 1.0)
    tol = 1e-12 * scale

    if lam <= tol:
        kn = Knot(0.0, (), st.to_raw(b))
        return SelectionPath((kn,), (), st, lasso)

    active: list[int] = []
    signs: list[float] = []
    entry_order: list[int] = []
    knots: list[Knot] = []

    def enter(js):
        for j in js:
            active.append(j)
            signs.append(float(np.sign(c[j])))
            if j not in entry_order:
                entry_order.append(j)

    enter([j for j in np.flatnonzero(np.abs(c) >= lam - tol)][:rank_cap])
    knots.append(Knot(lam, tuple(active), st.to_raw(b)))

    max_steps = 8 * (k + 1) + 100
    for _ in range(max_steps):
        A = np.array(active, dtype=int)
        s = np.array(signs)
        XA = Xs[:, A]
        G = XA.T @ XA
        d = np.linalg.solve(G, s)
        a = Xs.T @ (XA @ d)

        step = lam
        enters: list[int] = []
        drops: list[int] = []

        if len(active) < rank_cap:
            inactive = np.setdiff1d(np.arange(k), A)
            for j in inactive:
                for num, den in ((lam - c[j], 1.0 - a[j]), (lam + c[j], 1.0 + a[j])):
                    if den > 1e-12:
                        g = num / den
                        if g > tol:
                            if g < step - tol:
                                step, enters, drops = g, [int(j)], []
                            elif abs(g - step) <= tol and int(j) not in enters:
                                enters.append(int(j))
        if lasso:
            for pos, j in enumerate(A):
                if d[pos] != 0:
                    g = -b[j] / d[pos]
                    if g > tol:
                        if g < step - tol:
                            step, enters, drops = g, [], [int(j)]
                        elif abs(g - step) <= tol:
                            drops.append(int(j))

        if step >= lam - tol and not enters and not drops:
            b[A] += lam * d
            knots.append(Knot(0.0, tuple(active), st.to_raw(b)))
            break

        b[A] += step * d
        lam -= step
        for j in drops:
            b[j] = 0.0
            pos = active.index(j)
            del active[pos]
            del signs[pos]
        c = Xs.T @ (ys - Xs @ b)
        enter(enters[: rank_cap - len(active)])
        knots.append(Knot(lam, tuple(active), st.to_raw(b)))
        if not active:
            # everything dropped out: restart from the largest correlation
            lam = float(np.max(np.abs(c)))
            if lam <= tol:
                break
            enter([int(np.argmax(np.abs(c)))])
    else:
        raise RuntimeError("LARS did not terminate")

    return SelectionPath(tuple(knots), tuple(entry_order), st, lasso)


def path_rows(path: SelectionPath, to_weights, assets):
    """``(step, lambda, asset, weight)`` rows, one per knot and asset.

    ``to_weights`` maps a coefficient vector to a full weight vector in
    ``assets`` order (normally :func:`transform.recover_weights`).
    """
    rows = []
    for step, kn in enumerate(path.knots):
        w = to_weights(kn.coeffs)
        for name, wi in zip(assets, w):
            rows.append((step, float(kn.penalty), name, float(wi)))
    return rows
