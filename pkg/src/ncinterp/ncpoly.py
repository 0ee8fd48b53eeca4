"""Truncated non-commutative power series with matrix coefficients.

Series are maps from words to ``out_dim x in_dim`` complex matrices with an
explicit truncation order.  Products, inverses and Cayley transforms are
exact through the order; evaluation on a jointly nilpotent tuple is exact
full stop, because the tuple kills every word long enough to be truncated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidDataError,
    ResourceCapError,
    SingularSeriesError,
)
from .tuples import MatrixTuple, shift_basis, shift_tuple
from .words import AdmissibleSet, check_letters, word_key, word_to_str

#: guard for matrix inverses inside series arithmetic
DEFAULT_COND_CAP = 1e12

#: guard for evaluation output size (rows times columns of the result)
DEFAULT_EVAL_DIM_CAP = 4096

#: tolerance used when validating stored hermitian data
HERM_TOL = 1e-12


@dataclass(frozen=True)
class NcPoly:
    """Truncated series: word -> coefficient, absent word means zero."""

    n_vars: int
    out_dim: int
    in_dim: int
    order: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_vars < 1 or self.order < 0:
            raise InvalidDataError("need n_vars >= 1 and order >= 0")
        clean = {}
        for w, c in self.coeffs.items():
            w = tuple(w)
            if len(w) > self.order:
                raise InvalidDataError(
                    f"coefficient word {word_to_str(w)!r} exceeds order {self.order}"
                )
            if not check_letters(w, self.n_vars):
                raise InvalidDataError(
                    f"coefficient word {word_to_str(w)!r} has letters outside 1..{self.n_vars}"
                )
            a = np.atleast_2d(np.array(c, dtype=complex))
            if a.shape != (self.out_dim, self.in_dim):
                raise DimensionMismatchError(
                    f"coefficient at {word_to_str(w)!r} has shape {a.shape}, "
                    f"expected ({self.out_dim}, {self.in_dim})"
                )
            if np.any(a != 0):  # store nonzero coefficients only
                a.setflags(write=False)
                clean[w] = a
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, w) -> np.ndarray:
        return self.coeffs.get(tuple(w), np.zeros((self.out_dim, self.in_dim), complex))

    def words(self) -> list:
        return sorted(self.coeffs, key=word_key)

    @property
    def is_square(self) -> bool:
        return self.out_dim == self.in_dim


def identity_series(n_vars: int, dim: int, order: int) -> NcPoly:
    return NcPoly(n_vars, dim, dim, order, {(): np.eye(dim)})


def constant(mat, n_vars: int, order: int = 0) -> NcPoly:
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    return NcPoly(n_vars, mat.shape[0], mat.shape[1], order, {(): mat})


def add(a: NcPoly, b: NcPoly) -> NcPoly:
    if (a.n_vars, a.out_dim, a.in_dim) != (b.n_vars, b.out_dim, b.in_dim):
        raise DimensionMismatchError("series addition needs matching shapes")
    order = max(a.order, b.order)
    coeffs = {w: c.copy() for w, c in a.coeffs.items()}
    for w, c in b.coeffs.items():
        coeffs[w] = coeffs.get(w, 0) + c
    return NcPoly(a.n_vars, a.out_dim, a.in_dim, order, coeffs)


def scale(a: NcPoly, alpha) -> NcPoly:
    return NcPoly(
        a.n_vars, a.out_dim, a.in_dim, a.order,
        {w: alpha * c for w, c in a.coeffs.items()},
    )


def truncate(a: NcPoly, order: int) -> NcPoly:
    return NcPoly(
        a.n_vars, a.out_dim, a.in_dim, order,
        {w: c for w, c in a.coeffs.items() if len(w) <= order},
    )


def multiply(a: NcPoly, b: NcPoly, order: int) -> NcPoly:
    """Truncated product: ``(ab)_w = sum over splittings w = uv of a_u b_v``."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatchError("series product needs equal n_vars")
    if a.in_dim != b.out_dim:
        raise DimensionMismatchError(
            f"inner dimensions {a.in_dim} and {b.out_dim} do not match"
        )
    coeffs = {}
    for u, cu in a.coeffs.items():
        for v, cv in b.coeffs.items():
            w = u + v
            if len(w) > order:
                continue
            term = cu @ cv
            if w in coeffs:
                coeffs[w] = coeffs[w] + term
            else:
                coeffs[w] = term
    return NcPoly(a.n_vars, a.out_dim, b.in_dim, order, coeffs)


def _guarded_inv(m, cond_cap, what):
    m = np.atleast_2d(m)
    if m.size == 0 or not np.all(np.isfinite(m)):
        raise SingularSeriesError(f"{what} is not invertible")
    if np.linalg.cond(m) > cond_cap:
        raise SingularSeriesError(
            f"{what} has condition number above {cond_cap:.1e}"
        )
    return np.linalg.inv(m)


def _all_words(n_vars, order, cap=500_000):
    total = sum(n_vars ** L for L in range(order + 1))
    if total > cap:
        raise ResourceCapError(
            f"inverse support would need {total} words (cap {cap}); lower the order"
        )
    for L in range(order + 1):
        yield from product(range(1, n_vars + 1), repeat=L)


def invert(f: NcPoly, order: int, cond_cap: float = DEFAULT_COND_CAP) -> NcPoly:
    """Series inverse through ``order``; needs an invertible constant term.

    Coefficients are produced by the convolution recursion
    ``phi_w = -f_empty^{-1} sum_{w = uv, u != empty} f_u phi_v``,
    which matches the geometric-series expansion around the constant term.
    """
    if not f.is_square:
        raise DimensionMismatchError("only square-coefficient series can be inverted")
    f0_inv = _guarded_inv(f.coeff(()), cond_cap, "constant term")
    nonconst = {w: c for w, c in f.coeffs.items() if w}
    coeffs = {(): f0_inv}
    for w in _all_words(f.n_vars, order):
        if not w:
            continue
        acc = None
        for u, cu in nonconst.items():
            if len(u) <= len(w) and w[: len(u)] == u:
                v = w[len(u):]
                cv = coeffs.get(v)
                if cv is not None:
                    term = cu @ cv
                    acc = term if acc is None else acc + term
        if acc is not None:
            coeffs[w] = -f0_inv @ acc
    return NcPoly(f.n_vars, f.out_dim, f.in_dim, order, coeffs)


def cayley_h_to_s(f: NcPoly, order: int, cond_cap: float = DEFAULT_COND_CAP) -> NcPoly:
    """``F = (f - I)(f + I)^{-1}``, the positive-real-part to contractive map."""
    if not f.is_square:
        raise DimensionMismatchError("cayley transform needs square coefficients")
    eye = identity_series(f.n_vars, f.out_dim, order)
    ft = truncate(f, min(order, f.order))
    return multiply(add(ft, scale(eye, -1.0)), invert(add(ft, eye), order, cond_cap), order)


def cayley_s_to_h(F: NcPoly, order: int, cond_cap: float = DEFAULT_COND_CAP) -> NcPoly:
    """``h = (I + F)(I - F)^{-1}``, inverse direction of the Cayley map."""
    if not F.is_square:
        raise DimensionMismatchError("cayley transform needs square coefficients")
    eye = identity_series(F.n_vars, F.out_dim, order)
    Ft = truncate(F, min(order, F.order))
    return multiply(add(eye, Ft), invert(add(eye, scale(Ft, -1.0)), order, cond_cap), order)


# ---------------------------------------------------------------------------
# evaluation on matrix tuples
# ---------------------------------------------------------------------------

def _word_products(T: MatrixTuple, words) -> dict:
    prods = {(): np.eye(T.dim, dtype=complex)}

    def get(w):
        m = prods.get(w)
        if m is None:
            m = get(w[:-1]) @ T.mats[w[-1] - 1]
            prods[w] = m
        return m

    for w in words:
        get(w)
    return prods


def _check_eval(p: NcPoly, T: MatrixTuple, dim_cap):
    if p.n_vars != T.n_vars:
        raise DimensionMismatchError("series and tuple disagree on n_vars")
    if p.out_dim * T.dim * p.in_dim * T.dim > dim_cap * dim_cap:
        raise ResourceCapError(
            f"evaluation result {p.out_dim * T.dim} x {p.in_dim * T.dim} "
            f"exceeds the {dim_cap} cap"
        )


def eval_right(p: NcPoly, T: MatrixTuple, dim_cap: int = DEFAULT_EVAL_DIM_CAP) -> np.ndarray:
    """``sum_w p_w (x) T^w`` with ``T^empty = I``; exact finite sum."""
    _check_eval(p, T, dim_cap)
    prods = _word_products(T, p.coeffs)
    out = np.zeros((p.out_dim * T.dim, p.in_dim * T.dim), dtype=complex)
    for w, c in p.coeffs.items():
        out += np.kron(c, prods[w])
    return out


def eval_left(p: NcPoly, T: MatrixTuple, dim_cap: int = DEFAULT_EVAL_DIM_CAP) -> np.ndarray:
    """``sum_w T^w (x) p_w``, the powers-on-the-left evaluation."""
    _check_eval(p, T, dim_cap)
    prods = _word_products(T, p.coeffs)
    out = np.zeros((p.out_dim * T.dim, p.in_dim * T.dim), dtype=complex)
    for w, c in p.coeffs.items():
        out += np.kron(prods[w], c)
    return out


# ---------------------------------------------------------------------------
# hermitian data: analytic half of a selfadjoint-valued polynomial
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianData:
    """Coefficients ``{c_w}`` on an admissible set with selfadjoint ``c_empty``.

    The starred half is implicit: evaluations insert ``c_w* (x) (T^w)*``
    for every non-empty word, so only analytic coefficients are stored.
    """

    n_vars: int
    dim: int
    lam: AdmissibleSet
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam.n_vars != self.n_vars:
            raise InvalidDataError("word set and data disagree on n_vars")
        clean = {}
        for w, c in self.coeffs.items():
            w = tuple(w)
            if w not in self.lam:
                raise InvalidDataError(
                    f"coefficient word {word_to_str(w)!r} is outside the index set"
                )
            a = np.atleast_2d(np.array(c, dtype=complex))
            if a.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"coefficient at {word_to_str(w)!r} has shape {a.shape}, "
                    f"expected ({self.dim}, {self.dim})"
                )
            a.setflags(write=False)
            clean[w] = a
        c0 = clean.get((), np.zeros((self.dim, self.dim), complex))
        if np.max(np.abs(c0 - c0.conj().T)) > HERM_TOL:
            raise InvalidDataError("constant coefficient must be selfadjoint")
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, w) -> np.ndarray:
        return self.coeffs.get(tuple(w), np.zeros((self.dim, self.dim), complex))

    def analytic_poly(self) -> NcPoly:
        """``c_empty / 2 + sum_{w != empty} c_w z^w`` as a truncated series."""
        coeffs = {w: (0.5 * c if not w else c) for w, c in self.coeffs.items()}
        return NcPoly(self.n_vars, self.dim, self.dim, max(self.lam.max_len, 0), coeffs)


def herm_eval(data: HermitianData, T: MatrixTuple, prods: dict | None = None,
              dim_cap: int = DEFAULT_EVAL_DIM_CAP) -> np.ndarray:
    """Selfadjoint evaluation ``c_empty (x) I + sum (c_w (x) T^w + h.c.)``.

    Equals ``2 Re eval_right(p, T)`` for the analytic polynomial ``p``.
    """
    if data.n_vars != T.n_vars:
        raise DimensionMismatchError("data and tuple disagree on n_vars")
    if data.dim * T.dim > dim_cap:
        raise ResourceCapError(
            f"evaluation dimension {data.dim * T.dim} exceeds the {dim_cap} cap"
        )
    if prods is None:
        prods = _word_products(T, data.coeffs)
    n = T.dim
    if data.dim == 1:
        out = complex(data.coeff(())[0, 0]) * np.eye(n, dtype=complex)
        for w, c in data.coeffs.items():
            if w:
                x = complex(c[0, 0]) * prods[w]
                out += x + x.conj().T
        return out
    out = np.kron(data.coeff(()), np.eye(n))
    for w, c in data.coeffs.items():
        if w:
            x = np.kron(c, prods[w])
            out += x + x.conj().T
    return out


def extract_coefficients(evaluate, lam: AdmissibleSet, out_dim: int, in_dim: int) -> dict:
    """Recover the coefficients of an unknown polynomial supported on ``lam``.

    ``evaluate`` must implement right evaluation of the polynomial on any
    matrix tuple.  Probing the backward shift scaled by ``m + 1`` points on
    a circle separates the homogeneous parts (an inverse-DFT solve of the
    Vandermonde system); each coefficient is then read off the shift's
    matrix entries that connect a word's basis vector to the empty word.
    """
    from .tuples import shift_basis, shift_tuple  # local import avoids cycles at startup

    S = shift_tuple(lam)
    n = S.dim
    m = lam.max_len
    radius = 0.9
    count = m + 1
    omega = np.exp(2j * np.pi / count)
    evals = []
    for j in range(count):
        lam_j = radius * omega ** j
        scaled = MatrixTuple(S.n_vars, n, tuple(lam_j * a for a in S.mats))
        E = np.asarray(evaluate(scaled), dtype=complex)
        if E.shape != (out_dim * n, in_dim * n):
            raise DimensionMismatchError(
                f"callback returned shape {E.shape}, expected {(out_dim * n, in_dim * n)}"
            )
        evals.append(E)
    basis = shift_basis(lam)
    pos = {w: i for i, w in enumerate(basis)}
    row_zero = pos[()]
    out = {}
    for k in range(count):
        # inverse DFT at the scaled nodes gives the degree-k homogeneous part
        Rk = sum(omega ** (-j * k) * evals[j] for j in range(count))
        Rk /= count * radius ** k
        rows = np.arange(out_dim) * n + row_zero
        for v in lam.words:
            if len(v) != k:
                continue
            cols = np.arange(in_dim) * n + pos[v]
            out[v] = Rk[np.ix_(rows, cols)]
    return out
