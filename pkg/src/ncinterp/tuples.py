"""Matrix N-tuples: membership checks, shift models and nilpotent samplers.

The tuple classes used downstream:

* contractions (every component has spectral norm at most one),
* unitary tuples,
* pencil-unitary tuples (``sum zeta_k G_k`` unitary for unimodular zeta),
* jointly nilpotent tuples relative to an admissible word set.

All randomness is driven by explicit integer seeds; sub-streams are derived
with a splitmix-style mix so parallel or repeated sampling is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError, InvalidDataError
from .words import AdmissibleSet, boundary, word_key

DEFAULT_TOL = 1e-8

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 scrambling round (64-bit)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic sub-seed for trial ``index`` of a run seeded by ``seed``."""
    return splitmix64(splitmix64(seed & _MASK64) ^ ((index + 1) & _MASK64))


def spectral_norm(m) -> float:
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre sample.

    The R factor's diagonal phases are absorbed into Q, which makes the
    factorization unique and the distribution exactly Haar.
    """
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class MatrixTuple:
    """N complex square matrices of a common dimension."""

    n_vars: int
    dim: int
    mats: tuple = field(default=())

    def __post_init__(self):
        if self.n_vars < 1:
            raise InvalidDataError("n_vars must be >= 1")
        if len(self.mats) != self.n_vars:
            raise DimensionMismatchError(
                f"expected {self.n_vars} matrices, got {len(self.mats)}"
            )
        frozen = []
        for m in self.mats:
            a = np.array(m, dtype=complex)
            if a.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"matrix shape {a.shape} != ({self.dim}, {self.dim})"
                )
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "mats", tuple(frozen))

    def word(self, w) -> np.ndarray:
        """Product ``T_{i1} ... T_{im}``; the empty word gives the identity."""
        out = np.eye(self.dim, dtype=complex)
        for k in w:
            out = out @ self.mats[k - 1]
        return out

    def norms(self) -> list:
        return [spectral_norm(m) for m in self.mats]


def from_mats(mats) -> MatrixTuple:
    mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in mats]
    return MatrixTuple(len(mats), mats[0].shape[0], tuple(mats))


def zero_tuple(n_vars: int, dim: int) -> MatrixTuple:
    return MatrixTuple(n_vars, dim, tuple(np.zeros((dim, dim), complex) for _ in range(n_vars)))


def lambda_products(T: MatrixTuple, lam: AdmissibleSet) -> dict:
    """All ``T^w`` for ``w`` in the set, one matmul per word.

    Admissibility makes the last-letter deletion of every member available
    before the member itself in canonical order.
    """
    prods = {(): np.eye(T.dim, dtype=complex)}
    for w in lam.words:
        if w:
            prods[w] = prods[w[:-1]] @ T.mats[w[-1] - 1]
    return prods


def boundary_products(T: MatrixTuple, lam: AdmissibleSet, prods=None) -> dict:
    """``T^b`` for every boundary word ``b = g_k w`` with ``w`` in the set."""
    if prods is None:
        prods = lambda_products(T, lam)
    out = {}
    for b in boundary(lam):
        out[b] = T.mats[b[0] - 1] @ prods[b[1:]]
    return out


@dataclass(frozen=True)
class ClassReport:
    """Residual-based membership verdict for one tuple class."""

    class_name: str
    verdict: bool
    worst_residual: float
    detail: dict = field(default_factory=dict)


def check_contractive(T: MatrixTuple, tol: float = DEFAULT_TOL, strict: bool = False) -> ClassReport:
    """Membership in the contractive class; ``strict`` tests norms < 1 - tol."""
    norms = T.norms()
    if strict:
        residual = max((n - (1.0 - tol) for n in norms), default=0.0)
        verdict = all(n <= 1.0 - tol for n in norms)
    else:
        residual = max((n - 1.0 for n in norms), default=0.0)
        verdict = residual <= tol
    return ClassReport(
        "strict-contractions" if strict else "contractions",
        verdict,
        residual,
        {f"norm_{k + 1}": n for k, n in enumerate(norms)},
    )


def check_unitary_tuple(U: MatrixTuple, tol: float = DEFAULT_TOL) -> ClassReport:
    eye = np.eye(U.dim)
    detail = {}
    worst = 0.0
    for k, m in enumerate(U.mats):
        r1 = spectral_norm(m.conj().T @ m - eye)
        r2 = spectral_norm(m @ m.conj().T - eye)
        detail[f"left_{k + 1}"] = r1
        detail[f"right_{k + 1}"] = r2
        worst = max(worst, r1, r2)
    return ClassReport("unitary-tuple", worst <= tol, worst, detail)


def check_gn(G: MatrixTuple, tol: float = DEFAULT_TOL, n_zeta: int = 10, zeta_seed: int = 7) -> ClassReport:
    """Pencil-unitary membership via the four structure identities.

    The verdict uses the identities ``sum G_k* G_k = I``, ``G_k* G_j = 0``,
    ``sum G_k G_k* = I``, ``G_k G_j* = 0`` (k != j).  The report also
    records the worst deviation of ``sum zeta_k G_k`` from unitarity over
    random unimodular ``zeta`` as an independent diagnostic.
    """
    eye = np.eye(G.dim)
    gram_left = sum(m.conj().T @ m for m in G.mats)
    gram_right = sum(m @ m.conj().T for m in G.mats)
    detail = {
        "sum_adjoint_times": spectral_norm(gram_left - eye),
        "sum_times_adjoint": spectral_norm(gram_right - eye),
    }
    cross = 0.0
    for k, j in combinations(range(G.n_vars), 2):
        cross = max(cross, spectral_norm(G.mats[k].conj().T @ G.mats[j]))
        cross = max(cross, spectral_norm(G.mats[k] @ G.mats[j].conj().T))
    detail["cross_terms"] = cross
    worst = max(detail.values())

    rng = np.random.default_rng(zeta_seed)
    zeta_dev = 0.0
    for _ in range(n_zeta):
        zeta = np.exp(2j * np.pi * rng.uniform(size=G.n_vars))
        pencil = sum(z * m for z, m in zip(zeta, G.mats))
        zeta_dev = max(zeta_dev, spectral_norm(pencil.conj().T @ pencil - eye))
    detail["zeta_pencil"] = zeta_dev

    return ClassReport("pencil-unitary", worst <= tol, worst, detail)


def check_lambda_nilpotent(T: MatrixTuple, lam: AdmissibleSet, tol: float = DEFAULT_TOL) -> ClassReport:
    """Joint nilpotency relative to ``lam`` via the finite boundary certificate."""
    if lam.n_vars != T.n_vars:
        raise DimensionMismatchError("tuple and word set disagree on n_vars")
    detail = {}
    worst = 0.0
    for b, m in boundary_products(T, lam).items():
        r = spectral_norm(m)
        detail[".".join(map(str, b))] = r
        worst = max(worst, r)
    return ClassReport("jointly-nilpotent", worst <= tol, worst, detail)


# ---------------------------------------------------------------------------
# shift models on the word basis
# ---------------------------------------------------------------------------

def shift_basis(lam: AdmissibleSet) -> list:
    """Basis order for the shift space: longest words first, then lexicographic.

    With this order the one-variable shift is exactly the lower-triangular
    matrix with ones on the first subdiagonal.
    """
    return sorted(lam.words, key=lambda w: (-len(w), w))


def shift_arrows(lam: AdmissibleSet) -> list:
    """Triples ``(k, u, v)`` with ``v = u . g_k`` inside the set.

    The letter-``k`` shift removes the last letter: it maps the basis
    vector of ``v`` onto the basis vector of ``u``.  Any word outside the
    set then annihilates the model because outside words stay outside
    under left multiplication.
    """
    inside = set(lam.words)
    return [
        (v[-1], v[:-1], v)
        for v in lam.words
        if v and v[:-1] in inside
    ]


def shift_tuple(lam: AdmissibleSet) -> MatrixTuple:
    """Backward-shift tuple on the word basis of the set."""
    if len(lam) == 0:
        raise InvalidDataError("shift tuple needs a non-empty admissible set")
    return weighted_shift_tuple(lam, None)


def weighted_shift_tuple(lam: AdmissibleSet, weights=None) -> MatrixTuple:
    """Backward shifts with per-arrow weights (``None`` means all ones)."""
    basis = shift_basis(lam)
    pos = {w: i for i, w in enumerate(basis)}
    n = len(basis)
    mats = [np.zeros((n, n), dtype=complex) for _ in range(lam.n_vars)]
    for i, (k, u, v) in enumerate(shift_arrows(lam)):
        wt = 1.0 if weights is None else weights[i]
        mats[k - 1][pos[u], pos[v]] = wt
    return MatrixTuple(lam.n_vars, n, tuple(mats))


def collapsed_shift(lam: AdmissibleSet, classes, weights=None):
    """Shift model on merged basis words; ``None`` when not jointly nilpotent.

    ``classes`` partitions a subset of the word set; each class becomes one
    basis vector and every shift arrow between kept words becomes an entry
    between the classes.  Merging can create products that no longer vanish
    outside the set, so the boundary certificate is re-checked structurally:
    with the (positive) construction weights no cancellation can occur, so
    an exactly zero residual proves that every support chain is absent and
    the pattern stays valid under any support-preserving reweighting.
    """
    classes = [frozenset(c) for c in classes]
    order = sorted(
        range(len(classes)),
        key=lambda i: (-max(len(w) for w in classes[i]), min(classes[i], key=word_key)),
    )
    classes = [classes[i] for i in order]
    pos = {}
    for ci, cl in enumerate(classes):
        for w in cl:
            if w in pos:
                raise InvalidDataError("classes must be disjoint")
            pos[w] = ci
    n = len(classes)
    mats = [np.zeros((n, n), dtype=complex) for _ in range(lam.n_vars)]
    idx = 0
    for k, u, v in shift_arrows(lam):
        if u in pos and v in pos:
            wt = 1.0 if weights is None else weights[idx]
            mats[k - 1][pos[u], pos[v]] += wt
        idx += 1
    T = MatrixTuple(lam.n_vars, n, tuple(mats))
    for m in boundary_products(T, lam).values():
        if np.any(m != 0):
            return None
    return T


def merge_candidates(lam: AdmissibleSet, cap: int = 256) -> list:
    """Deterministic degenerations of the shift basis worth probing.

    Each candidate merges one pair of equal-length words and drops a small
    subset of longer words; candidates that fail the nilpotency certificate
    are filtered out by ``collapsed_shift``.
    """
    words = list(lam.words)
    out = []
    pairs = [
        (u, v)
        for i, u in enumerate(words)
        for v in words[i + 1:]
        if len(u) == len(v) >= 1
    ]
    for u, v in pairs:
        longer = [w for w in words if len(w) > len(u)]
        drops = [()]
        drops += [(w,) for w in longer]
        if len(longer) <= 6:
            drops += list(combinations(longer, 2))
        containing = tuple(w for w in longer if _has_factor(w, u) or _has_factor(w, v))
        for extra in (containing, tuple(longer)):
            if extra and extra not in drops:
                drops.append(extra)
        for drop in drops:
            kept = [w for w in words if w not in drop and w not in (u, v)]
            if () not in kept:
                continue
            classes = [frozenset({w}) for w in kept] + [frozenset({u, v})]
            out.append(tuple(classes))
            if len(out) >= cap:
                return out
    return out


def _has_factor(w, u) -> bool:
    if not u:
        return True
    return any(w[i:i + len(u)] == u for i in range(len(w) - len(u) + 1))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleParams:
    """Knobs for ``sample_nilpotent``.

    With ``unit_weights=True`` and everything else off the sampler returns
    the plain shift tuple.
    """

    unit_weights: bool = False
    merge_prob: float = 0.45
    conjugate: bool = True
    direct_sum_prob: float = 0.15
    min_weight: float = 0.15
    max_dim: int | None = None


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & _MASK64)


def _draw_weights(rng, count, params):
    if params.unit_weights:
        return np.ones(count)
    return rng.uniform(params.min_weight, 1.0, size=count)


def _random_classes(lam: AdmissibleSet, rng) -> list:
    words = list(lam.words)
    by_len = {}
    for w in words:
        if w:
            by_len.setdefault(len(w), []).append(w)
    mergeable = [ws for ws in by_len.values() if len(ws) >= 2]
    merged = []
    used = set()
    if mergeable:
        group = mergeable[rng.integers(0, len(mergeable))]
        i, j = rng.choice(len(group), size=2, replace=False)
        merged.append(frozenset({group[i], group[j]}))
        used = {group[i], group[j]}
    rest = [w for w in words if w not in used]
    keep = [w for w in rest if not w or rng.uniform() > 0.3]
    return [frozenset({w}) for w in keep] + merged


def _rescaled(T: MatrixTuple) -> MatrixTuple:
    mats = [m / max(1.0, spectral_norm(m)) for m in T.mats]
    return MatrixTuple(T.n_vars, T.dim, tuple(mats))


def direct_sum(X: MatrixTuple, Y: MatrixTuple) -> MatrixTuple:
    if X.n_vars != Y.n_vars:
        raise DimensionMismatchError("direct sum needs equal n_vars")
    n = X.dim + Y.dim
    mats = []
    for a, b in zip(X.mats, Y.mats):
        m = np.zeros((n, n), dtype=complex)
        m[: X.dim, : X.dim] = a
        m[X.dim:, X.dim:] = b
        mats.append(m)
    return MatrixTuple(X.n_vars, n, tuple(mats))


def conjugate_tuple(T: MatrixTuple, U: np.ndarray) -> MatrixTuple:
    Uh = U.conj().T
    return MatrixTuple(T.n_vars, T.dim, tuple(U @ m @ Uh for m in T.mats))


def _one_nilpotent(lam: AdmissibleSet, rng, params: SampleParams) -> MatrixTuple:
    n_arrows = len(shift_arrows(lam))
    if len(lam) >= 3 and not params.unit_weights and rng.uniform() < params.merge_prob:
        for _ in range(6):
            classes = _random_classes(lam, rng)
            T = collapsed_shift(lam, classes, _draw_weights(rng, n_arrows, params))
            if T is not None and T.dim > 0:
                return _rescaled(T)
    weights = None if params.unit_weights else _draw_weights(rng, n_arrows, params)
    return _rescaled(weighted_shift_tuple(lam, weights))


def sample_nilpotent(lam: AdmissibleSet, seed: int, params: SampleParams | None = None) -> MatrixTuple:
    """Random contractive jointly nilpotent tuple for the given word set.

    The family consists of weighted backward shifts and their merged-basis
    degenerations, optionally direct-summed with a second sample and
    conjugated by a Haar unitary.  Every output is rescaled to the
    contractive class and passes the nilpotency certificate.
    """
    params = params or SampleParams()
    if len(lam) <= 1:
        return zero_tuple(lam.n_vars, max(1, len(lam)))
    rng = _rng(seed)
    T = _one_nilpotent(lam, rng, params)
    cap = params.max_dim if params.max_dim is not None else len(lam)
    if rng.uniform() < params.direct_sum_prob:
        other = _one_nilpotent(lam, rng, params)
        if T.dim + other.dim <= max(cap, T.dim):
            T = direct_sum(T, other)
    if params.conjugate:
        T = conjugate_tuple(T, haar_unitary(T.dim, rng))
    return T


def block_triangular_nilpotent(m: int, block_dims, n_vars: int, seed: int) -> MatrixTuple:
    """Random strictly lower block-triangular tuple, rescaled to contractions.

    Such tuples are exactly the ones annihilating every word of length
    greater than ``m`` (up to unitary similarity).
    """
    block_dims = list(block_dims)
    if len(block_dims) != m + 1:
        raise InvalidDataError("block_dims must have m + 1 entries")
    if any(d < 1 for d in block_dims):
        raise InvalidDataError("block dimensions must be positive")
    rng = _rng(seed)
    n = sum(block_dims)
    offs = np.cumsum([0] + block_dims)
    mats = []
    for _ in range(n_vars):
        a = np.zeros((n, n), dtype=complex)
        for i in range(1, m + 1):
            for j in range(i):
                blk = rng.standard_normal((block_dims[i], block_dims[j])) \
                    + 1j * rng.standard_normal((block_dims[i], block_dims[j]))
                a[offs[i]: offs[i + 1], offs[j]: offs[j + 1]] = blk
        mats.append(a / max(1.0, spectral_norm(a)))
    return MatrixTuple(n_vars, n, tuple(mats))


def random_gn(dim: int, n_vars: int, seed: int) -> MatrixTuple:
    """Random pencil-unitary tuple ``G_k = G0 P_k``.

    ``G0`` is Haar unitary and the ``P_k`` are coordinate projections of a
    randomly permuted basis split into ``n_vars`` groups (all non-empty
    when ``dim >= n_vars``).
    """
    rng = _rng(seed)
    g0 = haar_unitary(dim, rng)
    perm = rng.permutation(dim)
    if dim >= n_vars:
        cuts = np.sort(rng.choice(np.arange(1, dim), size=n_vars - 1, replace=False))
        groups = np.split(perm, cuts)
    else:
        labels = rng.integers(0, n_vars, size=dim)
        groups = [perm[labels == k] for k in range(n_vars)]
    mats = []
    for grp in groups:
        mask = np.zeros(dim)
        mask[grp] = 1.0
        mats.append(g0 * mask)  # zero out the columns outside the group
    return MatrixTuple(n_vars, dim, tuple(mats))


def random_unitary_tuple(dim: int, n_vars: int, seed: int) -> MatrixTuple:
    rng = _rng(seed)
    return MatrixTuple(n_vars, dim, tuple(haar_unitary(dim, rng) for _ in range(n_vars)))


def schur_tensor(X: MatrixTuple, Y: MatrixTuple) -> MatrixTuple:
    """Componentwise Kronecker product ``(X_1 (x) Y_1, ..., X_N (x) Y_N)``."""
    if X.n_vars != Y.n_vars:
        raise DimensionMismatchError("schur tensor needs equal n_vars")
    return MatrixTuple(
        X.n_vars, X.dim * Y.dim, tuple(np.kron(a, b) for a, b in zip(X.mats, Y.mats))
    )


def tensor_pencil(X: MatrixTuple, Y: MatrixTuple) -> np.ndarray:
    """``sum_k X_k (x) Y_k``."""
    if X.n_vars != Y.n_vars:
        raise DimensionMismatchError("tensor pencil needs equal n_vars")
    return sum(np.kron(a, b) for a, b in zip(X.mats, Y.mats))
