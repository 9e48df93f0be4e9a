"""Functional calculus for tuples of commuting tensor lifts.

A tuple of square factors X_1..X_r is lifted to X~_j = I x..x X_j x..x I on
the tensor space; lifted factors always commute, so f(X~_1,..,X~_r) is well
defined for analytic f.  Three independent routes compute it:

* func_multivariate: the spectral assembly
    sum over eigenvalue tuples and multi-indices alpha of
    d^alpha f(lambda) / alpha! * kron_j N_j^{alpha_j} P_j,
  with the terms ledgered and split into s0 (alpha = 0), s_mixed
  (partial support) and s_full (full support) parts;
* dunford_multivariate: iterated contour quadrature of
  f(z_1..z_r) kron_j (z_j I - X_j)^{-1};
* power_series_apply: a truncated lifted Taylor series about a factor-wise
  center, with a certified tail bound.

Agreement of the three routes on the same system is the package's strongest
internal consistency check.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionCapError,
    PreconditionError,
    QuadratureError,
    TailBoundError,
    ToleranceError,
)
from .functions import AnalyticFunction, taylor_coefficients
from .linalg import KRON_CAP, as_matrix, eig, eye_like, op_norm, resolvent_at_nodes
from .spectra import Contour, Decomposition, decompose

_COMMUTATOR_TOL = 1e-12
_DOUBLING_TOL = 1e-10
NODE_BUDGET = 300_000
TAIL_TOL = 1e-12
_MAX_SERIES_CAP = 64


@dataclass
class LiftedSystem:
    """Factors, their explicit lifts, and per-factor spectral decompositions."""
    factors: list[np.ndarray]
    lifted: list[np.ndarray]
    decompositions: list[Decomposition]
    tensor_dim: int

    @property
    def rank(self) -> int:
        return len(self.factors)


@dataclass
class LedgerEntry:
    eigenvalues: tuple[complex, ...]
    alpha: tuple[int, ...]
    norm: float


@dataclass
class CalculusResult:
    value: np.ndarray
    s0: np.ndarray
    s_mixed: np.ndarray
    s_full: np.ndarray
    term_ledger: list[LedgerEntry] = field(default_factory=list)
    method: str = ""


def three_term_split(result: CalculusResult):
    """(s0, s_mixed, s_full) with value = s0 + s_mixed + s_full."""
    return result.s0, result.s_mixed, result.s_full


def lift(factors, cap: int = KRON_CAP, cluster_tol: float | None = None,
         tol_dec: float | None = None, tol_nil: float | None = None,
         nodes: int = 128) -> LiftedSystem:
    """Materialize the lifts of `factors` and decompose each factor.

    The lifted matrices are assembled explicitly (desk scale); pairwise
    commutation is verified on seeded probe vectors,
    ||[L_i, L_j] v|| <= 1e-12 ||L_i|| ||L_j|| ||v||, which catches mis-built
    lifts at matvec cost instead of a tensor-space matmul + norm per pair.
    Tensor dimension is capped at `cap`.
    """
    mats = [as_matrix(x, square=True) for x in factors]
    if not mats:
        raise ConfigError("lift needs at least one factor")
    dims = [m.shape[0] for m in mats]
    tensor_dim = 1
    for d in dims:
        tensor_dim *= d
    if tensor_dim > cap:
        raise DimensionCapError(
            f"tensor dimension {tensor_dim} exceeds the cap {cap}")

    lifted = []
    for j, m in enumerate(mats):
        left = int(np.prod(dims[:j], dtype=int)) if j else 1
        right = int(np.prod(dims[j + 1:], dtype=int)) if j + 1 < len(dims) else 1
        lifted.append(np.kron(np.kron(eye_like(left), m), eye_like(right)))

    # ||I ox X ox I|| = ||X||, so factor norms price the commutator bound
    norms = [op_norm(m) for m in mats]
    rng = np.random.default_rng(0)
    v = rng.normal(size=(tensor_dim, 4)) + 1j * rng.normal(size=(tensor_dim, 4))
    v /= np.linalg.norm(v, axis=0)
    for i in range(len(lifted)):
        for j in range(i + 1, len(lifted)):
            comm = float(np.max(np.linalg.norm(
                lifted[i] @ (lifted[j] @ v) - lifted[j] @ (lifted[i] @ v), axis=0)))
            bound = _COMMUTATOR_TOL * max(norms[i] * norms[j], 1e-300)
            if comm > bound:
                raise ToleranceError(
                    f"lifted factors {i} and {j} fail to commute: {comm:.3e} > {bound:.3e}")

    dec_kwargs = {}
    if cluster_tol is not None:
        dec_kwargs["cluster_tol"] = cluster_tol
    if tol_dec is not None:
        dec_kwargs["tol_dec"] = tol_dec
    if tol_nil is not None:
        dec_kwargs["tol_nil"] = tol_nil
    decs = [decompose(m, nodes=nodes, **dec_kwargs) for m in mats]
    return LiftedSystem(mats, lifted, decs, tensor_dim)


# ---------------------------------------------------------------------------
# spectral assembly


def _component_terms(dec: Decomposition):
    """Flatten one factor's components into (lam, q, basis, norm) term lists.

    basis is P for q = 0 and N^q for q >= 1 (N^q P = N^q on the component).
    """
    lams, qs, mats, norms = [], [], [], []
    for c in dec.components:
        for q in range(c.index):
            b = c.projector if q == 0 else np.linalg.matrix_power(c.nilpotent, q)
            lams.append(c.eigenvalue)
            qs.append(q)
            mats.append(b)
            norms.append(op_norm(b))
    return (np.array(lams), np.array(qs, dtype=int),
            np.stack(mats), np.array(norms))


def _coefficient_tensor(f: AnalyticFunction, lams, qs):
    """C[t_1..t_r] = d^alpha f(lambda) / alpha! over flattened factor terms."""
    r = len(lams)
    shape = tuple(len(x) for x in lams)
    c = np.zeros(shape, dtype=complex)
    max_q = [int(np.max(q)) for q in qs]
    # one closed-form derivative evaluation per distinct alpha, vectorized
    # over the eigenvalue grid
    for alpha in np.ndindex(*(m + 1 for m in max_q)):
        masks = [qs[j] == alpha[j] for j in range(r)]
        if not all(m.any() for m in masks):
            continue
        fn = f
        fact = 1.0
        for j, q in enumerate(alpha):
            for _ in range(q):
                fn = fn.partial(j)
            for k in range(2, q + 1):
                fact *= k
        sub = [lams[j][masks[j]] for j in range(r)]
        grid = np.meshgrid(*sub, indexing="ij")
        vals = np.asarray(fn(*grid), dtype=complex) / fact
        c[np.ix_(*masks)] = vals
    return c


def _kron_fold(coeffs: np.ndarray, stacks: list[np.ndarray]) -> np.ndarray:
    """sum over tuples t of coeffs[t] * kron(stacks[0][t0], stacks[1][t1], ...)."""
    if len(stacks) == 1:
        return np.tensordot(coeffs, stacks[0], axes=([0], [0]))
    s = stacks[0]
    t, d = s.shape[0], s.shape[1]
    if len(stacks) == 2:
        inner = np.tensordot(coeffs, stacks[1], axes=([1], [0]))
    else:
        inner = np.stack([_kron_fold(coeffs[i], stacks[1:]) for i in range(t)])
    dr = inner.shape[1]
    m = s.reshape(t, d * d).T @ inner.reshape(t, dr * dr)
    return np.ascontiguousarray(
        m.reshape(d, d, dr, dr).transpose(0, 2, 1, 3)).reshape(d * dr, d * dr)


def _masked_fold(coeffs, stacks, masks, tensor_dim):
    sel = coeffs[np.ix_(*masks)]
    if sel.size == 0 or not np.any(sel):
        return np.zeros((tensor_dim, tensor_dim), dtype=complex)
    return _kron_fold(sel, [s[m] for s, m in zip(stacks, masks)])


def func_univariate(f: AnalyticFunction, dec: Decomposition) -> CalculusResult:
    """f(X) = sum_k [f(lambda_k) P_k + sum_q f^(q)(lambda_k)/q! N_k^q]."""
    if f.arity != 1:
        raise ConfigError(f"func_univariate needs arity 1, got {f.arity}")
    system = LiftedSystem([np.zeros((dec.dim, dec.dim), dtype=complex)], [], [dec], dec.dim)
    return _assemble(f, system, "func_univariate")


def func_multivariate(f: AnalyticFunction, system: LiftedSystem) -> CalculusResult:
    """Spectral assembly of f(X~_1,..,X~_r) with term ledger and 3-way split."""
    if f.arity != system.rank:
        raise ConfigError(
            f"function arity {f.arity} does not match system rank {system.rank}")
    return _assemble(f, system, "func_multivariate")


def _assemble(f, system: LiftedSystem, method: str) -> CalculusResult:
    terms = [_component_terms(dec) for dec in system.decompositions]
    lams = [t[0] for t in terms]
    qs = [t[1] for t in terms]
    stacks = [t[2] for t in terms]
    norms = [t[3] for t in terms]
    coeffs = _coefficient_tensor(f, lams, qs)
    dim = system.tensor_dim

    zero = [q == 0 for q in qs]
    pos = [~z for z in zero]
    every = [np.ones_like(z, dtype=bool) for z in zero]

    s0 = _masked_fold(coeffs, stacks, zero, dim)
    s_full = (_masked_fold(coeffs, stacks, pos, dim)
              if len(stacks) >= 1 else np.zeros_like(s0))
    if len(stacks) == 1:
        s_mixed = np.zeros_like(s0)
    else:
        interior = coeffs.copy()
        interior[np.ix_(*zero)] = 0.0
        interior[np.ix_(*pos)] = 0.0
        s_mixed = _masked_fold(interior, stacks, every, dim)
    value = s0 + s_mixed + s_full

    mag = np.abs(coeffs)
    for n in norms:
        mag = mag * n.reshape((-1,) + (1,) * (mag.ndim - 1))
        mag = np.moveaxis(mag, 0, -1)
    ledger = []
    for t in np.ndindex(coeffs.shape):
        ledger.append(LedgerEntry(
            tuple(complex(lams[j][t[j]]) for j in range(len(stacks))),
            tuple(int(qs[j][t[j]]) for j in range(len(stacks))),
            float(mag[t])))
    return CalculusResult(value, s0, s_mixed, s_full, ledger, method)


def write_term_ledger(path, result: CalculusResult) -> None:
    """CSV export of the term ledger: eigenvalue tuple, alpha, contribution norm."""
    if not result.term_ledger:
        raise ConfigError("result has no term ledger")
    r = len(result.term_ledger[0].alpha)
    header = ([f"lambda_{j + 1}_re" for j in range(r)]
              + [f"lambda_{j + 1}_im" for j in range(r)]
              + [f"alpha_{j + 1}" for j in range(r)] + ["contribution_norm"])
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for e in result.term_ledger:
            row = ([repr(l.real) for l in e.eigenvalues]
                   + [repr(l.imag) for l in e.eigenvalues]
                   + [str(a) for a in e.alpha] + [repr(e.norm)])
            w.writerow(row)


# ---------------------------------------------------------------------------
# contour quadrature


def _screen_contour(contour: Contour, values, require_full: bool, label: str):
    dist = contour.circle_distance(values)
    if dist.size and float(np.min(dist)) < 0.05 * contour.radius:
        raise PreconditionError(
            f"{label}: eigenvalue within 0.05*radius of the quadrature circle")
    if require_full and not np.all(contour.encloses(values)):
        raise PreconditionError(
            f"{label}: contour must enclose the whole spectrum "
            f"(an eigenvalue lies outside)")


def dunford(f: AnalyticFunction, x, contour: Contour, nodes: int | None = None,
            require_full: bool = True, verify: bool = False) -> np.ndarray:
    """(1/2pi i) contour integral of f(z) (zI - x)^{-1} dz.

    With `require_full` the contour must enclose the whole spectrum, giving
    f(x); without it the integral restricts f to the enclosed cluster.
    `verify` doubles the node count and demands 1e-10 relative agreement.
    """
    if f.arity != 1:
        raise ConfigError(f"dunford needs a univariate function, got arity {f.arity}")
    x = as_matrix(x, square=True)
    values = eig(x).eigenvalues
    _screen_contour(contour, values, require_full, "dunford")
    f.assert_analytic_on([contour.center], [contour.radius])

    def run(m):
        zs = contour.points(m)
        rs = resolvent_at_nodes(x, zs)
        w = contour.weights(m) * np.asarray(f(zs), dtype=complex)
        return np.tensordot(w, rs, axes=1)

    value = run(nodes or contour.nodes)
    if verify:
        fine = run(2 * (nodes or contour.nodes))
        gap = op_norm(fine - value)
        if gap > _DOUBLING_TOL * (1.0 + op_norm(fine)):
            raise QuadratureError(
                f"dunford quadrature unstable under node doubling ({gap:.3e})")
        value = fine
    return value


def dunford_multivariate(f: AnalyticFunction, system: LiftedSystem,
                         contours: list[Contour], require_full: bool = True,
                         verify: bool = False, budget: int = NODE_BUDGET) -> np.ndarray:
    """Iterated contour quadrature of f(z) kron_j (z_j I - X_j)^{-1}.

    Node tuples are capped at `budget` (cost guard).  Resolvents are built
    per factor (original factor dimensions); the Kronecker accumulation is a
    single contraction per factor.
    """
    r = system.rank
    if f.arity != r:
        raise ConfigError(f"function arity {f.arity} does not match system rank {r}")
    if len(contours) != r:
        raise ConfigError(f"need {r} contours, got {len(contours)}")
    if r > 3:
        raise PreconditionError("iterated quadrature supports at most 3 factors")

    def run(scale_nodes):
        node_counts = [c.nodes * scale_nodes for c in contours]
        total = 1
        for m in node_counts:
            total *= m
        if total > budget:
            raise PreconditionError(
                f"quadrature cost guard: {total} node tuples exceed budget {budget}")
        stacks, weights, points = [], [], []
        for j, c in enumerate(contours):
            values = eig(system.factors[j]).eigenvalues
            _screen_contour(c, values, require_full, f"factor {j + 1}")
            zs = c.points(node_counts[j])
            stacks.append(resolvent_at_nodes(system.factors[j], zs))
            weights.append(c.weights(node_counts[j]))
            points.append(zs)
        f.assert_analytic_on([c.center for c in contours], [c.radius for c in contours])
        grid = np.meshgrid(*points, indexing="ij")
        coeffs = np.asarray(f(*grid), dtype=complex)
        for j, w in enumerate(weights):
            shape = [1] * r
            shape[j] = w.size
            coeffs = coeffs * w.reshape(shape)
        return _kron_fold(coeffs, stacks)

    value = run(1)
    if verify:
        fine = run(2)
        gap = op_norm(fine - value)
        if gap > 1e-9 * (1.0 + op_norm(fine)):
            raise QuadratureError(
                f"multivariate quadrature unstable under node doubling ({gap:.3e})")
        value = fine
    return value


# ---------------------------------------------------------------------------
# lifted power series


def power_series_apply(f: AnalyticFunction, system: LiftedSystem,
                       center=None, degree_cap: int | None = None,
                       tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Truncated lifted Taylor series sum_alpha a_alpha prod_j (X~_j - c_j)^alpha_j.

    The center defaults to the factor-wise mean of the component eigenvalues.
    The truncation is certified: coefficients are computed on a padded box,
    the discarded shells are summed with weights prod ||X_j - c_j I||^alpha_j,
    and a geometric extension of the last shell must bring the whole tail
    under `tail_tol` (TailBoundError otherwise).  Polynomials get an exact
    cap from their degree.
    """
    r = system.rank
    if f.arity != r:
        raise ConfigError(f"function arity {f.arity} does not match system rank {r}")
    if center is None:
        center = [complex(np.mean(dec.eigenvalues)) for dec in system.decompositions]
    center = [complex(c) for c in center]
    if len(center) != r:
        raise ConfigError(f"need {r} center coordinates, got {len(center)}")

    shifted = [system.factors[j] - center[j] * eye_like(system.factors[j].shape[0])
               for j in range(r)]
    radii = [max(op_norm(y), 1e-300) for y in shifted]

    hint = f.max_degree()
    if degree_cap is not None:
        caps = [int(degree_cap)]
    elif hint is not None:
        caps = [max(hint)]
    else:
        caps = list(range(8, _MAX_SERIES_CAP + 1, 6))

    last_tail = np.inf
    for cap in caps:
        pad = 3
        box = taylor_coefficients(f, center, cap + pad)
        weights = np.abs(box)
        for j in range(r):
            shape = [1] * r
            shape[j] = cap + pad + 1
            weights = weights * (radii[j] ** np.arange(cap + pad + 1.0)).reshape(shape)
        idx = np.meshgrid(*[np.arange(cap + pad + 1)] * r, indexing="ij")
        level = np.maximum.reduce(idx) if r > 1 else idx[0]
        shells = [float(np.sum(weights[level == k])) for k in range(cap + 1, cap + pad + 1)]
        tail = sum(shells)
        if shells[-1] > 0:
            prev = shells[-2] if len(shells) > 1 else np.inf
            q = shells[-1] / prev if prev > 0 else 1.0
            if q >= 0.9:
                last_tail = np.inf
                continue
            tail += shells[-1] * q / (1.0 - q)
        last_tail = tail
        if tail <= tail_tol:
            core = box[(slice(0, cap + 1),) * r]
            stacks = []
            for j in range(r):
                d = shifted[j].shape[0]
                pw = np.empty((cap + 1, d, d), dtype=complex)
                pw[0] = eye_like(d)
                for k in range(1, cap + 1):
                    pw[k] = pw[k - 1] @ shifted[j]
                stacks.append(pw)
            return _kron_fold(np.ascontiguousarray(core), stacks)
    raise TailBoundError(
        f"power series tail {last_tail:.3e} not certified below {tail_tol:g} "
        f"within degree cap {caps[-1]}")
