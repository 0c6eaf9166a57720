"""Directional influence semi-norms and variable influences.

``rho_q(f)`` is the supremum of the L2 norm of the carre du champ of ``(f, x)``
over unit-norm degree-``q`` test polynomials ``x``.  Over a finite monomial
basis of the degree-``q`` stratum this is a symmetric eigenproblem: assemble
``Q[a, b] = <Gamma(f, e_a), Gamma(f, e_b)>`` for an orthonormal basis ``e_a``
and take the square root of the top eigenvalue.  The test space is spanned by
the monomials over the variables of ``f`` plus a configurable number of fresh
variables (fresh coordinates can genuinely enlarge the supremum for q >= 2).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import jacobi_eigh
from .algebra import (
    ChaosPoly,
    MultiIndex,
    as_fraction,
    fresh_variables,
    hermite_monomial,
    homogeneous_degree,
    inner_product,
    partial_derivative,
    poly_to_json_dict,
)
from .errors import BasisSizeError, PreconditionError
from .malliavin import gamma_gradient

DEFAULT_BASIS_CAP = 512
BASIS_CAP_ENV = "CHAOSCALC_MAX_BASIS_DIM"


@dataclass(frozen=True)
class InfluenceResult:
    q: int
    value: float
    direction: ChaosPoly
    basis_dimension: int
    extra_variables_used: int

    def to_json_dict(self) -> dict:
        return {
            "q": self.q,
            "value": self.value,
            "direction": poly_to_json_dict(self.direction),
            "basis_dimension": self.basis_dimension,
            "extra_variables_used": self.extra_variables_used,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class StrongestInfluence:
    """Least degree q at which the influence clears the caller's threshold."""

    q_star: int | None
    rho_values: dict[int, float]
    direction: ChaosPoly | None
    threshold: float

    def to_json_dict(self) -> dict:
        return {
            "q_star": self.q_star,
            "rho_values": {str(q): v for q, v in sorted(self.rho_values.items())},
            "direction": None if self.direction is None else poly_to_json_dict(self.direction),
            "threshold": self.threshold,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def _basis_cap(max_basis_dim: int | None) -> int:
    if max_basis_dim is not None:
        return max_basis_dim
    raw = os.environ.get(BASIS_CAP_ENV, "")
    if raw.strip():
        try:
            return int(raw)
        except ValueError:
            raise PreconditionError(f"{BASIS_CAP_ENV} must be an integer, got {raw!r}") from None
    return DEFAULT_BASIS_CAP


def _compositions(total: int, slots: int):
    if slots == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, slots - 1):
            yield (head,) + tail


def degree_monomials(variables: Sequence[int], degree: int) -> list[MultiIndex]:
    """All Hermite multi-indices of exact total ``degree`` over ``variables``, fixed order."""
    variables = sorted(variables)
    if not variables:
        return []
    out = []
    for expo in _compositions(degree, len(variables)):
        out.append(MultiIndex({v: e for v, e in zip(variables, expo) if e}))
    return out


def _top_eigenpair(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = jacobi_eigh(matrix)
    top = int(np.argmax(vals))
    vec = vecs[:, top].copy()
    # deterministic sign: first nonzero coordinate positive
    threshold = 1e-12 * max(1.0, float(np.max(np.abs(vec))))
    for entry in vec:
        if abs(entry) > threshold:
            if entry < 0:
                vec = -vec
            break
    return float(vals[top]), vec


def rho_1(f: ChaosPoly) -> InfluenceResult:
    """Degree-1 influence via the gradient Gram matrix ``M[i,j] = <d_i f, d_j f>``.

    The value is the square root of the top eigenvalue and the direction is the
    corresponding unit linear combination of the coordinates of ``f``.
    """
    variables = f.variables()
    if not variables:
        return InfluenceResult(
            q=1, value=0.0, direction=ChaosPoly.zero(), basis_dimension=0, extra_variables_used=0
        )
    grads = [partial_derivative(f, v) for v in variables]
    n = len(variables)
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = float(inner_product(grads[i], grads[j]))
    top, vec = _top_eigenpair(m)
    direction = ChaosPoly.zero()
    for v, a in zip(variables, vec):
        direction = direction + hermite_monomial({v: 1}, as_fraction(float(a)))
    return InfluenceResult(
        q=1,
        value=math.sqrt(max(top, 0.0)),
        direction=direction,
        basis_dimension=n,
        extra_variables_used=0,
    )


def rho_q(
    f: ChaosPoly,
    q: int,
    extra_vars: int | None = None,
    max_basis_dim: int | None = None,
) -> InfluenceResult:
    """Degree-``q`` influence over the monomial basis of the degree-``q`` stratum.

    ``extra_vars`` fresh coordinates (default ``q - 1``) are appended to the
    variables of ``f`` before enumerating the basis; the quadratic form is
    assembled exactly and only the eigensolve runs in floats.
    """
    if not isinstance(q, int) or q < 1:
        raise PreconditionError(f"influence degree must be a positive integer, got {q!r}")
    if extra_vars is None:
        extra_vars = q - 1
    if extra_vars < 0:
        raise PreconditionError(f"extra_vars must be nonnegative, got {extra_vars}")
    variables = list(f.variables()) + list(fresh_variables([f], extra_vars))
    nvars = len(variables)
    dim = math.comb(q + nvars - 1, nvars - 1) if nvars else 0
    cap = _basis_cap(max_basis_dim)
    if dim > cap:
        raise BasisSizeError(dim, cap)
    basis = degree_monomials(variables, q)
    if not basis:
        return InfluenceResult(
            q=q, value=0.0, direction=ChaosPoly.zero(), basis_dimension=0,
            extra_variables_used=extra_vars,
        )
    gammas = [gamma_gradient(f, hermite_monomial(idx)) for idx in basis]
    weights = [idx.weight for idx in basis]
    qmat = np.zeros((dim, dim))
    for a in range(dim):
        for b in range(a, dim):
            exact = inner_product(gammas[a], gammas[b])
            if exact:
                qmat[a, b] = qmat[b, a] = float(exact) / math.sqrt(weights[a] * weights[b])
    top, vec = _top_eigenpair(qmat)
    direction = ChaosPoly.zero()
    for idx, w, entry in zip(basis, weights, vec):
        if entry != 0.0:
            coeff = as_fraction(float(entry) / math.sqrt(w))
            direction = direction + hermite_monomial(idx, coeff)
    return InfluenceResult(
        q=q,
        value=math.sqrt(max(top, 0.0)),
        direction=direction,
        basis_dimension=dim,
        extra_variables_used=extra_vars,
    )


def strongest_influence(
    f: ChaosPoly,
    threshold: float,
    extra_vars: int | None = None,
    max_basis_dim: int | None = None,
) -> StrongestInfluence:
    """Scan q = 1 .. floor(p/2) and report the least q whose influence clears ``threshold``.

    ``f`` must sit in a single stratum of degree p >= 2; a vanishing degree-
    floor(p/2) influence is the finite-size certificate that no macroscopic
    direction remains, so the scan stops there.
    """
    if threshold <= 0:
        raise PreconditionError(f"threshold must be positive, got {threshold}")
    p = homogeneous_degree(f, "polynomial")
    if p < 2:
        raise PreconditionError(f"strongest_influence needs homogeneous degree >= 2, got {p}")
    rho_values: dict[int, float] = {}
    q_star: int | None = None
    direction: ChaosPoly | None = None
    for q in range(1, p // 2 + 1):
        if q == 1 and (extra_vars is None or extra_vars == 0):
            result = rho_1(f)
        else:
            result = rho_q(f, q, extra_vars, max_basis_dim)
        rho_values[q] = result.value
        if q_star is None and result.value >= threshold:
            q_star = q
            direction = result.direction
    return StrongestInfluence(
        q_star=q_star, rho_values=rho_values, direction=direction, threshold=float(threshold)
    )


def multilinear_influences(poly) -> dict[int, Fraction]:
    """Per-variable influence of a multilinear polynomial.

    ``Inf_i = sum_{terms containing i} a_J**2``, normalized by the variance
    ``sum_{J nonempty} a_J**2``.  Exact rationals throughout.
    """
    from .ensembles import MultilinearPoly  # local import to avoid a cycle

    if not isinstance(poly, MultilinearPoly):
        raise TypeError("multilinear_influences expects a MultilinearPoly")
    variance = poly.variance()
    if variance == 0:
        raise PreconditionError("polynomial has zero variance; influences are undefined")
    totals: dict[int, Fraction] = {}
    for term, coeff in poly.terms.items():
        c2 = coeff * coeff
        for var, _level in term:
            totals[var] = totals.get(var, Fraction(0)) + c2
    return {var: c2 / variance for var, c2 in sorted(totals.items())}
