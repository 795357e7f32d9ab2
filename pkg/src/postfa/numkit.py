"""Dense matrix kernels over two scalar backends.

Rational matrices are numpy arrays of dtype ``object`` holding
:class:`fractions.Fraction` entries; every operation on them is exact.
Floating matrices are ``complex128`` arrays. States evolve as column
vectors, ``v_next = M @ v``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DegeneracyError,
    DimensionError,
    EmptyInputError,
    PreconditionError,
    VariantMismatchError,
)

#: Default tolerance for float validation.
VALIDATION_TOL = 1e-9
#: Default tolerance for internal orthogonality solves.
ORTHO_TOL = 1e-12


def is_rational(m: np.ndarray) -> bool:
    return m.dtype == object


def rational_matrix(rows) -> np.ndarray:
    """Build an exact matrix; entries may be ints, Fractions or "p/q" strings."""
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, float):
            raise TypeError(f"float entry {x!r} in rational matrix")
        out[idx] = Fraction(x)
    return out


def complex_matrix(rows) -> np.ndarray:
    arr = np.array(rows, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def to_complex(m: np.ndarray) -> np.ndarray:
    if is_rational(m):
        return np.array([[complex(x) for x in row] for row in m], dtype=np.complex128)
    return np.asarray(m, dtype=np.complex128)


def identity(n: int, rational: bool = True) -> np.ndarray:
    if rational:
        out = np.full((n, n), Fraction(0), dtype=object)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n, dtype=np.complex128)


def zeros(rows: int, cols: int, rational: bool = True) -> np.ndarray:
    if rational:
        return np.full((rows, cols), Fraction(0), dtype=object)
    return np.zeros((rows, cols), dtype=np.complex128)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def max_abs(m: np.ndarray):
    """Largest entry modulus; exact for rational input."""
    if m.size == 0:
        return Fraction(0) if is_rational(m) else 0.0
    if is_rational(m):
        return max(abs(x) for x in m.flat)
    return float(np.max(np.abs(m)))


def _same_variant(a: np.ndarray, b: np.ndarray) -> None:
    if is_rational(a) != is_rational(b):
        raise VariantMismatchError("cannot mix rational and complex matrices")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    _same_variant(a, b)
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_variant(a, b)
    rational = is_rational(a)
    out = zeros(a.shape[0] + b.shape[0], a.shape[1] + b.shape[1], rational)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


class FamilyKind(Enum):
    COLUMN_STOCHASTIC = "columnStochastic"
    UNITARY = "unitary"
    ADMISSIBLE = "admissible"


@dataclass(frozen=True)
class ValidationReport:
    kind: FamilyKind
    violations: tuple  # one entry per matrix, or a single entry for a Kraus collection
    tol: object

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations)

    @property
    def worst(self):
        return max(self.violations)


def _stochastic_violation(m: np.ndarray):
    if is_rational(m):
        col_dev = max(abs(sum(m[:, j]) - 1) for j in range(m.shape[1]))
        neg = max([-x for x in m.flat if x < 0], default=Fraction(0))
        return max(col_dev, neg)
    if np.max(np.abs(m.imag), initial=0.0) > 0:
        imag = float(np.max(np.abs(m.imag)))
    else:
        imag = 0.0
    re = m.real
    col_dev = float(np.max(np.abs(re.sum(axis=0) - 1.0)))
    neg = float(max(0.0, -re.min()))
    return max(col_dev, neg, imag)


def _gram_violation(gram: np.ndarray):
    n = gram.shape[0]
    return max_abs(gram - identity(n, is_rational(gram)))


def validate_family(kind, matrices: Sequence[np.ndarray], tol=0) -> ValidationReport:
    """Measure how far each matrix (or the Kraus collection) is from its constraint.

    ``tol`` must be 0 when the matrices are rational.
    """
    kind = FamilyKind(kind)
    matrices = list(matrices)
    if not matrices:
        raise EmptyInputError("validate_family needs at least one matrix")
    rational = is_rational(matrices[0])
    for m in matrices[1:]:
        _same_variant(matrices[0], m)
    if rational and tol != 0:
        raise ValueError("rational matrices are validated exactly; tol must be 0")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if kind is FamilyKind.COLUMN_STOCHASTIC:
        violations = tuple(_stochastic_violation(m) for m in matrices)
    elif kind is FamilyKind.UNITARY:
        violations = []
        for m in matrices:
            if m.shape[0] != m.shape[1]:
                raise DimensionError(f"unitary check needs a square matrix, got {m.shape}")
            violations.append(_gram_violation(dagger(m) @ m))
        violations = tuple(violations)
    else:
        n = matrices[0].shape[1]
        total = zeros(n, n, rational)
        for e in matrices:
            if e.shape[1] != n:
                raise DimensionError("Kraus elements must share their column dimension")
            total = total + dagger(e) @ e
        violations = (_gram_violation(total),)
    return ValidationReport(kind, violations, tol)


@dataclass(frozen=True)
class OrthonormalExtension:
    """Result of extending a family of square matrices to orthonormal columns.

    For every member ``A_s`` the columns of ``stack(A_s, B_s, C_s) / scale``
    are orthonormal.
    """

    b: tuple
    c: tuple
    scale: float

    def stacked(self, index: int, family_member: np.ndarray) -> np.ndarray:
        """The ``3m x m`` isometry ``stack(A_s, B_s, C_s) / scale``."""
        a = to_complex(family_member)
        return np.vstack([a, self.b[index], self.c[index]]) / self.scale


def orthonormal_extend(family: Sequence[np.ndarray], scale: float | None = None) -> OrthonormalExtension:
    """Complete each ``m x m`` matrix with ``B`` and ``C`` blocks so columns become orthonormal.

    ``B_s`` is unit upper triangular. Its off-diagonal entries are solved in
    increasing ``(i, j)`` order so that columns ``i`` and ``j`` of
    ``stack(A_s, B_s)`` are orthogonal under the conjugate-linear inner
    product. The common scale is the largest stacked column norm across the
    family, unless a larger ``scale`` is requested. ``C_s`` is diagonal and
    pads every column norm up to the scale.
    """
    family = [to_complex(a) for a in family]
    if not family:
        raise EmptyInputError("orthonormal_extend needs a nonempty family")
    m = family[0].shape[0]
    for a in family:
        if a.shape != (m, m):
            raise DimensionError(f"family members must all be {m}x{m}, got {a.shape}")

    bs = []
    norms = []
    for a in family:
        b = np.zeros((m, m), dtype=np.complex128)
        for i in range(m):
            b[i, i] = 1.0
        for i in range(m):
            for j in range(i + 1, m):
                inner = np.vdot(a[:, i], a[:, j]) + np.vdot(b[:i, i], b[:i, j])
                b[i, j] = -inner
        col_norms = np.sqrt(
            np.sum(np.abs(a) ** 2, axis=0) + np.sum(np.abs(b) ** 2, axis=0)
        )
        bs.append(b)
        norms.append(col_norms)

    top = max(float(n.max()) for n in norms)
    if scale is None:
        scale = top
    elif scale < top * (1 - ORTHO_TOL):
        raise PreconditionError(f"scale {scale} is below the largest column norm {top}")

    cs = []
    for col_norms in norms:
        pad = np.sqrt(np.clip(scale**2 - col_norms**2, 0.0, None))
        cs.append(np.diag(pad).astype(np.complex128))
    return OrthonormalExtension(tuple(bs), tuple(cs), float(scale))


def unitary_complete(iso: np.ndarray, tol: float = VALIDATION_TOL) -> np.ndarray:
    """Extend a ``(3m) x m`` isometry to a ``(3m) x (3m)`` unitary.

    The first ``m`` columns are copied verbatim. The rest come from scanning
    standard basis vectors in index order, orthogonalising each against
    every accepted column (two Gram-Schmidt passes), dropping candidates with
    residual norm at most ``tol``.
    """
    iso = to_complex(iso)
    rows, m = iso.shape
    if rows != 3 * m:
        raise DimensionError(f"expected a (3m)x m isometry, got {iso.shape}")
    gram_dev = max_abs(dagger(iso) @ iso - np.eye(m))
    if gram_dev > tol:
        raise PreconditionError(f"input columns are not orthonormal (deviation {gram_dev:.3g})")

    basis = [iso[:, k] for k in range(m)]
    needed = rows - m
    found = 0
    for k in range(rows):
        if found == needed:
            break
        v = np.zeros(rows, dtype=np.complex128)
        v[k] = 1.0
        for _ in range(2):
            for q in basis:
                v = v - np.vdot(q, v) * q
        norm = np.linalg.norm(v)
        if norm <= tol:
            continue
        basis.append(v / norm)
        found += 1
    if found < needed:
        raise DegeneracyError(f"found only {found} of {needed} completion vectors")
    return np.column_stack(basis)
