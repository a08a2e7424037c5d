"""Dense complex linear algebra on labeled tensor-product Hilbert spaces.

Conventions used throughout the package:

* angular frequencies in rad/us, times in us (so "2pi x 8 MHz" is stored
  as 50.265 rad/us),
* kets are 1-d complex arrays, operators dense 2-d complex arrays,
* the composite space orders factors control-then-target, with the flat
  index ``i_control * dim_target + i_target``.

Leakage bookkeeping may append a handful of pair-level states after the
tensor-product block; those extra states are not part of any factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
DENSITY_HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
NORM_TOL = 1e-8
POSITIVITY_FLOOR = -1e-8
EIG_TOL = 1e-10


class SpaceMismatchError(ValueError):
    """Operator or state dimensions do not match the Hilbert space."""


def hermiticity_defect(a: np.ndarray) -> float:
    """Largest entrywise deviation of ``a`` from its own adjoint."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def assert_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    defect = hermiticity_defect(a)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian: defect {defect:.3e} > {tol:.1e}")


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    eye = np.eye(u.shape[0])
    return float(np.max(np.abs(u.conj().T @ u - eye))) <= tol


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor product of labeled finite-level factors, plus optional extras.

    ``factor_dims`` and ``level_labels`` describe the product block;
    ``extra_labels`` name any appended non-product states (used for
    leakage levels that live at the pair level, not on one atom).
    """

    factor_dims: tuple[int, ...]
    level_labels: tuple[tuple[str, ...], ...]
    extra_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.factor_dims) != len(self.level_labels):
            raise ValueError("one label tuple per factor is required")
        for dim, labels in zip(self.factor_dims, self.level_labels):
            if dim != len(labels):
                raise ValueError(f"factor of dimension {dim} has {len(labels)} labels")
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate level labels in factor {labels}")
        if len(set(self.extra_labels)) != len(self.extra_labels):
            raise ValueError("duplicate extra labels")

    @property
    def product_dim(self) -> int:
        return int(np.prod(self.factor_dims)) if self.factor_dims else 1

    @property
    def dim(self) -> int:
        return self.product_dim + len(self.extra_labels)

    def factor_index(self, factor: int, label: str) -> int:
        try:
            return self.level_labels[factor].index(label)
        except ValueError:
            raise KeyError(f"no level {label!r} in factor {factor}") from None

    def index(self, labels: Sequence[str]) -> int:
        """Flat index of the product basis state with one label per factor."""
        if len(labels) != len(self.factor_dims):
            raise ValueError("need one label per factor")
        idx = 0
        for k, label in enumerate(labels):
            idx = idx * self.factor_dims[k] + self.factor_index(k, label)
        return idx

    def extra_index(self, label: str) -> int:
        try:
            return self.product_dim + self.extra_labels.index(label)
        except ValueError:
            raise KeyError(f"no extra state {label!r}") from None

    def basis_labels(self) -> list[str]:
        """Concatenated label of every flat basis state, extras last."""
        combos = [""]
        for labels in self.level_labels:
            combos = [c + l for c in combos for l in labels]
        return combos + list(self.extra_labels)

    def basis_state(self, labels: Sequence[str]) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(labels)] = 1.0
        return psi

    def computational_indices(self) -> np.ndarray:
        """Flat indices of |00>, |01>, |10>, |11> in that order."""
        return np.array(
            [self.index(pair) for pair in (("0", "0"), ("0", "1"), ("1", "0"), ("1", "1"))]
        )


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator with an optional asserted-Hermitian contract."""

    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("operator must be a square matrix")
        if self.hermitian:
            assert_hermitian(entries, HERMITICITY_TOL)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 by more than {NORM_TOL:.1e}")


@dataclass(frozen=True)
class DensityMatrix:
    """Physical density operator; construction enforces the usual checks."""

    entries: np.ndarray
    expected_trace: float = 1.0

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        defect = hermiticity_defect(rho)
        if defect > DENSITY_HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: defect {defect:.3e}")
        tr = float(np.real(np.trace(rho)))
        if abs(tr - self.expected_trace) > TRACE_TOL:
            raise ValueError(f"trace {tr} deviates from {self.expected_trace} by more than {TRACE_TOL:.1e}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if min_eig < POSITIVITY_FLOOR:
            raise ValueError(f"density matrix has negative eigenvalue {min_eig:.3e}")

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or kets)."""
    if not ops:
        raise ValueError("need at least one operator")
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def expectation_value(op: np.ndarray, state: np.ndarray) -> complex:
    """<psi|A|psi> for kets, tr(A rho) for density matrices."""
    op = np.asarray(op, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2:
        return complex(np.trace(op @ state))
    raise ValueError("state must be a ket or a density matrix")


def project_to_computational(rho: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Restrict a full-space density matrix to the 4x4 computational block.

    Plain submatrix extraction, no renormalization: the missing trace is
    exactly the population that leaked out of {|0>,|1>} x {|0>,|1>}.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (space.dim, space.dim):
        raise SpaceMismatchError(f"operator shape {rho.shape} does not match space dim {space.dim}")
    idx = space.computational_indices()
    return rho[np.ix_(idx, idx)]


def embed_pair_operator(space: HilbertSpace, op_c: np.ndarray, op_t: np.ndarray) -> np.ndarray:
    """Embed (op_c x op_t) into the full space, zero on any extra states."""
    block = tensor_product(op_c, op_t)
    if block.shape != (space.product_dim, space.product_dim):
        raise SpaceMismatchError("factor operators do not match the product block")
    full = np.zeros((space.dim, space.dim), dtype=complex)
    full[: space.product_dim, : space.product_dim] = block
    return full


def single_atom_operator(space: HilbertSpace, factor: int, op: np.ndarray) -> np.ndarray:
    """Embed a one-atom operator, identity on the other atom."""
    ops = [np.eye(d, dtype=complex) for d in space.factor_dims]
    ops[factor] = np.asarray(op, dtype=complex)
    return embed_pair_operator(space, *ops)


def level_projector(dim: int, i: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[i, i] = 1.0
    return p


def transition_operator(dim: int, upper: int, lower: int) -> np.ndarray:
    """|upper><lower| on a single factor."""
    op = np.zeros((dim, dim), dtype=complex)
    op[upper, lower] = 1.0
    return op
