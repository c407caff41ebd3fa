"""Small dense complex linear algebra for the B (x) C (x) T qubit register.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Multi-system
operators always follow the Kronecker convention: the leftmost factor is the
most significant index, so ``|b c t>`` sits at row ``4*b + 2*c + t``.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import TOL
from .errors import ConfigError, ValidationError

I2 = np.eye(2, dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)

Layout = Sequence[tuple[str, int]]
BCT: tuple[tuple[str, int], ...] = (("B", 2), ("C", 2), ("T", 2))


def ket(*bits: int) -> np.ndarray:
    """Computational basis column vector ``|b_0 b_1 ...>`` of qubits."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(str(b) for b in bits), 2) if bits else 0] = 1.0
    return v


def outer(u: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    v = u if v is None else v
    return np.outer(u, np.conj(v))


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def tensor(*ops) -> np.ndarray:
    """Kronecker product of the operands, leftmost most significant."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (as_matrix(o) for o in ops))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def is_hermitian(m: np.ndarray, tol: float = TOL.algebraic) -> bool:
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def check_density(rho, tol: float = TOL.positivity) -> np.ndarray:
    """Return ``rho`` as an array after checking it is a (sub-normalized) state.

    Raises ValidationError if the matrix is not square, not Hermitian within
    ``TOL.algebraic``, has trace outside ``[0, 1]`` or a negative eigenvalue
    below ``-tol``.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho):
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr.imag) > TOL.algebraic or not (-TOL.algebraic <= tr.real <= 1 + TOL.algebraic):
        raise ValidationError(f"density matrix trace {tr} outside [0, 1]")
    lam_min = np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0]
    if lam_min < -tol:
        raise ValidationError(f"density matrix not PSD (min eigenvalue {lam_min:.3e})")
    return rho


def _check_layout(layout: Layout, dim: int) -> None:
    labels = [lab for lab, _ in layout]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate labels in layout {labels}")
    if int(np.prod([d for _, d in layout])) != dim:
        raise ConfigError(f"layout {list(layout)} does not match dimension {dim}")


def partial_trace(rho: np.ndarray, layout: Layout, keep: Iterable[str]) -> np.ndarray:
    """Trace out every subsystem of ``layout`` whose label is not in ``keep``.

    Kept subsystems stay in their layout order.
    """
    rho = as_matrix(rho)
    _check_layout(layout, rho.shape[0])
    labels = [lab for lab, _ in layout]
    keep = set(keep)
    unknown = keep - set(labels)
    if unknown:
        raise ConfigError(f"labels {sorted(unknown)} not in layout {labels}")
    dims = [d for _, d in layout]
    n = len(dims)
    t = rho.reshape(dims + dims)
    # einsum letters: row index i_k, column index j_k; traced systems share a letter
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    out_rows, out_cols = [], []
    for k, lab in enumerate(labels):
        if lab in keep:
            out_rows.append(rows[k])
            out_cols.append(cols[k])
        else:
            cols[k] = rows[k]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out_rows) + "".join(out_cols)
    kept_dim = int(np.prod([d for lab, d in layout if lab in keep]))
    return np.einsum(spec, t).reshape(kept_dim, kept_dim)


def embed(op: np.ndarray, layout: Layout, label: str) -> np.ndarray:
    """Lift a single-system operator to the full register, identity elsewhere."""
    labels = [lab for lab, _ in layout]
    if label not in labels:
        raise ConfigError(f"label {label!r} not in layout {labels}")
    return tensor(*[op if lab == label else np.eye(d) for lab, d in layout])


def conjugate_apply(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    op, rho = as_matrix(op), as_matrix(rho)
    if op.shape[1] != rho.shape[0] or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"dimension mismatch: op {op.shape} vs rho {rho.shape}")
    return op @ rho @ dagger(op)


def apply_channel(kraus: Iterable[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(conjugate_apply(k, rho) for k in kraus)


def kraus_deviation(ks: Sequence[np.ndarray]) -> float:
    """Max entrywise deviation of ``sum K^dag K`` from the identity."""
    ks = [as_matrix(k) for k in ks]
    if not ks:
        return float("inf")
    if len({k.shape for k in ks}) != 1:
        raise ValidationError("Kraus operators have differing shapes")
    s = sum(dagger(k) @ k for k in ks)
    return float(np.max(np.abs(s - np.eye(s.shape[0]))))


def validate_kraus(ks: Sequence[np.ndarray], tol: float = TOL.algebraic) -> bool:
    return kraus_deviation(ks) <= tol


def check_observable(obs) -> np.ndarray:
    """Return ``obs`` after checking it is Hermitian and squares to identity."""
    o = as_matrix(obs)
    if o.shape[0] != o.shape[1]:
        raise ValidationError(f"observable must be square, got {o.shape}")
    if not is_hermitian(o):
        raise ValidationError("observable is not Hermitian")
    dev = np.max(np.abs(o @ o - np.eye(o.shape[0])))
    if dev > TOL.algebraic:
        raise ValidationError(f"observable is not involutory (|O^2 - I| = {dev:.3e})")
    return o


def projectors_of(obs) -> tuple[np.ndarray, np.ndarray]:
    """Eigenprojectors ``(P+, P-) = ((I + O)/2, (I - O)/2)`` of a +-1 observable."""
    o = check_observable(obs)
    eye = np.eye(o.shape[0], dtype=complex)
    return (eye + o) / 2, (eye - o) / 2


def bloch_observable(theta: float) -> np.ndarray:
    """``cos(theta) Z + sin(theta) X``; theta = pi/4 gives (Z + X)/sqrt(2)."""
    return np.cos(theta) * Z + np.sin(theta) * X
