"""Spectral data of the subsystem matrices.

Each matrix ``A`` is factored as ``A = P D P^-1`` with unit-norm eigenvector
columns in ``P``.  The certificates only ever touch ``P`` through spectral
norms of products like ``P_s^-1 P_r``, so complex eigenvectors are used
as-is rather than converting to a real Jordan form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
import scipy.linalg

from .digraph import Digraph, SubgraphPartition, reachable_from
from .errors import DefectiveEndpoint, DimensionMismatch, ImaginaryAxisEigenvalue, NonSquareInput


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used while decomposing subsystem matrices.

    axis_tol
        eigenvalues with ``|Re| <= axis_tol * ||A||`` are rejected.
    cond_threshold
        eigenvector matrices with a larger condition number mark the matrix
        as defective.
    defect_margin
        gap between ``lambda*`` and the largest real part for defective
        matrices.
    commute_tol
        relative commutator size below which two matrices commute.
    """

    axis_tol: float = 1e-9
    cond_threshold: float = 1e8
    defect_margin: float = 1e-2
    commute_tol: float = 1e-9

    def to_dict(self) -> dict:
        return {
            "axis_tol": self.axis_tol,
            "cond_threshold": self.cond_threshold,
            "defect_margin": self.defect_margin,
            "commute_tol": self.commute_tol,
        }


DEFAULT_TOLERANCES = Tolerances()

# how a subsystem's eigenvector matrix was obtained
BASIS_EIG = "eig"
BASIS_JORDAN = "jordan"
BASIS_OVERRIDE = "override"


@dataclass(frozen=True, eq=False)
class SubsystemSpectrum:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigvecs: np.ndarray | None
    defective: bool = False
    lambda_star: float | None = None
    beta: float | None = None
    basis_source: str | None = BASIS_EIG

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def is_stable(self) -> bool:
        return self.max_real < 0

    @property
    def classification(self) -> str:
        """``Stable``, ``Unstable`` or ``Defective`` (the latter still has a sign via :attr:`is_stable`)."""
        if self.defective:
            return "Defective"
        return "Stable" if self.is_stable else "Unstable"

    @property
    def decay_rate(self) -> float:
        """``lambda = -max Re(eig)`` for a stable matrix."""
        if not self.is_stable:
            raise ValueError("decay rate is only defined for stable subsystems")
        return -self.max_real

    @property
    def growth_rate(self) -> float:
        """``mu = max Re(eig)`` for an unstable matrix."""
        if self.is_stable:
            raise ValueError("growth rate is only defined for unstable subsystems")
        return self.max_real

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def to_dict(self) -> dict:
        out = {
            "classification": self.classification,
            "stable": self.is_stable,
            "max_real": self.max_real,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "defective": self.defective,
            "basis": self.basis_source,
        }
        if self.defective:
            out["lambda_star"] = self.lambda_star
            out["beta"] = self.beta
        return out


def spectral_norm(m) -> float:
    """Largest singular value."""
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def matrix_exponential(a, t: float = 1.0) -> np.ndarray:
    """``exp(a t)`` by scaling and squaring (scipy's Pade implementation)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    a = np.asarray(a, dtype=float)
    return scipy.linalg.expm(a * t)


def _unit_columns(p: np.ndarray) -> np.ndarray:
    return p / np.linalg.norm(p, axis=0)


def _jordan_basis(a: np.ndarray, eigenvalues: np.ndarray, scale: float) -> np.ndarray | None:
    """Unit-column basis of eigenvectors and generalized eigenvectors.

    Eigenvalues are clustered; a cluster whose eigenspace is too small gets
    one Jordan chain built from minimum-norm solutions of
    ``(A - lam I) v_next = v``.  Clusters needing several chains are not
    handled and yield ``None``.
    """
    n = a.shape[0]
    cluster_tol = 1e-5 * scale
    rank_tol = 1e-6 * scale
    remaining = list(eigenvalues)
    columns = []
    while remaining:
        z = remaining.pop(0)
        cluster = [z] + [w for w in remaining if abs(w - z) < cluster_tol]
        for w in cluster[1:]:
            remaining.remove(w)
        m = len(cluster)
        lam = np.mean(cluster)
        b = a - lam * np.eye(n)
        _, s, vh = np.linalg.svd(b)
        null = vh[s <= rank_tol].conj().T
        g = null.shape[1]
        if g >= m:
            columns.extend(null[:, :m].T)
        elif g == 1:
            pinv = np.linalg.pinv(b, rcond=rank_tol / max(s[0], rank_tol))
            v = null[:, 0]
            chain = [v]
            for _ in range(m - 1):
                v = pinv @ v
                v = v / np.linalg.norm(v)
                chain.append(v)
            columns.extend(chain)
        else:
            return None
    p = np.array(columns).T
    if np.linalg.matrix_rank(p) < n:
        return None
    return _unit_columns(p)


def eigendecompose(
    a, tol: Tolerances = DEFAULT_TOLERANCES, defective_basis: str | None = None
) -> SubsystemSpectrum:
    """Eigen-factor one subsystem matrix.

    ``defective_basis="jordan"`` replaces the eigenvector matrix of a
    non-diagonalizable input by a unit-column Jordan basis instead of leaving
    it unavailable.  Such a basis does not give the clean
    ``||exp(D t)|| <= exp(max Re * t)`` bound, so any bound using it is
    nominal only.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NonSquareInput(f"expected a non-empty square matrix, got shape {a.shape}")
    norm_a = spectral_norm(a)
    w, v = np.linalg.eig(a)
    order = np.lexsort((w.imag, -w.real))
    w, v = w[order], v[:, order]
    near_axis = np.abs(w.real) <= tol.axis_tol * norm_a
    if near_axis.any():
        raise ImaginaryAxisEigenvalue(
            f"eigenvalue(s) {w[near_axis]} lie on the imaginary axis (tolerance {tol.axis_tol:g})"
        )
    if np.all(np.abs(w.imag) == 0):
        w = w.real.astype(complex)
        v = v.real.astype(complex)
    p = _unit_columns(v)
    cond = np.linalg.cond(p)
    if np.isfinite(cond) and cond <= tol.cond_threshold:
        return SubsystemSpectrum(a, w, p)

    lam_star = float(np.max(w.real)) + tol.defect_margin
    grid = np.geomspace(1e-3, 50.0, 200)
    beta = max(1.0, max(spectral_norm(scipy.linalg.expm(a * t)) * np.exp(-lam_star * t) for t in grid))
    basis, source = None, None
    if defective_basis == BASIS_JORDAN:
        basis = _jordan_basis(a, w, max(norm_a, 1.0))
        source = BASIS_JORDAN if basis is not None else None
    elif defective_basis not in (None, "none", "reject"):
        raise ValueError(f"unknown defective-basis policy {defective_basis!r}")
    return SubsystemSpectrum(a, w, basis, True, lam_star, float(beta), source)


@dataclass(frozen=True, eq=False)
class SubsystemEnsemble:
    """Subsystem spectra indexed ``1..k``."""

    spectra: tuple[SubsystemSpectrum, ...]
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        dims = {s.n for s in self.spectra}
        if len(dims) > 1:
            raise DimensionMismatch(f"subsystem matrices have differing sizes {sorted(dims)}")
        object.__setattr__(self, "spectra", tuple(self.spectra))

    @classmethod
    def from_matrices(
        cls,
        matrices: Iterable,
        tol: Tolerances = DEFAULT_TOLERANCES,
        defective_basis: str | None = None,
    ) -> "SubsystemEnsemble":
        spectra = tuple(eigendecompose(m, tol, defective_basis) for m in matrices)
        warnings = []
        for i, s in enumerate(spectra, start=1):
            if not s.defective:
                continue
            if s.basis_source == BASIS_JORDAN:
                warnings.append(
                    f"subsystem {i} is not diagonalizable; using a unit-column Jordan basis "
                    f"with the nominal rate {s.max_real:.6g} (bounds omit beta={s.beta:.6g})"
                )
            else:
                warnings.append(
                    f"subsystem {i} is not diagonalizable (lambda*={s.lambda_star:.6g}, "
                    f"beta={s.beta:.6g}); quantities touching it are unavailable"
                )
        return cls(spectra, tuple(warnings))

    def __len__(self) -> int:
        return len(self.spectra)

    def __getitem__(self, i: int) -> SubsystemSpectrum:
        if not 1 <= i <= len(self.spectra):
            raise IndexError(f"subsystem index {i} outside 1..{len(self.spectra)}")
        return self.spectra[i - 1]

    @property
    def indices(self) -> range:
        return range(1, len(self.spectra) + 1)

    @property
    def dim(self) -> int:
        return self.spectra[0].n if self.spectra else 0

    @property
    def stable_indices(self) -> frozenset[int]:
        return frozenset(i for i in self.indices if self[i].is_stable)

    @property
    def unstable_indices(self) -> frozenset[int]:
        return frozenset(i for i in self.indices if not self[i].is_stable)

    def partition(self, g: Digraph) -> SubgraphPartition:
        if g.k != len(self):
            raise DimensionMismatch(f"graph has {g.k} vertices but there are {len(self)} subsystems")
        return SubgraphPartition(g, self.stable_indices)

    def basis(self, i: int) -> np.ndarray:
        p = self[i].eigvecs
        if p is None:
            raise DefectiveEndpoint(i, "its eigenvector matrix")
        return p

    def rate(self, i: int) -> float:
        """Exponential rate in the bound ``||exp(D_i t)|| <= exp(rate * t)``."""
        return self[i].max_real

    def decay(self, i: int) -> float:
        return self[i].decay_rate

    def growth(self, i: int) -> float:
        return self[i].growth_rate

    def with_bases(self, bases: dict[int, np.ndarray]) -> "SubsystemEnsemble":
        """Replace eigenvector matrices, e.g. with rescaled or user-supplied ones."""
        spectra = list(self.spectra)
        for i, p in bases.items():
            p = np.asarray(p, dtype=complex)
            if p.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"basis for subsystem {i} has shape {p.shape}")
            spectra[i - 1] = replace(spectra[i - 1], eigvecs=p, basis_source=BASIS_OVERRIDE)
        return SubsystemEnsemble(tuple(spectra), self.warnings)

    def to_dict(self) -> dict:
        return {str(i): self[i].to_dict() for i in self.indices}


def transition_factor(ens: SubsystemEnsemble, r: int, s: int) -> float:
    """``||P_s^-1 P_r||``, the norm picked up when switching from r to s."""
    if r == s:
        ens.basis(r)
        return 1.0
    return spectral_norm(np.linalg.solve(ens.basis(s), ens.basis(r)))


def transition_cost(ens: SubsystemEnsemble, r: int, s: int) -> float:
    """``ln ||P_s^-1 P_r||`` for the edge (r, s)."""
    return float(np.log(transition_factor(ens, r, s)))


def rho_graph(ens: SubsystemEnsemble, g: Digraph) -> float:
    """Signal-independent envelope constant.

    Maximum of ``||P_j|| ||P_i^-1||`` over pairs where ``j`` can be reached
    from ``i`` (including ``j == i``).  This is the constant multiplying the
    switching envelope when a run starts in ``i`` and is currently in ``j``.
    """
    norms = {i: spectral_norm(ens.basis(i)) for i in g.vertices}
    inv_norms = {i: spectral_norm(np.linalg.inv(ens.basis(i))) for i in g.vertices}
    best = 0.0
    for i in g.vertices:
        for j in reachable_from(g, i) | {i}:
            best = max(best, norms[j] * inv_norms[i])
    return best


@dataclass
class CommutingResult:
    commuting: bool
    max_commutator: float
    common_basis: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.commuting


def check_pairwise_commuting(
    ens: SubsystemEnsemble, tol: Tolerances = DEFAULT_TOLERANCES, seed: int = 0
) -> CommutingResult:
    """Test ``A_i A_j == A_j A_i`` for all pairs and find a common eigenbasis.

    The common basis is the eigenvector matrix of a random combination of
    the matrices, accepted only if it diagonalizes every one of them.  Its
    columns are not normalized.
    """
    mats = [s.matrix for s in ens.spectra]
    worst = 0.0
    for a, b in itertools.combinations(mats, 2):
        scale = max(spectral_norm(a) * spectral_norm(b), 1e-300)
        worst = max(worst, spectral_norm(a @ b - b @ a) / scale)
    if worst > tol.commute_tol:
        return CommutingResult(False, worst)
    if all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in mats):
        return CommutingResult(True, worst, np.eye(ens.dim, dtype=complex))
    if any(s.defective for s in ens.spectra):
        return CommutingResult(True, worst, None)
    rng = np.random.default_rng(seed)
    combo = sum(c * m for c, m in zip(rng.standard_normal(len(mats)), mats))
    _, p = np.linalg.eig(combo)
    if np.linalg.cond(p) > tol.cond_threshold:
        return CommutingResult(True, worst, None)
    p_inv = np.linalg.inv(p)
    for m in mats:
        d = p_inv @ m @ p
        off = d - np.diag(np.diag(d))
        if spectral_norm(off) > 1e-8 * max(spectral_norm(m), 1.0):
            return CommutingResult(True, worst, None)
    return CommutingResult(True, worst, p)


def common_diagonals(ens: SubsystemEnsemble, p: np.ndarray) -> np.ndarray:
    """Row ``i-1`` holds the diagonal of ``P^-1 A_i P``."""
    p_inv = np.linalg.inv(p)
    return np.array([np.diag(p_inv @ s.matrix @ p) for s in ens.spectra])
