"""Pump experiment definition: subsystems, temperatures, interaction schedule.

A :class:`PumpModel` is a passive description. :func:`validate` checks it
and the constructors below (eigenbasis, Gibbs state, propagator) refuse
models that fail the checks relevant to them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import linalg
from .errors import DimensionError, InvalidModelError

CONSERVATION_TOL = 1e-9
DEGENERACY_GAP = 1e-10
DURATION_RTOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * prod_k sigma_{label_k}^{(index_k)}``."""

    coefficient: float
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        factors = tuple((int(i), str(p).upper()) for i, p in self.factors)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))
        slots = [i for i, _ in factors]
        if len(set(slots)) != len(slots):
            raise ValueError(f"subsystem repeated within one Pauli term: {slots}")
        bad = [p for _, p in factors if p not in PAULI]
        if bad:
            raise ValueError(f"unknown Pauli labels {bad}")


def build_pauli_operator(terms: Sequence[PauliTerm], dims: Sequence[int]) -> np.ndarray:
    dims = [int(d) for d in dims]
    total = int(np.prod(dims, dtype=np.int64))
    out = np.zeros((total, total), dtype=np.complex128)
    for term in terms:
        ops = [np.eye(d, dtype=np.complex128) for d in dims]
        for slot, label in term.factors:
            if not 0 <= slot < len(dims):
                raise DimensionError(f"Pauli factor on subsystem {slot}, but only {len(dims)} subsystems")
            if dims[slot] != 2:
                raise DimensionError(f"Pauli factor on subsystem {slot} of dim {dims[slot]} (qubits only)")
            ops[slot] = PAULI[label]
        out += term.coefficient * linalg.kron_all(ops)
    return out


class Segment(NamedTuple):
    matrix: np.ndarray
    duration: float


@dataclass(frozen=True, eq=False)
class PumpModel:
    """Subsystem dims, bare Hamiltonians, inverse temperatures and a
    piecewise-constant interaction schedule covering ``[0, tau]``.

    ``conservation`` is ``"error"`` or ``"warn"``; in warn mode a model whose
    interaction breaks energy conservation is still accepted by the
    two-time-measurement routines.
    """

    dims: tuple[int, ...]
    local_h: tuple[np.ndarray, ...]
    beta: tuple[float, ...]
    segments: tuple[Segment, ...]
    tau: float
    conservation: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "local_h", tuple(linalg.as_matrix(h) for h in self.local_h))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        segs = tuple(Segment(linalg.as_matrix(m), float(t)) for m, t in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "tau", float(self.tau))
        if self.conservation not in ("error", "warn"):
            raise ValueError(f"conservation must be 'error' or 'warn', got {self.conservation!r}")

    @classmethod
    def create(cls, dims, local_h, beta, interaction=None, tau: float = 1.0, conservation: str = "error"):
        """Build a model; ``interaction`` is ``None``, a single matrix (sudden
        quench over the whole of ``[0, tau]``) or a list of ``(matrix, duration)``."""
        total = int(np.prod(dims, dtype=np.int64))
        if interaction is None:
            segments = [(np.zeros((total, total), dtype=np.complex128), tau)]
        elif isinstance(interaction, np.ndarray) and interaction.ndim == 2:
            segments = [(interaction, tau)]
        else:
            segments = list(interaction)
        return cls(tuple(dims), tuple(local_h), tuple(beta), tuple(segments), tau, conservation)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def replace(self, **changes) -> "PumpModel":
        fields = dict(dims=self.dims, local_h=self.local_h, beta=self.beta,
                      segments=self.segments, tau=self.tau, conservation=self.conservation)
        fields.update(changes)
        return PumpModel(**fields)

    def __eq__(self, other):
        if not isinstance(other, PumpModel):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.beta == other.beta
            and self.tau == other.tau
            and self.conservation == other.conservation
            and len(self.local_h) == len(other.local_h)
            and all(np.array_equal(a, b) for a, b in zip(self.local_h, other.local_h))
            and len(self.segments) == len(other.segments)
            and all(a.duration == b.duration and np.array_equal(a.matrix, b.matrix)
                    for a, b in zip(self.segments, other.segments))
        )

    __hash__ = None


@dataclass
class Check:
    name: str
    passed: bool
    violation: float = 0.0
    tolerance: float = 0.0
    kind: str = "structure"
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)
    degenerate_subsystems: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def usable_for(self, scheme: str, conservation: str = "error") -> bool:
        for c in self.failures:
            if c.kind == "conservation" and scheme == "ttm" and conservation == "warn":
                continue
            return False
        return True


def embedded_hamiltonians(model: PumpModel) -> list[np.ndarray]:
    return [linalg.embed_local(h, j, model.dims) for j, h in enumerate(model.local_h)]


def total_hamiltonian(model: PumpModel) -> np.ndarray:
    return sum(embedded_hamiltonians(model))


def validate(model: PumpModel) -> ValidationReport:
    report = ValidationReport()
    add = report.checks.append
    n = model.n

    counts_ok = len(model.local_h) == n and len(model.beta) == n and n >= 1
    add(Check("subsystem count consistent", counts_ok,
              detail=f"dims={n} hamiltonians={len(model.local_h)} betas={len(model.beta)}"))
    add(Check("dims positive", all(d >= 1 for d in model.dims)))
    if not counts_ok:
        return report

    shapes_ok = True
    for j, (h, d) in enumerate(zip(model.local_h, model.dims)):
        ok = h.shape[0] == d
        shapes_ok &= ok
        add(Check(f"subsystem {j} hamiltonian dim", ok, detail=f"{h.shape[0]} vs {d}"))
        if ok:
            v = linalg.hermiticity_violation(h)
            add(Check(f"subsystem {j} hamiltonian hermitian", v <= linalg.HERMITIAN_TOL, v, linalg.HERMITIAN_TOL))
    for j, b in enumerate(model.beta):
        add(Check(f"subsystem {j} beta positive finite", math.isfinite(b) and b > 0, detail=f"beta={b!r}"))

    add(Check("tau non-negative finite", math.isfinite(model.tau) and model.tau >= 0, detail=f"tau={model.tau!r}"))
    add(Check("interaction schedule non-empty", len(model.segments) >= 1))
    total = model.total_dim
    for s, seg in enumerate(model.segments):
        ok = seg.matrix.shape[0] == total
        shapes_ok &= ok
        add(Check(f"segment {s} dim", ok, detail=f"{seg.matrix.shape[0]} vs {total}"))
        if ok:
            v = linalg.hermiticity_violation(seg.matrix)
            add(Check(f"segment {s} hermitian", v <= linalg.HERMITIAN_TOL, v, linalg.HERMITIAN_TOL))
        add(Check(f"segment {s} duration non-negative", math.isfinite(seg.duration) and seg.duration >= 0))
    covered = sum(seg.duration for seg in model.segments)
    gap = abs(covered - model.tau)
    add(Check("schedule covers [0, tau]", gap <= DURATION_RTOL * max(1.0, model.tau), gap,
              DURATION_RTOL * max(1.0, model.tau), detail=f"sum(durations)={covered!r}"))

    if not shapes_ok or not all(c.passed for c in report.checks if "hermitian" in c.name):
        return report

    h_embedded = embedded_hamiltonians(model)
    h_total = sum(h_embedded)
    h_norm = np.linalg.norm(h_total)
    for s, seg in enumerate(model.segments):
        comm = h_total @ seg.matrix - seg.matrix @ h_total
        tol = CONSERVATION_TOL * max(1.0, h_norm * np.linalg.norm(seg.matrix))
        v = float(np.linalg.norm(comm))
        add(Check(f"segment {s} conserves energy ([H, V] = 0)", v <= tol, v, tol, kind="conservation"))

    for j, h in enumerate(model.local_h):
        values = linalg.hermitian_eig(h).values
        if values.size > 1 and np.min(np.diff(values)) < DEGENERACY_GAP:
            report.degenerate_subsystems.append(j)
    return report


def require_valid(model: PumpModel, scheme: str = "otm") -> ValidationReport:
    """Validate ``model`` for ``scheme`` ('ttm' or 'otm') or raise InvalidModelError."""
    report = validate(model)
    if not report.usable_for(scheme, model.conservation):
        names = "; ".join(f"{c.name} ({c.violation:.3e})" if c.violation else c.name for c in report.failures)
        raise InvalidModelError(f"model fails validation: {names}")
    if not report.ok:
        warnings.warn("interaction does not conserve energy; TTM results only", RuntimeWarning, stacklevel=3)
    return report


@dataclass(frozen=True, eq=False)
class ProductEigenbasis:
    """Joint eigenbasis of the bare Hamiltonian built from local eigenvectors.

    Row ``k`` of ``multi_index``/``energies`` and column ``k`` of ``states``
    describe the same level; levels are lexicographic in the multi-index,
    subsystem 0 most significant.
    """

    multi_index: np.ndarray
    energies: np.ndarray
    states: np.ndarray
    local: tuple[linalg.HermitianEigen, ...]
    degenerate_subsystems: tuple[int, ...]

    @property
    def total_energies(self) -> np.ndarray:
        return self.energies.sum(axis=1)

    def __len__(self) -> int:
        return self.states.shape[1]

    def __iter__(self):
        for k in range(len(self)):
            yield tuple(self.multi_index[k]), self.energies[k], self.states[:, k]


def _product_eigenbasis(model: PumpModel, report: ValidationReport) -> ProductEigenbasis:
    local = tuple(linalg.hermitian_eig(h) for h in model.local_h)
    grids = np.meshgrid(*[np.arange(d) for d in model.dims], indexing="ij")
    multi = np.stack([g.ravel() for g in grids], axis=1)
    energies = np.stack([local[j].values[multi[:, j]] for j in range(model.n)], axis=1)
    states = linalg.kron_all([e.vectors for e in local])
    return ProductEigenbasis(multi, energies, states, local, tuple(report.degenerate_subsystems))


def product_eigenbasis(model: PumpModel, scheme: str = "otm") -> ProductEigenbasis:
    report = require_valid(model, scheme)
    return _product_eigenbasis(model, report)


class GibbsState(NamedTuple):
    rho: np.ndarray
    z: np.ndarray
    z_total: float
    local: tuple[np.ndarray, ...]


def _gibbs_state(model: PumpModel) -> GibbsState:
    states, zs = [], []
    for h, b in zip(model.local_h, model.beta):
        unnormalized = linalg.exp_hermitian(h, -b)
        z = float(np.trace(unnormalized).real)
        states.append(unnormalized / z)
        zs.append(z)
    z = np.array(zs)
    return GibbsState(linalg.kron_all(states), z, float(np.prod(z)), tuple(states))


def gibbs_initial_state(model: PumpModel, scheme: str = "otm") -> GibbsState:
    """Product of local Gibbs states ``exp(-beta_j H_j) / Z_j``, with the
    partition functions ``Z_j`` and their product."""
    require_valid(model, scheme)
    return _gibbs_state(model)


def _evolution_operator(model: PumpModel) -> np.ndarray:
    h_total = total_hamiltonian(model)
    u = np.eye(model.total_dim, dtype=np.complex128)
    for seg in model.segments:
        if seg.duration == 0.0:
            continue
        u = linalg.exp_hermitian(h_total + seg.matrix, -1j * seg.duration) @ u
    return u


def evolution_operator(model: PumpModel, scheme: str = "otm") -> np.ndarray:
    """Time-ordered propagator over the schedule, latest segment leftmost."""
    require_valid(model, scheme)
    return _evolution_operator(model)


@dataclass(frozen=True, eq=False)
class Prepared:
    """Everything both measurement schemes need, computed once per model."""

    model: PumpModel
    report: ValidationReport
    basis: ProductEigenbasis
    gibbs: GibbsState
    u: np.ndarray
    h_local: tuple[np.ndarray, ...]

    @property
    def level_log_weights(self) -> np.ndarray:
        """ln of the initial Gibbs weight of every product level."""
        beta = np.asarray(self.model.beta)
        return -(self.basis.energies @ beta) - math.log(self.gibbs.z_total)


def prepare(model: PumpModel, scheme: str = "otm") -> Prepared:
    report = require_valid(model, scheme)
    return Prepared(
        model,
        report,
        _product_eigenbasis(model, report),
        _gibbs_state(model),
        _evolution_operator(model),
        tuple(embedded_hamiltonians(model)),
    )
