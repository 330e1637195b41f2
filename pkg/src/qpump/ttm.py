"""Two-time measurement scheme.

Energy is measured in the product eigenbasis before and after the pump
stroke; the heat vector of a trajectory is the difference of the two
outcomes. Everything here is exact enumeration over level pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConservationError, NotBipartiteError
from .model import Check, PumpModel, prepare

MERGE_TOL = 1e-12
DROP_TOL = 1e-15
IDENTITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HeatDistribution:
    """Finite discrete distribution of heat vectors.

    ``q`` has one row per atom (one column per subsystem), ``p`` the matching
    probabilities. ``dropped_mass`` is the probability discarded as numerical
    noise before merging.
    """

    q: np.ndarray
    p: np.ndarray
    scheme: str
    dropped_mass: float = 0.0

    def __len__(self) -> int:
        return len(self.p)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def mean(self) -> np.ndarray:
        return self.p @ self.q

    def exp_average(self, beta) -> float:
        """<exp(-beta . Q)> over the distribution."""
        return float(self.p @ np.exp(-(self.q @ np.asarray(beta, dtype=float))))

    def conservation_defect(self) -> float:
        return float(np.max(np.abs(self.q.sum(axis=1)))) if len(self) else 0.0

    def atoms(self):
        return list(zip(map(tuple, self.q), self.p))


def merge_atoms(q: np.ndarray, p: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge atoms whose heat vectors agree componentwise within ``tol``.

    Greedy in input order, so the representative of each cluster is the first
    atom that opened it. Output is sorted lexicographically by heat vector.
    """
    reps: list[np.ndarray] = []
    mass: list[float] = []
    rep_arr = np.empty((0, q.shape[1]))
    for qi, pi in zip(q, p):
        if len(reps):
            hit = np.flatnonzero(np.all(np.abs(rep_arr - qi) <= tol, axis=1))
            if hit.size:
                mass[hit[0]] += pi
                continue
        reps.append(qi.copy())
        mass.append(pi)
        rep_arr = np.asarray(reps)
    q_out = rep_arr.reshape(-1, q.shape[1])
    p_out = np.asarray(mass, dtype=float)
    order = np.lexsort(q_out.T[::-1]) if len(p_out) else np.array([], dtype=int)
    return q_out[order], p_out[order]


def _transition_probabilities(prep) -> np.ndarray:
    """``T[b, a] = |<E_b| U |E_a>|^2``."""
    b = prep.basis.states
    amplitudes = b.conj().T @ prep.u @ b
    return np.abs(amplitudes) ** 2


def _ttm_distribution(prep, merge_tol: float, drop_tol: float) -> HeatDistribution:
    energies = prep.basis.energies
    weights = np.exp(prep.level_log_weights)
    t = _transition_probabilities(prep)
    joint = t * weights[None, :]
    # noise filter acts on the transition probability so that tiny initial
    # weights of high-energy levels are never discarded
    keep = t >= drop_tol
    dropped = float(joint[~keep].sum())
    final_idx, init_idx = np.nonzero(keep)
    q = energies[final_idx] - energies[init_idx]
    p = joint[final_idx, init_idx]
    q, p = merge_atoms(q, p, merge_tol)
    return HeatDistribution(q, p, "TTM", dropped)


def ttm_heat_distribution(model: PumpModel, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> HeatDistribution:
    return _ttm_distribution(prepare(model, "ttm"), merge_tol, drop_tol)


def trace_heat(prep) -> np.ndarray:
    """tr[(rho_tau - rho_0) H_j] for every subsystem."""
    rho0 = prep.gibbs.rho
    rho_tau = prep.u @ rho0 @ prep.u.conj().T
    diff = rho_tau - rho0
    return np.array([np.trace(diff @ h).real for h in prep.h_local])


@dataclass
class TtmReport:
    avg_heat: np.ndarray
    avg_heat_trace: np.ndarray
    ft_value: float
    entropy_production: float
    heat_sum: float
    conservation_defect: float
    dropped_mass: float
    atom_count: int
    degenerate_subsystems: tuple[int, ...] = ()
    bipartite: dict | None = field(default=None)

    def checks(self) -> list[Check]:
        out = [
            Check("TTM <exp(-beta.Q)> = 1", abs(self.ft_value - 1) <= IDENTITY_TOL,
                  abs(self.ft_value - 1), IDENTITY_TOL, "identity"),
            Check("TTM <Q_j> = tr[(rho_tau - rho_0) H_j]",
                  bool(np.max(np.abs(self.avg_heat - self.avg_heat_trace)) <= IDENTITY_TOL),
                  float(np.max(np.abs(self.avg_heat - self.avg_heat_trace))), IDENTITY_TOL, "identity"),
            Check("TTM sum_j beta_j <Q_j> >= 0", self.entropy_production >= -IDENTITY_TOL,
                  self.entropy_production, -IDENTITY_TOL, "bound"),
        ]
        if self.bipartite is not None and "ft_value" in self.bipartite:
            b = self.bipartite
            out.append(Check("bipartite <exp(-dbeta Q)> = 1", abs(b["ft_value"] - 1) <= IDENTITY_TOL,
                             abs(b["ft_value"] - 1), IDENTITY_TOL, "identity"))
            out.append(Check("bipartite dbeta <Q> >= 0", b["clausius_lhs"] >= -IDENTITY_TOL,
                             b["clausius_lhs"], -IDENTITY_TOL, "bound"))
        return out

    def as_dict(self) -> dict:
        d = {
            "avg_heat": [float(x) for x in self.avg_heat],
            "avg_heat_trace": [float(x) for x in self.avg_heat_trace],
            "ft_value": self.ft_value,
            "entropy_production": self.entropy_production,
            "heat_sum": self.heat_sum,
            "conservation_defect": self.conservation_defect,
            "dropped_mass": self.dropped_mass,
            "atom_count": self.atom_count,
            "degenerate_subsystems": list(self.degenerate_subsystems),
        }
        if self.bipartite is not None:
            d["bipartite"] = dict(self.bipartite)
        return d


def _ttm_report(prep, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> TtmReport:
    beta = np.asarray(prep.model.beta)
    dist = _ttm_distribution(prep, merge_tol, drop_tol)
    avg = dist.mean()
    report = TtmReport(
        avg_heat=avg,
        avg_heat_trace=trace_heat(prep),
        ft_value=dist.exp_average(beta),
        entropy_production=float(beta @ avg),
        heat_sum=float(avg.sum()),
        conservation_defect=dist.conservation_defect(),
        dropped_mass=dist.dropped_mass,
        atom_count=len(dist),
        degenerate_subsystems=prep.basis.degenerate_subsystems,
    )
    if dist.n == 2:
        try:
            ft, lhs = bipartite_reduction(dist, beta)
            report.bipartite = {"ft_value": ft, "clausius_lhs": lhs}
        except ConservationError as exc:
            report.bipartite = {"skipped": str(exc)}
    return report


def ttm_report(model: PumpModel, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> TtmReport:
    return _ttm_report(prepare(model, "ttm"), merge_tol, drop_tol)


def bipartite_reduction(dist: HeatDistribution, beta) -> tuple[float, float]:
    """Two-party form with Q = Q_1 = -Q_2: returns (<exp(-dbeta Q)>, dbeta <Q>)."""
    if dist.n != 2:
        raise NotBipartiteError(f"bipartite reduction needs 2 subsystems, got {dist.n}")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (2,):
        raise NotBipartiteError(f"need two inverse temperatures, got {beta.shape}")
    defect = dist.conservation_defect()
    if defect > IDENTITY_TOL:
        raise ConservationError(f"Q_1 + Q_2 != 0 on some atom (defect {defect:.3e})")
    dbeta = beta[0] - beta[1]
    heat = dist.q[:, 0]
    ft = float(dist.p @ np.exp(-dbeta * heat))
    return ft, float(dbeta * (dist.p @ heat))
