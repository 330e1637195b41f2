"""One-time measurement scheme and the conditional thermal state.

Only the initial energy is measured. The heat of a trajectory starting in
product level ``E`` is the conditional expectation of the final local
energies minus ``E``. Entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import linalg
from .model import Check, PumpModel, prepare
from .ttm import IDENTITY_TOL, MERGE_TOL, HeatDistribution, merge_atoms, trace_heat

JENSEN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConditionalEnergies:
    """Per product level: initial ``energies``, conditional final energies
    ``tilde_e`` and conditional heats ``tilde_q = tilde_e - energies``."""

    energies: np.ndarray
    tilde_e: np.ndarray
    tilde_q: np.ndarray

    def conservation_defect(self) -> float:
        return float(np.max(np.abs(self.tilde_q.sum(axis=1))))


def _conditional_energies(prep) -> ConditionalEnergies:
    evolved = prep.u @ prep.basis.states
    tilde_e = np.stack(
        [np.einsum("ik,ij,jk->k", evolved.conj(), h, evolved).real for h in prep.h_local],
        axis=1,
    )
    energies = prep.basis.energies
    return ConditionalEnergies(energies, tilde_e, tilde_e - energies)


def conditional_energies(model: PumpModel) -> ConditionalEnergies:
    return _conditional_energies(prepare(model, "otm"))


def otm_heat_distribution(model: PumpModel, merge_tol: float = MERGE_TOL) -> HeatDistribution:
    prep = prepare(model, "otm")
    cond = _conditional_energies(prep)
    q, p = merge_atoms(cond.tilde_q, np.exp(prep.level_log_weights), merge_tol)
    return HeatDistribution(q, p, "OTM")


def _log_conditional_partition(prep, cond: ConditionalEnergies) -> float:
    beta = np.asarray(prep.model.beta)
    return float(logsumexp(-(cond.tilde_e @ beta)))


def conditional_partition(model: PumpModel) -> float:
    """Normalization ``sum_E exp(-beta . tilde_E(E))`` of the conditional thermal state."""
    prep = prepare(model, "otm")
    return float(np.exp(_log_conditional_partition(prep, _conditional_energies(prep))))


def _conditional_thermal_state(prep, cond: ConditionalEnergies) -> np.ndarray:
    beta = np.asarray(prep.model.beta)
    log_w = -(cond.tilde_e @ beta)
    w = np.exp(log_w - logsumexp(log_w))
    evolved = prep.u @ prep.basis.states
    rho = (evolved * w[None, :]) @ evolved.conj().T
    return 0.5 * (rho + rho.conj().T)


def conditional_thermal_state(model: PumpModel) -> np.ndarray:
    prep = prepare(model, "otm")
    return _conditional_thermal_state(prep, _conditional_energies(prep))


def log_gibbs(prep) -> np.ndarray:
    """ln rho_0 = -sum_j (beta_j H_j + ln Z_j).

    Written out directly rather than through ``log_psd``: rho_0 is full rank,
    but at large beta*E its smallest eigenvalues fall under the support
    threshold, and clipping them would corrupt the cross-entropy term.
    """
    model = prep.model
    eye = np.eye(model.total_dim)
    return -sum(b * h + np.log(z) * eye for b, h, z in zip(model.beta, prep.h_local, prep.gibbs.z))


def multipartite_mutual_information(rho: np.ndarray, dims) -> tuple[float, list[np.ndarray]]:
    """sum_j S(rho_j) - S(rho) together with the single-subsystem marginals."""
    marginals = [linalg.partial_trace(rho, [j], dims) for j in range(len(dims))]
    info = sum(linalg.von_neumann_entropy(m) for m in marginals) - linalg.von_neumann_entropy(rho)
    return float(info), marginals


@dataclass
class OtmReport:
    avg_heat: np.ndarray
    avg_heat_trace: np.ndarray
    ft_value: float
    ft_value_partition: float
    rel_entropy: float
    rel_entropy_closed_form: float
    mutual_info: float
    gamma_rel_entropy: float
    entropy_production: float
    delta: float
    level_conservation_defect: float
    degenerate_subsystems: tuple[int, ...] = ()

    def checks(self) -> list[Check]:
        def close(name, a, b, tol=IDENTITY_TOL):
            return Check(name, abs(a - b) <= tol, abs(a - b), tol, "identity")

        def atleast(name, a, tol=IDENTITY_TOL):
            return Check(name, a >= -tol, a, -tol, "bound")

        heat_gap = float(np.max(np.abs(self.avg_heat - self.avg_heat_trace)))
        jensen_floor = float(np.exp(-self.entropy_production))
        return [
            close("OTM <exp(-beta.Q)> = |Z~|/|Z|", self.ft_value, self.ft_value_partition),
            close("OTM <exp(-beta.Q)> = exp(-S(rho~ || rho_0))", self.ft_value, float(np.exp(-self.rel_entropy))),
            close("S(rho~ || rho_0) trace formula = -ln(|Z~|/|Z|)", self.rel_entropy, self.rel_entropy_closed_form),
            Check("OTM <Q_j> = tr[(rho_tau - rho_0) H_j]", heat_gap <= IDENTITY_TOL, heat_gap, IDENTITY_TOL, "identity"),
            Check("per-level sum_j Q~_j = 0", self.level_conservation_defect <= IDENTITY_TOL,
                  self.level_conservation_defect, IDENTITY_TOL, "identity"),
            close("S(rho~ || rho_0) = I~ + S(gamma || rho_0)", self.rel_entropy, self.mutual_info + self.gamma_rel_entropy),
            atleast("delta = sum_j beta_j <Q_j> - S(rho~ || rho_0) >= 0", self.delta),
            atleast("S(rho~ || rho_0) - I~ >= 0", self.rel_entropy - self.mutual_info),
            atleast("sum_j beta_j <Q_j> - I~ >= 0", self.entropy_production - self.mutual_info),
            atleast("I~ >= 0", self.mutual_info),
            atleast("S(gamma || rho_0) >= 0", self.gamma_rel_entropy),
            Check("Jensen: <exp(-beta.Q)> >= exp(-sum_j beta_j <Q_j>)",
                  self.ft_value >= jensen_floor * (1 - JENSEN_RTOL), self.ft_value - jensen_floor, 0.0, "bound"),
        ]

    def as_dict(self) -> dict:
        return {
            "avg_heat": [float(x) for x in self.avg_heat],
            "avg_heat_trace": [float(x) for x in self.avg_heat_trace],
            "ft_value": self.ft_value,
            "ft_value_partition": self.ft_value_partition,
            "rel_entropy": self.rel_entropy,
            "rel_entropy_closed_form": self.rel_entropy_closed_form,
            "mutual_info": self.mutual_info,
            "gamma_rel_entropy": self.gamma_rel_entropy,
            "entropy_production": self.entropy_production,
            "delta": self.delta,
            "level_conservation_defect": self.level_conservation_defect,
            "degenerate_subsystems": list(self.degenerate_subsystems),
        }


def _otm_report(prep, merge_tol: float = MERGE_TOL) -> OtmReport:
    model = prep.model
    beta = np.asarray(model.beta)
    cond = _conditional_energies(prep)
    q, p = merge_atoms(cond.tilde_q, np.exp(prep.level_log_weights), merge_tol)
    dist = HeatDistribution(q, p, "OTM")
    avg = dist.mean()

    log_z = float(np.sum(np.log(prep.gibbs.z)))
    log_z_cond = _log_conditional_partition(prep, cond)
    rho_cond = _conditional_thermal_state(prep, cond)
    ln_rho0 = log_gibbs(prep)
    rel = linalg.relative_entropy(rho_cond, None, log_sigma=ln_rho0)
    info, marginals = multipartite_mutual_information(rho_cond, model.dims)
    gamma = linalg.kron_all(marginals)
    gamma_rel = linalg.relative_entropy(gamma, None, log_sigma=ln_rho0)
    production = float(beta @ avg)

    return OtmReport(
        avg_heat=avg,
        avg_heat_trace=trace_heat(prep),
        ft_value=dist.exp_average(beta),
        ft_value_partition=float(np.exp(log_z_cond - log_z)),
        rel_entropy=rel,
        rel_entropy_closed_form=log_z - log_z_cond,
        mutual_info=info,
        gamma_rel_entropy=gamma_rel,
        entropy_production=production,
        delta=production - rel,
        level_conservation_defect=cond.conservation_defect(),
        degenerate_subsystems=prep.basis.degenerate_subsystems,
    )


def otm_report(model: PumpModel, merge_tol: float = MERGE_TOL) -> OtmReport:
    return _otm_report(prepare(model, "otm"), merge_tol)
