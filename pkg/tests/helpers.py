"""Model factories and independent oracles shared by the test modules."""

import itertools

import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from qpump.linalg import kron_all
from qpump.model import PAULI, PauliTerm, PumpModel, build_pauli_operator

X, Y, Z, I2 = PAULI["X"], PAULI["Y"], PAULI["Z"], PAULI["I"]

# filled by test_acceptance, printed by conftest.pytest_terminal_summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def xy_interaction(n=3, coupling=1.0):
    terms = [PauliTerm(coupling, ((i, a), (j, a))) for i, j in itertools.combinations(range(n), 2) for a in "XY"]
    return build_pauli_operator(terms, [2] * n)


def xy3_model(omega=1.0, beta=(1.0, 2.0, 3.0), tau=1.0):
    return PumpModel.create([2, 2, 2], [omega * Z] * 3, beta, xy_interaction(3), tau)


def exchange_model(omega=1.0, g=0.5, tau=1.0, beta=(1.0, 2.0)):
    return PumpModel.create([2, 2], [omega * Z] * 2, beta, xy_interaction(2, g), tau)


def _symmetric_interaction(rng, n, scale):
    terms = []
    for i, j in itertools.combinations(range(n), 2):
        a, b, c = rng.uniform(-1, 1, 3) * scale
        terms += [PauliTerm(a, ((i, "X"), (j, "X"))), PauliTerm(a, ((i, "Y"), (j, "Y"))),
                  PauliTerm(b, ((i, "X"), (j, "Y"))), PauliTerm(-b, ((i, "Y"), (j, "X"))),
                  PauliTerm(c, ((i, "Z"), (j, "Z")))]
    for j in range(n):
        terms.append(PauliTerm(rng.uniform(-1, 1) * scale, ((j, "Z"),)))
    return build_pauli_operator(terms, [2] * n)


def random_conserving_model(rng, n=None, coupling=1.0, rotate=None, segments=None):
    """Qubits with a common level splitting and excitation-number preserving
    couplings, optionally seen in a randomly rotated local frame."""
    n = n or int(rng.choice([2, 3]))
    omega = rng.uniform(0.3, 2.0)
    offsets = rng.uniform(-1, 1, n)
    local = [omega * Z + c * I2 for c in offsets]
    nseg = segments or int(rng.choice([1, 1, 2, 3]))
    durations = rng.uniform(0.1, 1.0, nseg)
    vs = [_symmetric_interaction(rng, n, coupling) for _ in range(nseg)]
    if rotate is None:
        rotate = bool(rng.integers(2))
    if rotate:
        rs = [unitary_group.rvs(2, random_state=rng) for _ in range(n)]
        local = [r @ h @ r.conj().T for r, h in zip(rs, local)]
        big = kron_all(rs)
        vs = [big @ v @ big.conj().T for v in vs]
        local = [0.5 * (h + h.conj().T) for h in local]
        vs = [0.5 * (v + v.conj().T) for v in vs]
    beta = rng.uniform(0.1, 3.0, n)
    tau = float(sum(durations))
    return PumpModel.create([2] * n, local, beta, list(zip(vs, durations)), tau)


def random_nonconserving_model(rng, n=None):
    n = n or int(rng.choice([2, 3]))
    d = 2 ** n
    local = [rng.uniform(0.3, 2.0) * Z + rng.uniform(-1, 1) * X for _ in range(n)]
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    v = 0.5 * (a + a.conj().T)
    return PumpModel.create([2] * n, local, rng.uniform(0.1, 3.0, n), v, rng.uniform(0.2, 2.0), conservation="warn")


def strong_coupling_model(rng, n=3, ratio=10.0):
    m = random_conserving_model(rng, n=n, coupling=1.0, rotate=True, segments=1)
    h = sum(np.kron(np.kron(np.eye(2 ** j), hj), np.eye(2 ** (n - j - 1))) for j, hj in enumerate(m.local_h))
    v = m.segments[0].matrix
    scale = ratio * np.linalg.norm(h) / np.linalg.norm(v) * 1.5
    return m.replace(segments=((scale * v, m.tau),))


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_density(rng, d, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def computational_propagator(model):
    """U by scipy.linalg.expm, independent of the package's eigen-based path."""
    h = sum(np.kron(np.kron(np.eye(int(np.prod(model.dims[:j]))), hj), np.eye(int(np.prod(model.dims[j + 1:]))))
            for j, hj in enumerate(model.local_h))
    u = np.eye(model.total_dim, dtype=complex)
    for v, dt in model.segments:
        u = expm(-1j * (h + v) * dt) @ u
    return u


def sample_ttm(levels_energies, weights, transition, shots, rng):
    """Simulate both projective measurements shot by shot, in aggregate.

    First outcome counts are multinomial in the Gibbs weights; for each first
    outcome the second is multinomial in that column of the transition matrix.
    Returns (q rows, counts).
    """
    first = rng.multinomial(shots, weights)
    qs, counts = [], []
    for a, na in enumerate(first):
        if na == 0:
            continue
        col = transition[:, a] / transition[:, a].sum()
        second = rng.multinomial(na, col)
        for b in np.flatnonzero(second):
            qs.append(levels_energies[b] - levels_energies[a])
            counts.append(second[b])
    return np.array(qs), np.array(counts)
