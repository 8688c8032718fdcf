"""Formal checks: privacy conditions, mixedness, and the qubit no-go.

The privacy conditions require post-vote states to have unit-modulus
overlap exactly when their tallies agree and zero overlap otherwise.
For two qubit voters those conditions reduce to four expectation-value
equations with no solution; ``qubit_nogo_search`` witnesses that
numerically by minimizing the summed violation, while
``qutrit_solution_check`` confirms the explicit qutrit solution reaches
zero residual.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .ballots import prepare_tb_ballot, shift_unitary
from .errors import ConfigurationError
from .qstate import PureState, apply_local, inner, reduced_density

SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)
I2 = np.eye(2, dtype=complex)

ENUMERATION_GUARD = 16


@dataclass(frozen=True)
class QubitSchemeParams:
    """su(2)-parametrized vote-difference operators plus a shared state.

    U = I cos(nu) + i (m_hat . sigma) sin(nu), V likewise with theta and
    n_hat; omega is the two-qubit ballot state.
    """

    nu: float
    m_hat: np.ndarray
    theta: float
    n_hat: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m_hat, dtype=float)
        n = np.asarray(self.n_hat, dtype=float)
        w = np.asarray(self.omega, dtype=complex)
        if m.shape != (3,) or n.shape != (3,) or w.shape != (4,):
            raise ConfigurationError("need 3-vectors m_hat, n_hat and a 4-vector omega")
        if abs(np.linalg.norm(m) - 1) > 1e-10 or abs(np.linalg.norm(n) - 1) > 1e-10:
            raise ConfigurationError("m_hat and n_hat must be unit vectors")
        if abs(np.linalg.norm(w) - 1) > 1e-10:
            raise ConfigurationError("omega must be normalized")
        object.__setattr__(self, "m_hat", m)
        object.__setattr__(self, "n_hat", n)
        object.__setattr__(self, "omega", w)

    def u_mat(self) -> np.ndarray:
        return np.cos(self.nu) * I2 + 1j * np.sin(self.nu) * np.tensordot(self.m_hat, SIGMA, 1)

    def v_mat(self) -> np.ndarray:
        return np.cos(self.theta) * I2 + 1j * np.sin(self.theta) * np.tensordot(self.n_hat, SIGMA, 1)


@dataclass
class PrivacyReport:
    """Worst-case deviations from the overlap conditions."""

    scheme: str
    d: int
    N: int
    tolerance: float
    passed: bool
    worst_same_tally_deviation: float
    worst_cross_tally_overlap: float
    same_tally_pairs: int
    cross_tally_pairs: int

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme, "d": self.d, "N": self.N,
            "tolerance": self.tolerance, "passed": self.passed,
            "worst_same_tally_deviation": self.worst_same_tally_deviation,
            "worst_cross_tally_overlap": self.worst_cross_tally_overlap,
            "same_tally_pairs": self.same_tally_pairs,
            "cross_tally_pairs": self.cross_tally_pairs,
        }


def _db_post_vote_vector(d: int, weight: int) -> np.ndarray:
    """Correlated-basis amplitudes of the DB state after ``weight`` yes votes."""
    k = np.arange(d)
    return np.exp(2j * np.pi * k * weight / d) / math.sqrt(d)


def _tb_post_vote_state(d: int, weight: int) -> PureState:
    state = prepare_tb_ballot(d)
    return apply_local(state, 1, shift_unitary(d).power(weight))


def check_privacy(scheme: str, d: int, N: int, tolerance: float = 1e-10) -> PrivacyReport:
    """Exhaustively test the overlap conditions over all 2^N vote vectors.

    States of equal tally must coincide up to phase (checked against a
    class representative, which is equivalent for unit-modulus overlaps)
    and states of different tally must be orthogonal. The tally map is
    the plain yes count, so undersized d is reported as a failure, not
    an error: aliased tallies produce unit cross-tally overlaps.
    """
    scheme = str(scheme).upper()
    if scheme not in ("DB", "TB"):
        raise ConfigurationError(f"check_privacy supports DB and TB, got {scheme}")
    if N > ENUMERATION_GUARD:
        raise ConfigurationError(
            f"refusing to enumerate 2^{N} vote vectors (guard is N <= {ENUMERATION_GUARD})")
    if d < 2 or N < 1:
        raise ConfigurationError(f"need d >= 2 and N >= 1, got d={d}, N={N}")

    if scheme == "DB":
        def build(weight):
            return _db_post_vote_vector(d, weight)

        def overlap(a, b):
            return complex(np.vdot(a, b))
    else:
        def build(weight):
            return _tb_post_vote_state(d, weight)

        def overlap(a, b):
            return inner(a, b)

    # All vote vectors of one weight produce the same state, so each
    # weight class is checked member-against-representative; a unit
    # modulus there makes every within-class pair unit by transitivity.
    reps = {w: build(w) for w in range(N + 1)}
    worst_same, same_pairs = 0.0, 0
    for pattern in range(2 ** N):
        weight = bin(pattern).count("1")
        state = build(weight)
        worst_same = max(worst_same, abs(1 - abs(overlap(reps[weight], state))))
        same_pairs += 1
    worst_cross, cross_pairs = 0.0, 0
    for w1 in range(N + 1):
        for w2 in range(w1 + 1, N + 1):
            worst_cross = max(worst_cross, abs(overlap(reps[w1], reps[w2])))
            cross_pairs += 1
    passed = worst_same <= tolerance and worst_cross <= tolerance
    return PrivacyReport(scheme, d, N, tolerance, passed, float(worst_same),
                         float(worst_cross), same_pairs, cross_pairs)


def check_reduced_identity(state: PureState, sites) -> float:
    """Max-norm distance of the reduced density matrix from I/D."""
    sites = [int(s) for s in sites]
    if len(sites) == 0:
        raise ConfigurationError("need at least one site to reduce onto")
    if len(set(sites)) == state.num_sites:
        raise ConfigurationError("subset must be strict; a pure state is never maximally mixed")
    rho = reduced_density(state, sites)
    return float(np.max(np.abs(rho.mat - np.eye(rho.dim) / rho.dim)))


def qubit_residual(params: QubitSchemeParams) -> float:
    return general_residual(params.u_mat(), params.v_mat(), params.omega)


def _unpack(x: np.ndarray) -> QubitSchemeParams:
    m = x[2:5]
    n = x[5:8]
    w = x[8:16].reshape(2, 4)
    omega = w[0] + 1j * w[1]
    return QubitSchemeParams(
        nu=float(x[0]),
        m_hat=m / max(np.linalg.norm(m), 1e-12),
        theta=float(x[1]),
        n_hat=n / max(np.linalg.norm(n), 1e-12),
        omega=omega / max(np.linalg.norm(omega), 1e-12),
    )


def qubit_nogo_search(restarts: int = 200, iterations: int = 500,
                      rng: np.random.Generator | None = None) -> tuple[float, QubitSchemeParams]:
    """Multi-start local descent over all two-qubit voting schemes.

    The residual cannot reach zero for qubits; the returned minimum is
    the numerical witness. Gradients are finite-difference, restarts
    draw independent starting points from ``rng``.
    """
    if restarts < 1:
        raise ConfigurationError(f"restarts must be >= 1, got {restarts}")
    if rng is None:
        rng = np.random.default_rng(0)

    def objective(x):
        return qubit_residual(_unpack(x))

    best_val, best_x = np.inf, None
    for _ in range(int(restarts)):
        x0 = np.empty(16)
        x0[0:2] = rng.uniform(0, 2 * np.pi, 2)
        x0[2:] = rng.standard_normal(14)
        res = minimize(objective, x0, method="L-BFGS-B",
                       options={"maxiter": int(iterations)})
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    return best_val, _unpack(best_x)


def qutrit_solution_check() -> float:
    """Residual of the explicit qutrit scheme; zero up to rounding.

    U has eigenphases 2pi/3, 4pi/3, 2pi on the correlated eigenbasis of
    the maximally entangled two-qutrit ballot.
    """
    u = np.diag(np.exp(1j * np.array([2 * np.pi / 3, 4 * np.pi / 3, 2 * np.pi])))
    omega = np.zeros(9, dtype=complex)
    omega[[0, 4, 8]] = 1 / math.sqrt(3)
    return general_residual(u, u, omega)


def general_residual(u_mat: np.ndarray, v_mat: np.ndarray, omega: np.ndarray) -> float:
    """privacy_residual for arbitrary equal-dimension voter operators."""
    u = np.asarray(u_mat, dtype=complex)
    v = np.asarray(v_mat, dtype=complex)
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    du, dv = u.shape[0], v.shape[0]
    a = np.vdot(omega, np.kron(u, np.eye(dv)) @ omega)
    b = np.vdot(omega, np.kron(np.eye(du), v) @ omega)
    c = np.vdot(omega, np.kron(u, v) @ omega)
    e = np.vdot(omega, np.kron(u, v.conj().T) @ omega)
    return float(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(1 - e) ** 2)


@dataclass
class AnsatzResult:
    """Residuals of the eigenbasis conditions for a candidate scheme."""

    second_harmonic: float
    first_harmonic: float
    normalization: float
    passed: bool

    def to_dict(self) -> dict:
        return {"second_harmonic": self.second_harmonic,
                "first_harmonic": self.first_harmonic,
                "normalization": self.normalization, "passed": self.passed}


def ansatz_check(d: int, etas, alphas, tolerance: float = 1e-10) -> AnsatzResult:
    """Test eigenphases and weights against the correlated-state conditions.

    With U = sum_j e^{i eta_j}|j><j| and the ballot carrying weights
    |alpha_j|^2 on |j>|j>, privacy requires sum |a_j|^2 e^{2i eta_j} = 0,
    sum |a_j|^2 e^{i eta_j} = 0, and sum |a_j|^2 = 1.
    """
    etas = np.asarray(etas, dtype=float)
    weights = np.abs(np.asarray(alphas, dtype=complex)) ** 2
    if etas.shape != (d,) or weights.shape != (d,):
        raise ConfigurationError(f"need {d} eigenphases and {d} moduli")
    second = float(abs(np.sum(weights * np.exp(2j * etas))))
    first = float(abs(np.sum(weights * np.exp(1j * etas))))
    norm = float(abs(np.sum(weights) - 1.0))
    passed = second <= tolerance and first <= tolerance and norm <= tolerance
    return AnsatzResult(second, first, norm, bool(passed))
