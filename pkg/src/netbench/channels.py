"""
Finite-dimensional quantum states, effects and channels.

Channels carry two representations: Kraus operators (construction and CPTP
validation) and the superoperator (composition, twirling). Vectorization is
row-stacking, ``vec(rho) = rho.reshape(-1)``, so that
``vec(A X B) = (A kron B^T) vec(X)`` and a Kraus set {K} has superoperator
``sum_k K kron conj(K)``.
"""

import logging
import math
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    InvariantViolationError,
)

logger = logging.getLogger(__name__)

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
COMPLETENESS_ATOL = 1e-10
SUPEROP_ATOL = 1e-12
KRAUS_CUTOFF = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


def _frozen(matrix, name: str) -> np.ndarray:
    array = np.array(matrix, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatchError(f"{name} must be a square matrix, got {array.shape}")
    array.setflags(write=False)
    return array


def _is_hermitian(matrix: np.ndarray, atol: float) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= atol)


def _square_root_dim(dim: int) -> int:
    local = math.isqrt(dim)
    if local * local != dim:
        raise DimensionMismatchError(f"dimension {dim} is not a perfect square")
    return local


class DensityMatrix:
    """State of a node's register: Hermitian, PSD, unit trace."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        self._matrix = _frozen(matrix, "density matrix")

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @classmethod
    def from_vector(cls, vector) -> "DensityMatrix":
        """Pure state |psi><psi| from a (not necessarily normalized) vector."""
        psi = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidParameterError("state vector must be nonzero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, dim: int, index: int = 0) -> "DensityMatrix":
        if not 0 <= index < dim:
            raise InvalidParameterError(f"basis index {index} outside [0, {dim})")
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[index, index] = 1.0
        return cls(matrix)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def maximally_entangled(cls, local_dim: int) -> "DensityMatrix":
        """|Phi><Phi| with |Phi> = sum_i |ii> / sqrt(d)."""
        return cls.from_vector(np.eye(local_dim, dtype=complex).reshape(-1))

    def expectation(self, operator) -> float:
        """Real part of tr[O rho]."""
        return float(np.real(np.trace(np.asarray(operator) @ self._matrix)))

    def validate(self) -> "DensityMatrix":
        m = self._matrix
        if not _is_hermitian(m, HERMITIAN_ATOL):
            raise InvariantViolationError("density matrix is not Hermitian")
        trace = np.trace(m)
        if abs(trace - 1.0) > TRACE_ATOL:
            raise InvariantViolationError(f"density matrix trace is {trace}, expected 1")
        lowest = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        if lowest < -PSD_ATOL:
            raise InvariantViolationError(f"density matrix has eigenvalue {lowest}")
        return self

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class Effect:
    """POVM element E with 0 <= E <= 1; the binary measurement is {E, 1 - E}."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        self._matrix = _frozen(matrix, "effect")

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @classmethod
    def projector(cls, dim: int, index: int = 0) -> "Effect":
        return cls(DensityMatrix.basis(dim, index).matrix)

    def validate(self) -> "Effect":
        m = self._matrix
        if not _is_hermitian(m, HERMITIAN_ATOL):
            raise InvariantViolationError("effect is not Hermitian")
        eigenvalues = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eigenvalues[0] < -PSD_ATOL or eigenvalues[-1] > 1 + PSD_ATOL:
            raise InvariantViolationError(
                f"effect eigenvalues {eigenvalues} outside [0, 1]"
            )
        return self

    def __repr__(self) -> str:
        return f"Effect(dim={self.dim})"


def kraus_to_superop(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(k, k.conj()) for k in kraus_ops)


def superop_to_choi(superop: np.ndarray) -> np.ndarray:
    """Unnormalized Choi matrix sum_ij |i><j| kron Lambda(|i><j|) (trace d)."""
    d = _square_root_dim(superop.shape[0])
    return superop.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_to_superop(choi: np.ndarray) -> np.ndarray:
    d = _square_root_dim(choi.shape[0])
    return choi.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def choi_to_kraus(choi: np.ndarray, cutoff: float = KRAUS_CUTOFF) -> List[np.ndarray]:
    d = _square_root_dim(choi.shape[0])
    eigenvalues, eigenvectors = np.linalg.eigh((choi + choi.conj().T) / 2)
    kraus = []
    for value, vector in zip(eigenvalues[::-1], eigenvectors.T[::-1]):
        if value <= cutoff:
            break
        kraus.append(np.sqrt(value) * vector.reshape(d, d).T)
    return kraus


class QuantumChannel:
    """
    Completely positive trace-preserving map on d x d matrices.

    Build with ``from_kraus`` or ``from_superop``; the missing representation
    is derived on first use and cached. Instances are immutable.
    """

    def __init__(
        self,
        dim: int,
        kraus_ops: Optional[Sequence[np.ndarray]] = None,
        superop: Optional[np.ndarray] = None,
    ):
        if kraus_ops is None and superop is None:
            raise InvalidParameterError("a channel needs Kraus operators or a superoperator")
        self._dim = int(dim)
        if kraus_ops is not None:
            ops = []
            for k in kraus_ops:
                op = _frozen(k, "Kraus operator")
                if op.shape[0] != self._dim:
                    raise DimensionMismatchError(
                        f"Kraus operator of dim {op.shape[0]} in a dim-{self._dim} channel"
                    )
                ops.append(op)
            if not ops:
                raise InvalidParameterError("empty Kraus set")
            self.__dict__["kraus_ops"] = tuple(ops)
        if superop is not None:
            s = _frozen(superop, "superoperator")
            if s.shape[0] != self._dim**2:
                raise DimensionMismatchError(
                    f"superoperator of shape {s.shape} in a dim-{self._dim} channel"
                )
            self.__dict__["superop"] = s

    @classmethod
    def from_kraus(cls, kraus_ops: Sequence) -> "QuantumChannel":
        ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
        if not ops:
            raise InvalidParameterError("empty Kraus set")
        return cls(ops[0].shape[0], kraus_ops=ops)

    @classmethod
    def from_superop(cls, superop) -> "QuantumChannel":
        s = np.asarray(superop, dtype=complex)
        return cls(_square_root_dim(s.shape[0]), superop=s)

    @classmethod
    def from_choi(cls, choi) -> "QuantumChannel":
        return cls.from_superop(choi_to_superop(np.asarray(choi, dtype=complex)))

    @property
    def dim(self) -> int:
        return self._dim

    @cached_property
    def kraus_ops(self) -> Tuple[np.ndarray, ...]:
        ops = []
        for k in choi_to_kraus(self.choi()):
            k.setflags(write=False)
            ops.append(k)
        if not ops:
            raise InvariantViolationError("superoperator has no positive Choi eigenvalue")
        return tuple(ops)

    @cached_property
    def superop(self) -> np.ndarray:
        s = kraus_to_superop(self.kraus_ops)
        s.setflags(write=False)
        return s

    def choi(self) -> np.ndarray:
        return superop_to_choi(self.superop)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        return apply(self, rho)

    def adjoint_apply(self, operator) -> np.ndarray:
        """Dual (Heisenberg-picture) action sum_k K^dagger O K."""
        op = np.asarray(operator, dtype=complex)
        if op.shape != (self._dim, self._dim):
            raise DimensionMismatchError(
                f"operator of shape {op.shape} for a dim-{self._dim} channel"
            )
        return (self.superop.conj().T @ op.reshape(-1)).reshape(self._dim, self._dim)

    def validate(self) -> "QuantumChannel":
        completeness = sum(k.conj().T @ k for k in self.kraus_ops)
        deviation = np.max(np.abs(completeness - np.eye(self._dim)))
        if deviation > COMPLETENESS_ATOL:
            raise InvariantViolationError(f"not trace preserving (deviation {deviation:.3e})")
        lowest = float(np.min(np.linalg.eigvalsh((self.choi() + self.choi().conj().T) / 2)))
        if lowest < -PSD_ATOL:
            raise InvariantViolationError(f"not completely positive (Choi eigenvalue {lowest:.3e})")
        mismatch = np.max(np.abs(kraus_to_superop(self.kraus_ops) - self.superop))
        if mismatch > SUPEROP_ATOL:
            raise InvariantViolationError(
                f"Kraus and superoperator forms disagree by {mismatch:.3e}"
            )
        return self

    def __matmul__(self, other: "QuantumChannel") -> "QuantumChannel":
        return compose(self, other)

    def __repr__(self) -> str:
        rank = len(self.__dict__["kraus_ops"]) if "kraus_ops" in self.__dict__ else "?"
        return f"QuantumChannel(dim={self._dim}, kraus_rank={rank})"


def apply(channel: QuantumChannel, rho: DensityMatrix) -> DensityMatrix:
    """Lambda(rho)."""
    if channel.dim != rho.dim:
        raise DimensionMismatchError(
            f"dim-{channel.dim} channel applied to dim-{rho.dim} state"
        )
    out = channel.superop @ rho.matrix.reshape(-1)
    return DensityMatrix(out.reshape(rho.dim, rho.dim))


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """The map rho -> second(first(rho))."""
    if second.dim != first.dim:
        raise DimensionMismatchError(
            f"cannot compose dim-{second.dim} with dim-{first.dim} channel"
        )
    return QuantumChannel.from_superop(second.superop @ first.superop)


def compose_all(channels: Iterable[QuantumChannel]) -> QuantumChannel:
    """Compose in application order: the first channel listed acts first."""
    result = None
    for channel in channels:
        result = channel if result is None else compose(channel, result)
    if result is None:
        raise InvalidParameterError("nothing to compose")
    return result


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(dim, kraus_ops=[np.eye(dim)], superop=np.eye(dim * dim))


def unitary_channel(unitary) -> QuantumChannel:
    u = np.asarray(unitary, dtype=complex)
    return QuantumChannel(u.shape[0], kraus_ops=[u], superop=np.kron(u, u.conj()))


def tensor_channel(first: QuantumChannel, second: QuantumChannel) -> QuantumChannel:
    """first kron second, acting on the first and second tensor factor."""
    ops = [np.kron(a, b) for a in first.kraus_ops for b in second.kraus_ops]
    return QuantumChannel.from_kraus(ops)


def weyl_operators(dim: int) -> List[np.ndarray]:
    """Clock-and-shift unitary basis X^a Z^b; the Paulis for dim 2."""
    if dim == 2:
        return [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def depolarizing_channel(dim: int, f: float) -> QuantumChannel:
    """Lambda(rho) = f rho + (1 - f) tr(rho) 1/d, for f in [-1/(d^2 - 1), 1]."""
    lower = -1.0 / (dim * dim - 1)
    if not lower - 1e-15 <= f <= 1.0 + 1e-15:
        raise InvalidParameterError(
            f"depolarizing fidelity {f} outside [{lower:.6g}, 1] for d={dim}"
        )
    f = float(min(max(f, lower), 1.0))
    unit = np.eye(dim).reshape(-1)
    superop = f * np.eye(dim * dim) + (1.0 - f) / dim * np.outer(unit, unit)

    rest = (1.0 - f) / dim**2
    weights = [f + rest] + [rest] * (dim * dim - 1)
    kraus = [
        np.sqrt(w) * w_op
        for w, w_op in zip(weights, weyl_operators(dim))
        if w > 0
    ]
    return QuantumChannel(dim, kraus_ops=kraus, superop=superop)


def amplitude_damping_channel(gamma: float) -> QuantumChannel:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameterError(f"damping probability {gamma} outside [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]])
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    return QuantumChannel.from_kraus([k0, k1])


def dephasing_channel(lam: float) -> QuantumChannel:
    """Multiplies the off-diagonal elements of a qubit by lam."""
    if not -1.0 <= lam <= 1.0:
        raise InvalidParameterError(f"coherence factor {lam} outside [-1, 1]")
    ops = [np.sqrt((1.0 + lam) / 2) * PAULI_I, np.sqrt((1.0 - lam) / 2) * PAULI_Z]
    return QuantumChannel.from_kraus([k for k in ops if np.any(k)])


def bit_flip_channel(p: float) -> QuantumChannel:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"flip probability {p} outside [0, 1]")
    ops = [np.sqrt(1.0 - p) * PAULI_I, np.sqrt(p) * PAULI_X]
    return QuantumChannel.from_kraus([k for k in ops if np.any(k)])


def _rate(duration: Optional[int]) -> float:
    return 0.0 if duration is None else 1.0 / duration


def decoherence_channel(
    t: int, t1: Optional[int], t2: Optional[int], n_qubits: int = 1
) -> QuantumChannel:
    """
    Memory noise after storing for time t: amplitude damping with
    gamma = 1 - exp(-t/T1), then pure dephasing so that coherences decay by
    exp(-t/T2) in total. Times share one unit (nanoseconds in this package);
    None means infinite. Multi-qubit registers decohere qubit-wise.
    """
    if t < 0:
        raise InvalidParameterError(f"negative storage time {t}")
    if (t2 is not None and t2 <= 0) or (t1 is not None and t1 <= 0):
        raise InvalidParameterError("T1 and T2 must be positive")
    rate_1, rate_2 = _rate(t1), _rate(t2)
    if rate_2 < rate_1 / 2:
        raise InvalidParameterError(f"T2={t2} exceeds 2*T1 (T1={t1})")

    gamma = -math.expm1(-t * rate_1)
    pure_dephasing = math.exp(-t * (rate_2 - rate_1 / 2))
    single = compose(dephasing_channel(pure_dephasing), amplitude_damping_channel(gamma))
    channel = single
    for _ in range(n_qubits - 1):
        channel = tensor_channel(channel, single)
    return channel


def entanglement_fidelity(channel: QuantumChannel) -> float:
    """<Phi| (1 kron Lambda)(Phi) |Phi> = tr(S) / d^2."""
    d = channel.dim
    return float(np.real(np.trace(channel.superop)) / (d * d))


def average_fidelity(channel: QuantumChannel) -> float:
    """Haar average of <psi|Lambda(psi)|psi>, via F = (d F_e + 1)/(d + 1)."""
    d = channel.dim
    return (d * entanglement_fidelity(channel) + 1.0) / (d + 1.0)


def depolarizing_fidelity(channel: QuantumChannel) -> float:
    d = channel.dim
    return (d * average_fidelity(channel) - 1.0) / (d - 1.0)


def average_fidelity_monte_carlo(
    channel: QuantumChannel, samples: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """
    Direct Monte-Carlo evaluation of the Haar integral over pure states.

    Returns:
        (mean, standard error)
    """
    d = channel.dim
    psi = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    rho = np.einsum("ni,nj->nij", psi, psi.conj()).reshape(samples, d * d)
    out = (rho @ channel.superop.T).reshape(samples, d, d)
    overlaps = np.real(np.einsum("ni,nij,nj->n", psi.conj(), out, psi))
    return float(overlaps.mean()), float(overlaps.std(ddof=1) / np.sqrt(samples))


def twirl(channel: QuantumChannel, group) -> QuantumChannel:
    """(1/|G|) sum_G G^dagger Lambda(G rho G^dagger) G over a gate group."""
    if group.dim != channel.dim:
        raise DimensionMismatchError(
            f"dim-{group.dim} group cannot twirl a dim-{channel.dim} channel"
        )
    conjugations = group.superops
    inner = np.matmul(channel.superop, conjugations)
    twirled = np.matmul(conjugations.conj().transpose(0, 2, 1), inner).mean(axis=0)
    return QuantumChannel.from_superop(twirled)


def singlet_fraction(state: DensityMatrix) -> float:
    """<Phi|rho|Phi> for a bipartite state on d x d."""
    d = _square_root_dim(state.dim)
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return float(np.real(phi.conj() @ state.matrix @ phi))


def swap_subsystems(state: DensityMatrix) -> DensityMatrix:
    """Exchange the two halves of a bipartite state."""
    d = _square_root_dim(state.dim)
    swapped = state.matrix.reshape(d, d, d, d).transpose(1, 0, 3, 2)
    return DensityMatrix(swapped.reshape(d * d, d * d))


def bright_state_resource(alpha: float) -> DensityMatrix:
    """Heralded-entanglement resource alpha |Phi><Phi| + (1 - alpha) |00><00|."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"bright state population {alpha} outside [0, 1]")
    phi = DensityMatrix.maximally_entangled(2).matrix
    return DensityMatrix(alpha * phi + (1.0 - alpha) * DensityMatrix.basis(4, 0).matrix)


def teleportation_channel(resource: DensityMatrix) -> QuantumChannel:
    """
    Effective channel of qubit teleportation through ``resource``.

    Simulates the circuit on input (x) resource: a Bell measurement on the
    input and the sender's half, then the outcome-conditioned Pauli
    correction on the receiver's half, averaged over outcomes. Local
    operations are noiseless.
    """
    d = _square_root_dim(resource.dim)
    if d != 2:
        raise InvalidParameterError(
            f"teleportation is only simulated for qubits, got local dimension {d}"
        )
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    # Outcome k projects onto (1 kron sigma_k)|Phi> and is undone by sigma_k^T.
    outcomes = [
        (np.kron(np.eye(d), sigma) @ phi, sigma.T) for sigma in PAULIS
    ]
    readouts = [(np.kron(bell.conj()[None, :], np.eye(d)), fix) for bell, fix in outcomes]

    superop = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            joint = np.kron(unit, resource.matrix)
            out = np.zeros((d, d), dtype=complex)
            for bra, fix in readouts:
                conditional = bra @ joint @ bra.conj().T
                out += fix @ conditional @ fix.conj().T
            superop[:, i * d + j] = out.reshape(-1)
    return QuantumChannel.from_superop(superop)


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: Optional[int] = None
) -> DensityMatrix:
    """Ginibre-ensemble mixed state."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho))


def random_channel(
    dim: int, rng: np.random.Generator, rank: Optional[int] = None
) -> QuantumChannel:
    """Random CPTP map from a Haar-ish Stinespring isometry."""
    rank = dim * dim if rank is None else rank
    g = rng.normal(size=(dim * rank, dim)) + 1j * rng.normal(size=(dim * rank, dim))
    isometry, _ = np.linalg.qr(g)
    return QuantumChannel.from_kraus(
        [isometry[k * dim:(k + 1) * dim, :] for k in range(rank)]
    )


def depolarizing_to_average(f: float, d: int) -> float:
    """F = ((d - 1) f + 1) / d."""
    if not -1.0 / (d * d - 1) - 1e-12 <= f <= 1.0 + 1e-12:
        raise InvalidParameterError(f"depolarizing fidelity {f} outside the CPTP range")
    return ((d - 1) * f + 1.0) / d


def average_to_depolarizing(average: float, d: int) -> float:
    """f = (d F - 1) / (d - 1)."""
    if not -1e-12 <= average <= 1.0 + 1e-12:
        raise InvalidParameterError(f"average fidelity {average} outside [0, 1]")
    return (d * average - 1.0) / (d - 1)
