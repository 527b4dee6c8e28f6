"""
Clifford groups on one and two qubits.

Groups are generated by breadth-first closure from the identity, so element
indices are stable across runs. Unitaries are stored with a canonical global
phase (first nonzero entry real and positive) and looked up by a hash of
their rounded entries.
"""

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .channels import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from .errors import GroupLookupError, InvalidParameterError, InvariantViolationError

logger = logging.getLogger(__name__)

PHASE_TOL = 1e-9
KEY_SCALE = 1e9
UNITARITY_ATOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.array([[1, 0], [0, 1j]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

SINGLE_QUBIT_GATES = {
    "I": PAULI_I,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
    "S": PHASE,
}


def canonical_phase(unitary: np.ndarray) -> np.ndarray:
    """Rescale so the first entry with modulus above PHASE_TOL is real positive."""
    flat = unitary.reshape(-1)
    pivot = int(np.argmax(np.abs(flat) > PHASE_TOL))
    return unitary * (abs(flat[pivot]) / flat[pivot])


def unitary_key(unitary: np.ndarray) -> bytes:
    """Phase-independent hash key of a unitary."""
    canonical = canonical_phase(unitary)
    parts = np.concatenate([canonical.real.reshape(-1), canonical.imag.reshape(-1)])
    return np.round(parts * KEY_SCALE).astype(np.int64).tobytes()


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """A group element: its position in the generation order and its unitary."""

    index: int
    unitary: np.ndarray

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    @property
    def superop(self) -> np.ndarray:
        return np.kron(self.unitary, self.unitary.conj())

    def __repr__(self) -> str:
        return f"CliffordElement(index={self.index}, dim={self.dim})"


class CliffordGroup:
    """
    A finite group of unitaries modulo global phase.

    Args:
        n_qubits: Register size the unitaries act on.
        unitaries: Elements in index order; identity expected first.
        name: Label used in logs and reprs.
    """

    def __init__(self, n_qubits: int, unitaries: Sequence[np.ndarray], name: str = "clifford"):
        self.n_qubits = n_qubits
        self.name = name
        elements: List[CliffordElement] = []
        lookup: Dict[bytes, int] = {}
        for u in unitaries:
            canonical = canonical_phase(np.asarray(u, dtype=complex))
            key = unitary_key(canonical)
            if key in lookup:
                raise InvalidParameterError(f"duplicate element in group {name!r}")
            canonical.setflags(write=False)
            lookup[key] = len(elements)
            elements.append(CliffordElement(len(elements), canonical))
        self.elements: Tuple[CliffordElement, ...] = tuple(elements)
        self.product_lookup = lookup

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, index: int) -> CliffordElement:
        return self.elements[index]

    def __iter__(self) -> Iterator[CliffordElement]:
        return iter(self.elements)

    def __repr__(self) -> str:
        return f"CliffordGroup(name={self.name!r}, n_qubits={self.n_qubits}, order={len(self)})"

    @cached_property
    def unitaries(self) -> np.ndarray:
        """Stacked element unitaries, shape (|G|, d, d)."""
        return np.stack([e.unitary for e in self.elements])

    @cached_property
    def superops(self) -> np.ndarray:
        """Stacked conjugation superoperators U kron conj(U), shape (|G|, d^2, d^2)."""
        u = self.unitaries
        n, d = u.shape[0], self.dim
        stacked = np.einsum("nij,nkl->nikjl", u, u.conj()).reshape(n, d * d, d * d)
        stacked.setflags(write=False)
        return stacked

    def index_of(self, unitary: np.ndarray) -> int:
        key = unitary_key(np.asarray(unitary, dtype=complex))
        try:
            return self.product_lookup[key]
        except KeyError:
            raise GroupLookupError(
                f"unitary is not an element of {self.name!r} (closure corrupted?)"
            ) from None

    def lookup(self, unitary: np.ndarray) -> CliffordElement:
        return self.elements[self.index_of(unitary)]

    def product_index(self, first: int, second: int) -> int:
        """Index of the element applying ``first`` and then ``second``."""
        return self.index_of(self.elements[second].unitary @ self.elements[first].unitary)

    def validate(self) -> "CliffordGroup":
        if not self.elements:
            raise InvariantViolationError(f"group {self.name!r} is empty")
        identity = np.eye(self.dim)
        if self.index_of(identity) != 0:
            raise InvariantViolationError("identity is not element 0")
        u = self.unitaries
        deviation = np.max(np.abs(np.einsum("nji,njk->nik", u.conj(), u) - identity))
        if deviation > UNITARITY_ATOL:
            raise InvariantViolationError(f"non-unitary element (deviation {deviation:.3e})")
        # Closure spot check against the first few elements.
        for element in self.elements:
            for other in self.elements[1:4]:
                self.index_of(element.unitary @ other.unitary)
        return self


def _generators(n_qubits: int) -> List[np.ndarray]:
    if n_qubits == 1:
        return [HADAMARD, PHASE]
    if n_qubits == 2:
        return [
            np.kron(HADAMARD, PAULI_I),
            np.kron(PAULI_I, HADAMARD),
            np.kron(PHASE, PAULI_I),
            np.kron(PAULI_I, PHASE),
            CNOT,
        ]
    raise InvalidParameterError(f"Clifford groups are built for 1 or 2 qubits, not {n_qubits}")


@lru_cache(maxsize=None)
def generate(n_qubits: int) -> CliffordGroup:
    """
    Generate the n-qubit Clifford group by closure.

    Args:
        n_qubits: 1 (24 elements) or 2 (11520 elements).

    Returns:
        The group, identity at index 0, other elements in breadth-first order.
    """
    generators = _generators(n_qubits)
    identity = np.eye(2**n_qubits, dtype=complex)
    found = [identity]
    seen = {unitary_key(identity)}
    frontier = deque([identity])
    while frontier:
        current = frontier.popleft()
        for g in generators:
            candidate = canonical_phase(g @ current)
            key = unitary_key(candidate)
            if key not in seen:
                seen.add(key)
                found.append(candidate)
                frontier.append(candidate)
    logger.debug(f"Generated {n_qubits}-qubit Clifford group with {len(found)} elements")
    return CliffordGroup(n_qubits, found, name=f"clifford-{n_qubits}")


@lru_cache(maxsize=None)
def pauli_group(n_qubits: int) -> CliffordGroup:
    """Pauli strings modulo phase: a unitary 1-design but not a 2-design."""
    singles = [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]
    strings = [np.eye(1, dtype=complex)]
    for _ in range(n_qubits):
        strings = [np.kron(s, p) for s in strings for p in singles]
    return CliffordGroup(n_qubits, strings, name=f"pauli-{n_qubits}")


def named_unitary(name: str) -> np.ndarray:
    """
    Unitary from a gate label: a string over I, X, Y, Z, H, S with one letter
    per qubit (``"X"``, ``"XX"``, ``"HI"``), or ``"CNOT"``.
    """
    label = name.upper()
    if label in ("CNOT", "CX"):
        return CNOT.copy()
    try:
        return reduce(np.kron, [SINGLE_QUBIT_GATES[c] for c in label])
    except (KeyError, TypeError):
        raise InvalidParameterError(f"unknown gate label {name!r}") from None


def sample(group: CliffordGroup, rng: np.random.Generator) -> CliffordElement:
    """Uniformly random element."""
    if len(group) == 0:
        raise InvalidParameterError(f"cannot sample from empty group {group.name!r}")
    return group[int(rng.integers(len(group)))]


def invert_sequence(group: CliffordGroup, sequence: Sequence[CliffordElement]) -> CliffordElement:
    """
    Element undoing a gate sequence.

    Args:
        group: Group the gates belong to.
        sequence: Gates in application order.

    Returns:
        The element equal to (G_n ... G_1)^dagger up to global phase.
    """
    if not sequence:
        raise InvalidParameterError("cannot invert an empty sequence")
    product = np.eye(group.dim, dtype=complex)
    for element in sequence:
        product = element.unitary @ product
    return group.lookup(product.conj().T)


def frame_potential_2(
    group: CliffordGroup,
    samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    chunk: int = 256,
) -> float:
    """
    Second frame potential (1/|G|^2) sum_{U,V} |tr(U^dagger V)|^4.

    Equals 2 for a unitary 2-design. Evaluated exactly over all pairs unless
    ``samples`` is given, in which case that many random pairs are averaged.
    """
    n = len(group)
    if n == 0:
        raise InvalidParameterError("frame potential of an empty group")
    flat = group.unitaries.reshape(n, -1)
    if samples is None:
        total = 0.0
        for start in range(0, n, chunk):
            overlaps = flat[start:start + chunk].conj() @ flat.T
            total += float(np.sum(np.abs(overlaps) ** 4))
        return total / (n * n)

    rng = np.random.default_rng() if rng is None else rng
    total = 0.0
    remaining = samples
    while remaining > 0:
        size = min(remaining, 100_000)
        left = flat[rng.integers(n, size=size)]
        right = flat[rng.integers(n, size=size)]
        total += float(np.sum(np.abs(np.sum(left.conj() * right, axis=1)) ** 4))
        remaining -= size
    return total / samples
