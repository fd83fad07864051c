"""Finite qubit unitary designs and the frame-potential certificate."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import dagger, tolerances
from .errors import CertificationFailed, DimensionMismatch, NotUnitary
from .sampling import RngLike, Unitary, as_generator

CERT_TOL = 1e-8
STRICT_GAP = 1e-3

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Representative of u modulo global phase: first sizeable entry made real positive."""
    flat = u.ravel()
    k = int(np.flatnonzero(np.abs(flat) > 1e-9)[0])
    return u * (abs(flat[k]) / flat[k])


@lru_cache(maxsize=None)
def haar_frame_potential(d: int, t: int) -> int:
    """Haar integral of |Tr U|^(2t) over U(d).

    Equals the number of permutations of t elements without an increasing
    subsequence longer than d; this is t! only when d >= t.
    """
    if d >= t:
        return math.factorial(t)
    count = 0
    for perm in itertools.permutations(range(t)):
        tails: list[int] = []
        for v in perm:
            i = np.searchsorted(tails, v)
            if i == len(tails):
                tails.append(v)
            else:
                tails[i] = v
        count += len(tails) <= d
    return count


def frame_potential(unitaries, t: int) -> float:
    """(1/|S|^2) sum over ordered pairs of |Tr(U^dagger V)|^(2t)."""
    if t < 1:
        raise ValueError("frame potential order must be >= 1")
    u = np.asarray(unitaries.elements if isinstance(unitaries, UnitarySet) else unitaries)
    if u.ndim == 2:
        u = u[None]
    if u.shape[0] == 0:
        raise ValueError("empty unitary set")
    # Tr(U_i^dagger U_j) for all pairs
    overlaps = np.einsum("iab,jab->ij", np.conj(u), u)
    return float(np.mean(np.abs(overlaps) ** (2 * t)))


@dataclass(frozen=True, eq=False)
class UnitarySet:
    elements: np.ndarray
    label: str = "custom"
    claimed_order: int = 1

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2] or e.shape[0] == 0:
            raise DimensionMismatch(f"elements must have shape (n, d, d), got {e.shape}")
        dev = float(np.max(np.abs(dagger(e) @ e - np.eye(e.shape[1]))))
        if dev > tolerances().unitary:
            raise NotUnitary(f"set element not unitary (deviation {dev:.3e})")
        e.setflags(write=False)
        object.__setattr__(self, "elements", e)

    @property
    def d(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def certificate(self, t_max: int | None = None) -> dict[int, tuple[float, int]]:
        """Map t -> (frame potential, Haar value) for t = 1..t_max (default claimed order + 1)."""
        t_max = self.claimed_order + 1 if t_max is None else t_max
        return {t: (frame_potential(self, t), haar_frame_potential(self.d, t))
                for t in range(1, t_max + 1)}


def certify(us: UnitarySet, strict: bool = False) -> UnitarySet:
    """Raise CertificationFailed unless ``us`` matches Haar moments up to its claimed order.

    With ``strict`` the next order must exceed the Haar value by STRICT_GAP.
    """
    for t, (fp, haar) in us.certificate().items():
        if t <= us.claimed_order and abs(fp - haar) > CERT_TOL:
            raise CertificationFailed(
                f"{us.label}: frame potential at t={t} is {fp:.12g}, Haar value {haar}")
        if strict and t == us.claimed_order + 1 and fp - haar < STRICT_GAP:
            raise CertificationFailed(
                f"{us.label}: claimed order {us.claimed_order} is not tight (t={t}: {fp:.12g})")
    return us


def pauli_group() -> UnitarySet:
    return UnitarySet(np.stack([I2, X, Y, Z]), label="pauli", claimed_order=1)


def qubit_2design() -> UnitarySet:
    """Binary tetrahedral group mod phase: Paulis times powers of an X->Y->Z cycle."""
    cycle = canonical_phase(H @ dagger(S))
    elems = [canonical_phase(p @ np.linalg.matrix_power(cycle, k))
             for k in range(3) for p in (I2, X, Y, Z)]
    return certify(UnitarySet(np.stack(elems), label="qubit-2design", claimed_order=2))


def clifford_group_qubit() -> UnitarySet:
    """The 24 single-qubit Cliffords mod phase, by closure of <H, S>."""
    elems = [canonical_phase(I2)]
    frontier = list(elems)
    while frontier:
        fresh = []
        for u in frontier:
            for g in (H, S):
                v = canonical_phase(g @ u)
                if not any(np.allclose(v, w, atol=1e-9) for w in elems):
                    elems.append(v)
                    fresh.append(v)
        frontier = fresh
    return certify(UnitarySet(np.stack(elems), label="clifford", claimed_order=3))


NAMED_SETS = {
    "pauli": pauli_group,
    "2design": qubit_2design,
    "clifford": clifford_group_qubit,
}


def named_set(name: str) -> UnitarySet:
    try:
        return NAMED_SETS[name]()
    except KeyError:
        raise ValueError(f"unknown design {name!r}; choose from {sorted(NAMED_SETS)}") from None


def sample_from_set(us: UnitarySet, rng: RngLike) -> Unitary:
    return Unitary(us.elements[as_generator(rng).integers(len(us))])


def unitary_set_from_json(data: dict) -> UnitarySet:
    """Import ``{"elements": [[[re, im], ...], ...], "claimed_order": t}`` and certify it."""
    try:
        arr = np.asarray(data["elements"], dtype=float)
        order = int(data["claimed_order"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed unitary set JSON: {exc}") from exc
    if arr.ndim != 4 or arr.shape[-1] != 2:
        raise DimensionMismatch(f"elements array has shape {arr.shape}, expected (n, d, d, 2)")
    us = UnitarySet(arr[..., 0] + 1j * arr[..., 1],
                    label=data.get("label", "custom"), claimed_order=order)
    return certify(us)


def unitary_set_to_json(us: UnitarySet) -> dict:
    e = us.elements
    return {"label": us.label, "claimed_order": us.claimed_order,
            "elements": np.stack([e.real, e.imag], axis=-1).tolist()}


def load_unitary_set(path) -> UnitarySet:
    return unitary_set_from_json(json.loads(Path(path).read_text()))


def is_closed_mod_phase(us: UnitarySet, atol: float = 1e-9) -> bool:
    canon = [canonical_phase(u) for u in us.elements]
    for u in us.elements:
        for v in us.elements:
            w = canonical_phase(u @ v)
            if not any(np.allclose(w, c, atol=atol) for c in canon):
                return False
    return True
