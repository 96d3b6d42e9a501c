"""Symmetric Clifford systems on R^{2l} and the Clifford sphere.

A symmetric Clifford system is a list P_0, ..., P_m of symmetric matrices
with P_a P_b + P_b P_a = 2 delta_ab I.  It is built here from m - 1
anticommuting complex structures E_i (skew, E_i^2 = -I) on R^l:

    P_0 = [[I, 0], [0, -I]],  P_1 = [[0, I], [I, 0]],  P_{1+i} = [[0, E_i], [-E_i, 0]].

The E_i for m <= 8 are left multiplications by imaginary units of the
Cayley-Dickson algebra of dimension delta(m) (complex numbers, quaternions,
octonions); larger m use the mod-8 periodicity, tensoring with eight
anticommuting structures on R^16.  All entries are exactly 0 or +-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, InvalidFkmPair
from .report import VerificationReport

_DELTA_TABLE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 8, 6: 8, 7: 8, 8: 8}

REALIZATION = (
    "P0=diag(I,-I), P1=antidiag(I,I), P_{1+i}=[[0,E_i],[-E_i,0]] with E_i "
    "Cayley-Dickson left multiplications (m<=8), mod-8 periodicity beyond; "
    "multiplicity k as block-diagonal copies"
)


def delta(m: int) -> int:
    """Dimension of an irreducible module of the Clifford algebra C_{m-1}."""
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 1:
        raise InvalidArgument(f"delta(m) needs an integer m >= 1, got {m!r}")
    m = int(m)
    if m <= 8:
        return _DELTA_TABLE[m]
    return 16 * delta(m - 8)


def _cd_conj(a: np.ndarray) -> np.ndarray:
    out = -a.copy()
    out[0] = a[0]
    return out


def _cd_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product (a1, a2)(b1, b2) = (a1 b1 - b2* a2, b2 a1 + a2 b1*)."""
    n = a.shape[0]
    if n == 1:
        return a * b
    h = n // 2
    a1, a2, b1, b2 = a[:h], a[h:], b[:h], b[h:]
    return np.concatenate([
        _cd_mul(a1, b1) - _cd_mul(_cd_conj(b2), a2),
        _cd_mul(b2, a1) + _cd_mul(a2, _cd_conj(b1)),
    ])


def _left_mult(unit: int, dim: int) -> np.ndarray:
    basis = np.eye(dim)
    u = basis[unit]
    return np.column_stack([_cd_mul(u, basis[j]) for j in range(dim)])


@lru_cache(maxsize=None)
def _structures_r16() -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    # eight anticommuting complex structures on R^16 and a symmetric involution
    # anticommuting with all of them
    octo = [_left_mult(i, 8) for i in range(1, 8)]
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    j2 = np.array([[0.0, -1.0], [1.0, 0.0]])
    gens = [np.kron(f, sz) for f in octo] + [np.kron(np.eye(8), j2)]
    omega = np.kron(np.eye(8), sx)
    return tuple(gens), omega


def complex_structures(m: int) -> list[np.ndarray]:
    """m - 1 anticommuting skew matrices squaring to -I on R^{delta(m)}."""
    d = delta(m)
    if m <= 8:
        return [_left_mult(i, d) for i in range(1, m)]
    base = complex_structures(m - 8)
    d0 = delta(m - 8)
    gens, omega = _structures_r16()
    return [np.kron(e, omega) for e in base] + [np.kron(np.eye(d0), g) for g in gens]


@dataclass(frozen=True)
class CliffordSystem:
    m: int
    k: int
    l: int
    matrices: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return 2 * self.l

    @property
    def stack(self) -> np.ndarray:
        """Matrices as one (m+1, 2l, 2l) array."""
        return np.stack(self.matrices)

    def combine(self, a) -> np.ndarray:
        return np.tensordot(np.asarray(a, dtype=float), self.stack, axes=1)

    def coefficients(self, A: np.ndarray) -> np.ndarray:
        """Coordinates of A in the orthonormal basis P_a (inner product tr(A^T B)/2l)."""
        return np.array([np.trace(P.T @ A) for P in self.matrices]) / self.dim

    def to_dict(self) -> dict:
        return {
            "m": self.m, "k": self.k, "l": self.l,
            "realization": REALIZATION,
            "matrices": [P.astype(float).tolist() for P in self.matrices],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "CliffordSystem":
        mats = tuple(np.array(P, dtype=float) for P in d["matrices"])
        for P in mats:
            P.setflags(write=False)
        return cls(m=int(d["m"]), k=int(d["k"]), l=int(d["l"]), matrices=mats)


def check_fkm_pair(m: int, k: int) -> int:
    """Validate (m, k) and return l = k * delta(m)."""
    for name, v in (("m", m), ("k", k)):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
            raise InvalidArgument(f"{name} must be an integer >= 1, got {v!r}")
    l = int(k) * delta(int(m))
    if l - m - 1 <= 0:
        raise InvalidFkmPair(f"(m, k) = ({m}, {k}) gives l = {l}, m_- = l - m - 1 = {l - m - 1} <= 0")
    return l


def build_clifford_system(m: int, k: int) -> CliffordSystem:
    l = check_fkm_pair(m, k)
    m, k = int(m), int(k)
    I = np.eye(l)
    Z = np.zeros((l, l))
    mats = [np.block([[I, Z], [Z, -I]]), np.block([[Z, I], [I, Z]])]
    for E in complex_structures(m):
        Ek = np.kron(np.eye(k), E)
        mats.append(np.block([[Z, Ek], [-Ek, Z]]))
    mats = [P + 0.0 for P in mats]  # normalize -0.0 entries
    for P in mats:
        P.setflags(write=False)
    return CliffordSystem(m=m, k=k, l=l, matrices=tuple(mats))


def clifford_residuals(sys: CliffordSystem) -> dict[str, float]:
    Ps = sys.stack
    I = np.eye(sys.dim)
    sym = max(float(np.max(np.abs(P - P.T))) for P in Ps)
    anti = 0.0
    square = 0.0
    for a in range(len(Ps)):
        for b in range(a, len(Ps)):
            r = Ps[a] @ Ps[b] + Ps[b] @ Ps[a] - 2.0 * (a == b) * I
            anti = max(anti, float(np.max(np.abs(r))))
        square = max(square, float(np.max(np.abs(Ps[a] @ Ps[a] - I))))
    return {"symmetry": sym, "anticommutation": anti, "square": square}


def verify_clifford(sys: CliffordSystem, tol: float = 1e-12) -> VerificationReport:
    res = clifford_residuals(sys)
    return VerificationReport.from_residuals(
        "clifford.axioms", list(res.values()), tol,
        config={"m": sys.m, "k": sys.k, "l": sys.l},
        details={**res, "realization": REALIZATION},
    )


@dataclass(frozen=True)
class CliffordSphereElement:
    a: np.ndarray
    P: np.ndarray


def sphere_element(sys: CliffordSystem, a) -> CliffordSphereElement:
    a = np.asarray(a, dtype=float).ravel()
    if a.shape != (sys.m + 1,):
        raise InvalidArgument(f"coefficient vector must have length {sys.m + 1}")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > 1e-8:
        raise InvalidArgument(f"|a| = {norm} is not 1")
    if abs(norm - 1.0) > 1e-12:
        a = a / norm
    return CliffordSphereElement(a=a, P=sys.combine(a))


def random_sphere_element(sys: CliffordSystem, rng: np.random.Generator) -> CliffordSphereElement:
    a = rng.standard_normal(sys.m + 1)
    return sphere_element(sys, a / np.linalg.norm(a))
