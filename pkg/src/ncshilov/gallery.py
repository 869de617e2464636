"""Named example spaces, both as objects and as JSON problem files."""
from __future__ import annotations

import numpy as np
from scipy.linalg import sqrtm

from .errors import InvalidInput
from .opspace import OperatorSpace, column_space, diagonal_algebra, full_matrices, upper_triangular


def _unit(n, i, j):
    m = np.zeros((n, n), dtype=np.complex128)
    m[i, j] = 1.0
    return m


def ex4_4_algebra() -> np.ndarray:
    """Basis ``I_3, e12, e13`` of the nonselfadjoint algebra ``A``."""
    return np.asarray([np.eye(3, dtype=np.complex128), _unit(3, 0, 1), _unit(3, 0, 2)])


def ex4_4_Q() -> np.ndarray:
    return 2 * np.eye(3) + np.ones((3, 3))


def ex4_4() -> OperatorSpace:
    """``A Q^{1/2}`` inside ``M_3`` with ``Q = 2I + ones``."""
    R = np.real(sqrtm(ex4_4_Q()))
    return OperatorSpace(ex4_4_algebra() @ R, label="ex4_4")


def ex6_9_P() -> np.ndarray:
    return np.real(sqrtm(np.array([[2.0, 1.0], [1.0, 2.0]])))


def ex6_9_n2() -> OperatorSpace:
    """``D_2 P`` with ``P^2 = [[2, 1], [1, 2]]``."""
    P = ex6_9_P()
    return OperatorSpace(np.asarray([_unit(2, 0, 0) @ P, _unit(2, 1, 1) @ P]), label="ex6_9_n2")


SPACES = {
    "ex4_4": ex4_4,
    "ex6_9_n2": ex6_9_n2,
    "t2": lambda: upper_triangular(2),
    "c2_column": lambda: column_space(2),
    "d2": lambda: diagonal_algebra(2),
    "m2": lambda: full_matrices(2),
}

BANACH = {"l1_2": {"dim": 2, "ball": "l1"}, "linf_2": {"dim": 2, "ball": "linf"}}

NAMES = tuple(SPACES) + tuple(BANACH)


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def space_json(X: OperatorSpace) -> dict:
    return {"label": X.label, "basis": [encode_matrix(b) for b in X.basis]}


def space(name: str) -> OperatorSpace:
    if name not in SPACES:
        raise InvalidInput(f"unknown operator-space fixture {name!r}; known: {', '.join(SPACES)}")
    return SPACES[name]()


def gallery(name: str) -> dict:
    """The canonical problem file for a named fixture."""
    if name in SPACES:
        X = space(name)
        task = "brs" if name in ("t2", "d2", "m2") else "envelope"
        payload = {"space": space_json(X)}
        if task == "brs":
            payload["unit"] = [[float(v.real), float(v.imag)] for v in X.coords(np.eye(X.r))]
        return {"version": "1", "task": task, "payload": payload, "seed": 42}
    if name in BANACH:
        return {"version": "1", "task": "min_cross_validate", "payload": {"banach": dict(BANACH[name])}, "seed": 42}
    raise InvalidInput(f"unknown fixture {name!r}; known: {', '.join(NAMES)}")
