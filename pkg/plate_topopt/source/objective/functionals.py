"""
流速下限の Moreau–Yosida 型目的関数

J(u_s) = ∫_D min(0, |u_s| − u_t)²
"""

from typing import Union

import numpy as np

from ..fem import VectorFieldP2, integrate
from ..interfaces.data_models import AssemblyError
from ..mesh import TriMesh
from ..physics import SmoothedVelocity

Velocity = Union[SmoothedVelocity, VectorFieldP2]


def _velocity(u: Velocity) -> VectorFieldP2:
    return u.velocity if isinstance(u, SmoothedVelocity) else u


def _check_threshold(u_t: float) -> None:
    if not u_t > 0.0:
        raise AssemblyError(f"u_t は正の値が必要です: {u_t}", details={"u_t": u_t})


def evaluate_objective(mesh: TriMesh, u_s: Velocity, u_t: float) -> float:
    """J = ∫ min(0, |u_s| − u_t)²（要素積分則）"""
    _check_threshold(u_t)

    def integrand(x, y, u):
        return np.minimum(0.0, np.linalg.norm(u, axis=-1) - u_t) ** 2

    return integrate(mesh, integrand, {"u": _velocity(u_s)})


def fulfillment_fraction(mesh: TriMesh, u_s: Velocity, u_t: float) -> float:
    """
    充足率 |{x : |u_s(x)| ≥ u_t}| / |D|

    J と同じ積分則で、条件を満たす積分点の重みを数える。
    """
    _check_threshold(u_t)

    def integrand(x, y, u):
        return (np.linalg.norm(u, axis=-1) >= u_t).astype(float)

    total = integrate(mesh, lambda x, y: np.ones_like(x))
    return integrate(mesh, integrand, {"u": _velocity(u_s)}) / total
