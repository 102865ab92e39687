"""
Value types carried by the joint recursion.
"""
from dataclasses import dataclass, field

import numpy as np

from apps.core.exceptions import ShapeError


@dataclass(frozen=True)
class JointState:
    """Iterate x_k and its parameter Jacobian D_k after k steps."""
    k: int
    x: np.ndarray
    D: np.ndarray

    @classmethod
    def initial(cls, problem, x0=None, D0=None):
        """Start at x0 (default 0) with Jacobian D0 (default 0)."""
        x = np.zeros(problem.d) if x0 is None else np.array(x0, dtype=np.float64)
        D = np.zeros((problem.d, problem.p)) if D0 is None else np.array(D0, dtype=np.float64)
        problem.check_jacobian(D)
        if x.shape != (problem.d,):
            raise ShapeError(f'x0 must have shape ({problem.d},), got {x.shape}')
        return cls(0, x, D)


@dataclass
class Trajectory:
    """
    Snapshots (k, x_k, D_k) of one run, plus the sample indices it drew
    (samples[k] is the 1-based index used by step k -> k+1).
    """
    ks: np.ndarray
    xs: np.ndarray
    Ds: np.ndarray
    samples: np.ndarray
    schedule_id: str
    seed: int
    model_id: str
    bound_violations: list = field(default_factory=list)

    def __len__(self):
        return len(self.ks)

    @property
    def final(self):
        return JointState(int(self.ks[-1]), self.xs[-1], self.Ds[-1])

    @property
    def num_iters(self):
        return int(self.ks[-1])
