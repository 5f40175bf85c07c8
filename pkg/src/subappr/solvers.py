"""Columns of ``(I - beta' D^{-1/2} A D^{-1/2})^{-1}`` by any solver.

Both the online labeler and the clustering embedding reduce their kernel
to this matrix times a scalar, so the solver choice lives here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .appr import ApprParams, appr_solve
from .errors import IsolatedNodeError, SubapprError, ValidationError
from .graph import DENSE_CAP, Graph, dense_laplacian
from .random_appr import SamplerConfig, random_appr

SOLVER_KINDS = ("exact", "appr", "random")


@dataclass(frozen=True)
class SolverSpec:
    """``exact`` uses a dense inverse; ``appr`` the deterministic push
    solver at tolerance ``epsilon``; ``random`` the subsampled solver."""

    kind: str = "exact"
    epsilon: float = 1e-6
    sampler: SamplerConfig | None = None
    c: float = 0.9
    correction_period: int | None = 5
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValidationError(f"solver kind must be one of {SOLVER_KINDS}")
        if self.kind == "random" and self.sampler is None:
            raise ValidationError("random solver needs a SamplerConfig")

    @property
    def deterministic(self) -> bool:
        return self.kind != "random"


@dataclass
class DiscountedInverse:
    """Column access to ``K = (I - beta' S)^{-1}`` with ``S`` the normalized
    adjacency; ``nodes_queried`` accumulates over APPR column solves."""

    g: Graph
    beta_prime: float
    solver: SolverSpec
    nodes_queried: int = 0
    _dense: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.beta_prime < 1.0:
            raise ValidationError(f"discount must be in [0,1), got {self.beta_prime}")

    def dense(self) -> np.ndarray:
        if self._dense is None:
            q = dense_laplacian(self.g, self.beta_prime, cap=self.solver.dense_cap)
            self._dense = np.linalg.inv(q)
            self._dense = 0.5 * (self._dense + self._dense.T)
        return self._dense

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """``K e_j`` as ``(indices, values)``."""
        if self.solver.kind == "exact":
            col = self.dense()[:, j]
            idx = np.flatnonzero(col)
            return idx, col[idx]
        if self.g.deg[j] <= 0:
            raise IsolatedNodeError(j, f"kernel column {j}")
        alpha = (1.0 - self.beta_prime) / (1.0 + self.beta_prime)
        params = ApprParams(alpha, self.solver.epsilon)
        try:
            if self.solver.kind == "appr":
                res = appr_solve(self.g, j, params)
                x, nq = res.x, res.nodes_queried
            else:
                res = random_appr(
                    self.g,
                    j,
                    params,
                    self.solver.sampler,
                    self.solver.c,
                    self.solver.correction_period,
                    stream=j + 1,
                )
                x, nq = res.x, res.nodes_queried
        except SubapprError as exc:
            exc.args = (f"column {j}: {exc}",) + exc.args[1:]
            raise
        self.nodes_queried += nq
        # Q x = (2a/(1+a)) D^{-1/2} e_j  =>  Q^{-1} e_j = (1+a)/(2a) sqrt(d_j) x
        scale = (1.0 + alpha) / (2.0 * alpha) * self.g.sqrt_deg[j]
        idx = np.fromiter(sorted(x), dtype=np.int64, count=len(x))
        vals = np.array([x[i] for i in idx.tolist()]) * scale
        return idx, vals

    def column_dense(self, j: int) -> np.ndarray:
        idx, vals = self.column(j)
        out = np.zeros(self.g.n)
        out[idx] = vals
        return out
