"""Feasible set of the reduced problem with the supplement eliminated.

With alpha = P20 - sum(p) the constraints on the forwarding powers are
`rows @ p <= bounds` and `p >= 0`. Every row coefficient is nonnegative, so
shrinking a point towards zero never leaves the set.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..closedform.candidates import ReducedProblem
from ..logging import get_logger
from ..model import FloatArray

logger = get_logger("ehrelay.oracle.polytope")

DYKSTRA_SWEEPS = 50


@dataclass(frozen=True)
class ForwardingPolytope:
    rows: FloatArray
    bounds: FloatArray

    @classmethod
    def build(cls, problem: ReducedProblem) -> "ForwardingPolytope":
        n, b = problem.n, problem.harvest
        # EC_j: S_j - b * S_{j-1} + b * S_N <= a + b * T
        causality = np.tril(np.ones((n, n))) + b * np.triu(np.ones((n, n)))
        causality[0] = 0.0
        causality[0, 0] = 1.0
        bounds = np.full(n, problem.source + b * problem.budget)
        bounds[0] = problem.source
        rows = np.vstack((causality, np.ones((1, n))))
        return cls(rows=rows, bounds=np.append(bounds, problem.budget))

    @property
    def dimension(self) -> int:
        return int(self.rows.shape[1])

    def slack(self, points: FloatArray) -> FloatArray:
        """Row slack for one point (shape n) or a batch (shape k x n)."""
        return self.bounds - points @ self.rows.T

    def contains(self, points: FloatArray, tol: float) -> FloatArray:
        points = np.atleast_2d(points)
        return (self.slack(points).min(axis=1) >= -tol) & (points.min(axis=1) >= -tol)

    def shrink_into(self, point: FloatArray) -> FloatArray:
        """Scale a nonnegative point towards zero until every row holds."""
        point = np.maximum(point, 0.0)
        closed = self.bounds <= 0
        if np.any(closed):
            point[np.any(self.rows[closed] > 0, axis=0)] = 0.0
        load = self.rows @ point
        over = load > self.bounds
        if not np.any(over):
            return point
        factor = float(np.min(np.divide(self.bounds[over], load[over])))
        return point * max(factor, 0.0)

    def dykstra(self, target: FloatArray, weights: FloatArray, sweeps: int = DYKSTRA_SWEEPS) -> FloatArray:
        """Approximate weighted projection by cyclic half-space projections.

        Runs in u = sqrt(weights) * p coordinates, where the weighted metric
        becomes Euclidean; the last set of each sweep is the orthant.
        """
        scale = np.sqrt(weights)
        rows = self.rows / scale
        norms = np.einsum("ij,ij->i", rows, rows)
        u = target * scale
        increments = np.zeros((rows.shape[0] + 1, u.size))
        for _ in range(sweeps):
            for k, row in enumerate(rows):
                shifted = u + increments[k]
                excess = float(row @ shifted) - self.bounds[k]
                u = shifted - max(excess, 0.0) / norms[k] * row
                increments[k] = shifted - u
            shifted = u + increments[-1]
            u = np.maximum(shifted, 0.0)
            increments[-1] = shifted - u
        return u / scale

    def project(
        self, target: FloatArray, weights: FloatArray, *, maxiter: int = 500
    ) -> FloatArray:
        """Projection of `target` in the metric diag(weights), always feasible."""
        start = self.shrink_into(self.dykstra(target, weights))

        def distance(point: FloatArray) -> float:
            diff = point - target
            return 0.5 * float(np.sum(weights * diff * diff))

        def distance_grad(point: FloatArray) -> FloatArray:
            return weights * (point - target)

        constraints = [
            {
                "type": "ineq",
                "fun": self.slack,
                "jac": lambda point: -self.rows,
            }
        ]
        res = optimize.minimize(
            distance,
            start,
            method="SLSQP",
            jac=distance_grad,
            constraints=constraints,
            bounds=optimize.Bounds(np.zeros(self.dimension), np.full(self.dimension, np.inf)),
            options={"ftol": 1e-15, "maxiter": maxiter},
        )
        if not res.success:
            logger.debug("Projection QP stopped early: %s", res.message)
        projected = self.shrink_into(np.asarray(res.x, dtype=np.float64))
        # keep the warm start if the QP wandered off
        if distance(projected) > distance(start):
            return start
        return projected
