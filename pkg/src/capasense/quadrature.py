"""Gauss-Legendre rules and the aperture node grid.

The continuous aperture is never materialized as an antenna grid: every
integral over the aperture is evaluated on the tensor-product Gauss-Legendre
nodes.  Node ordering is kx-major, i.e. node index ``n = kx * K + ky`` holds
position ``[x_kx * Lx / 2, x_ky * Ly / 2, 0]`` and combined weight
``w_kx * w_ky``; the physical cell scale ``Lx * Ly / 4`` is kept separate so
that ``cell_scale * sum(weights) == Lx * Ly``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class QuadratureRule:
    """One-dimensional Gauss-Legendre rule on (-1, 1)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise ConfigurationError(f"quadrature order must be >= 1, got {self.order}")
        if self.nodes.shape != (self.order,) or self.weights.shape != (self.order,):
            raise ConfigurationError("rule arrays must have shape (order,)")
        if abs(self.weights.sum() - 2.0) > 1e-12:
            raise ConfigurationError("rule weights must sum to 2")
        if np.any(np.diff(self.nodes) <= 0):
            raise ConfigurationError("rule nodes must be strictly increasing")


def gauss_legendre_rule(order):
    """Nodes and weights of the Gauss-Legendre rule of the given order.

    Nodes are the roots of the degree-``order`` Legendre polynomial,
    symmetric about 0; weights are positive and sum to 2.
    """
    if order < 1:
        raise ConfigurationError(f"quadrature order must be >= 1, got {order}")
    nodes, weights = np.polynomial.legendre.leggauss(int(order))
    return QuadratureRule(order=int(order), nodes=nodes, weights=weights)


@dataclass(frozen=True)
class NodeGrid:
    """Tensor-product quadrature nodes mapped onto the physical aperture."""

    order: int
    positions: np.ndarray      # (K^2, 3) meters, z = 0
    weights: np.ndarray        # (K^2,) combined dimensionless weights
    cell_scale: float          # Lx * Ly / 4
    wavenumber: float          # 2 pi / lambda, rad/m

    @property
    def n_nodes(self):
        return self.positions.shape[0]

    @property
    def full_weights(self):
        """Quadrature weights including the cell scale; sums to Lx * Ly."""
        return self.cell_scale * self.weights

    def integrate(self, samples):
        """Integrate node samples over the aperture; node axis first."""
        return np.einsum("n,n...->...", self.full_weights, np.asarray(samples))


def build_node_grid(aperture, rule):
    """Map a 1-D rule onto the rectangular aperture (kx-major ordering)."""
    x = rule.nodes * aperture.length_x / 2.0
    y = rule.nodes * aperture.length_y / 2.0
    K = rule.order
    positions = np.column_stack(
        [np.repeat(x, K), np.tile(y, K), np.zeros(K * K)]
    )
    weights = np.repeat(rule.weights, K) * np.tile(rule.weights, K)
    return NodeGrid(
        order=K,
        positions=positions,
        weights=weights,
        cell_scale=aperture.length_x * aperture.length_y / 4.0,
        wavenumber=aperture.wavenumber,
    )
