"""Dual hierarchical least-squares toolkit.

Solvers for equality-constrained hierarchical least-squares programs in
their dual form: an ADMM solver with primal-dual variable elimination, an
interior-point reference solver, a sequential nullspace baseline, the
solution Jacobian system and a benchmark harness.
"""

__version__ = "0.1.0"
