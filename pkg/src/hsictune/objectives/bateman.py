"""Multi-species reaction kinetics data generator.

Eleven species react through four binary reactions.  Concentrations evolve
as eta' = M(eta) . eta, where the rate matrix M is assembled reaction by
reaction: a reaction with ordered reactants (a, b) and rate s contributes
-s * eta_a in column b of every reactant's row and +s * eta_a in column b
of every product's row.  An explicit first-order Euler scheme integrates
the system (no positivity clamping), and the dataset pairs a random initial
state and horizon with the integrated final state, which is the regression
task the analysis pipeline can train against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BatemanSystem",
    "DEFAULT_SYSTEM",
    "SolverDivergedError",
    "rate_matrix",
    "bateman_rhs",
    "bateman_solve",
    "bateman_dataset",
    "dataset_to_csv",
]


class SolverDivergedError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"state became non-finite at step {step}")
        self.step = step


@dataclass(frozen=True)
class BatemanSystem:
    """Species count, reactions as (ordered reactants, products), rates."""

    n_species: int
    reactions: tuple     # ((a, b), (products...)) with 1-based species ids
    rates: tuple

    def __post_init__(self):
        if len(self.reactions) != len(self.rates):
            raise ValueError("one rate per reaction required")
        if any(r <= 0 for r in self.rates):
            raise ValueError("rates must be positive")


DEFAULT_SYSTEM = BatemanSystem(
    n_species=11,
    reactions=(
        ((1, 2), (3, 4, 6, 7)),
        ((3, 4), (2, 8, 11)),
        ((2, 11), (3, 5, 9)),
        ((3, 11), (2, 5, 6, 10)),
    ),
    rates=(1.0, 5.0, 3.0, 0.1),
)


def rate_matrix(eta: np.ndarray, system: BatemanSystem = DEFAULT_SYSTEM) -> np.ndarray:
    """Assemble M(eta) row by row from the reaction list."""
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (system.n_species,):
        raise ValueError(f"eta must have length {system.n_species}")
    M = np.zeros((system.n_species, system.n_species))
    for ((a, b), products), s in zip(system.reactions, system.rates):
        coeff = s * eta[a - 1]
        for species in (a, b):
            M[species - 1, b - 1] -= coeff
        for species in products:
            M[species - 1, b - 1] += coeff
    return M


def bateman_rhs(eta: np.ndarray, system: BatemanSystem = DEFAULT_SYSTEM) -> np.ndarray:
    """Concentration rate vector M(eta) . eta."""
    eta = np.asarray(eta, dtype=float)
    return rate_matrix(eta, system) @ eta


def bateman_solve(
    eta0: np.ndarray,
    t_end: float,
    dt: float = 1e-3,
    system: BatemanSystem = DEFAULT_SYSTEM,
) -> np.ndarray:
    """Explicit Euler to t_end; the last step shrinks to land exactly there."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    eta = np.array(eta0, dtype=float)
    n_full = int(np.floor(t_end / dt + 1e-12))
    remainder = t_end - n_full * dt
    # divergence is a signaled condition here, not a numpy anomaly
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_full):
            eta = eta + dt * bateman_rhs(eta, system)
            if not np.all(np.isfinite(eta)):
                raise SolverDivergedError(step)
        if remainder > 1e-12:
            eta = eta + remainder * bateman_rhs(eta, system)
            if not np.all(np.isfinite(eta)):
                raise SolverDivergedError(n_full)
    return eta


def bateman_dataset(n: int, seed: int, dt: float = 1e-3,
                    system: BatemanSystem = DEFAULT_SYSTEM):
    """n pairs ((eta0, t), eta(t)) with eta0 ~ U[0,1]^M and t ~ U[0,5].

    Returns a list of ((eta0 array, t), label array); solver divergence is
    recorded per sample as a None label rather than aborting the batch.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(int(seed))
    rows = []
    for _ in range(n):
        eta0 = rng.random(system.n_species)
        t = float(rng.uniform(0.0, 5.0))
        try:
            label = bateman_solve(eta0, t, dt, system)
        except SolverDivergedError:
            label = None
        rows.append(((eta0, t), label))
    return rows


def dataset_to_csv(rows, path):
    """12 input columns (eta0_1..eta0_11, t) then 11 label columns."""
    n_species = len(rows[0][0][0]) if rows else 0
    header = [f"eta0_{i+1}" for i in range(n_species)] + ["t"] + [
        f"eta_{i+1}" for i in range(n_species)
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for (eta0, t), label in rows:
            lab = ["" for _ in range(n_species)] if label is None else [repr(v) for v in label]
            writer.writerow([repr(v) for v in eta0] + [repr(t)] + lab)
