"""Constant-interaction double quantum dot: ground-state charge configuration
versus the two plunger voltages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DQDConfig", "charge_state", "charge_energy", "addition_energy", "stability_map", "triple_points"]


@dataclass(frozen=True)
class DQDConfig:
    """Charging energies (eV), lever arms (eV/V, dot <- gate) and search range.

    ``alpha_LR`` is the coupling of the right gate to the left dot.
    """

    E_CL: float = 4e-3
    E_CR: float = 4e-3
    E_m: float = 1e-3
    alpha_LL: float = 0.1
    alpha_LR: float = 0.02
    alpha_RL: float = 0.02
    alpha_RR: float = 0.1
    max_occupancy: int = 2

    def __post_init__(self) -> None:
        if not (self.E_CL > 0 and self.E_CR > 0):
            raise ValueError("charging energies must be positive")
        if not 0 <= self.E_m < min(self.E_CL, self.E_CR):
            raise ValueError("mutual charging energy must satisfy 0 <= E_m < min(E_CL, E_CR)")
        if min(self.alpha_LL, self.alpha_LR, self.alpha_RL, self.alpha_RR) < 0:
            raise ValueError("lever arms must be non-negative")
        if self.max_occupancy < 0:
            raise ValueError("max_occupancy must be non-negative")

    def gate_energies(self, V_L, V_R):
        """Gate-induced energy offsets ``(u_L, u_R)`` in eV."""
        return (
            self.alpha_LL * V_L + self.alpha_LR * V_R,
            self.alpha_RL * V_L + self.alpha_RR * V_R,
        )


def charge_energy(n_L, n_R, V_L, V_R, cfg: DQDConfig):
    u_L, u_R = cfg.gate_energies(V_L, V_R)
    return (
        0.5 * cfg.E_CL * n_L**2
        + 0.5 * cfg.E_CR * n_R**2
        + cfg.E_m * n_L * n_R
        - u_L * n_L
        - u_R * n_R
    )


def _candidates(cfg: DQDConfig) -> np.ndarray:
    n = np.arange(cfg.max_occupancy + 1)
    nl, nr = np.meshgrid(n, n, indexing="ij")
    c = np.stack([nl.ravel(), nr.ravel()], axis=1)
    # tie-break order: fewer electrons first, then fewer on the left
    order = np.lexsort((c[:, 0], c.sum(axis=1)))
    return c[order]


def charge_state(V_L: float, V_R: float, cfg: DQDConfig) -> tuple[int, int]:
    """Ground-state occupancy ``(n_L, n_R)``.

    Exact ties go to the lower total occupancy, then the lower ``n_L``.
    """
    cand = _candidates(cfg)
    e = charge_energy(cand[:, 0], cand[:, 1], V_L, V_R, cfg)
    k = int(np.argmin(e))  # argmin returns the first minimum, i.e. the tie-break winner
    return int(cand[k, 0]), int(cand[k, 1])


def stability_map(V_L: np.ndarray, V_R: np.ndarray, cfg: DQDConfig) -> np.ndarray:
    """Occupancies on a voltage grid, shape ``V_L.shape + (2,)``."""
    V_L, V_R = np.broadcast_arrays(np.asarray(V_L, float), np.asarray(V_R, float))
    cand = _candidates(cfg)
    e = charge_energy(
        cand[:, 0, None], cand[:, 1, None], V_L.ravel()[None, :], V_R.ravel()[None, :], cfg
    )
    k = np.argmin(e, axis=0)
    return cand[k].reshape(V_L.shape + (2,))


def addition_energy(dot: str, n_L: int, n_R: int, V_L: float, V_R: float, cfg: DQDConfig) -> float:
    """Electrochemical potential for adding one electron to ``dot`` to the
    configuration ``(n_L, n_R)``, relative to the reservoir (eV)."""
    if dot == "left":
        return float(charge_energy(n_L + 1, n_R, V_L, V_R, cfg) - charge_energy(n_L, n_R, V_L, V_R, cfg))
    if dot == "right":
        return float(charge_energy(n_L, n_R + 1, V_L, V_R, cfg) - charge_energy(n_L, n_R, V_L, V_R, cfg))
    raise ValueError(f"dot must be 'left' or 'right', got {dot!r}")


def triple_points(cfg: DQDConfig, n_L: int = 0, n_R: int = 0) -> tuple[tuple[float, float], tuple[float, float]]:
    """The two honeycomb vertices bordering cells (n_L, n_R), (n_L+1, n_R),
    (n_L, n_R+1) and (n_L+1, n_R+1).

    Returned as ``(V_L, V_R)`` pairs: the electron-like point where
    (n_L, n_R), (n_L+1, n_R) and (n_L, n_R+1) meet, then the hole-like point
    where (n_L+1, n_R), (n_L, n_R+1) and (n_L+1, n_R+1) meet.
    """
    A = np.array([[cfg.alpha_LL, cfg.alpha_LR], [cfg.alpha_RL, cfg.alpha_RR]])
    # u_L = mu_L(n_L, n_R), u_R = mu_R(n_L, n_R) at the electron point
    mu_L = cfg.E_CL * (n_L + 0.5) + cfg.E_m * n_R
    mu_R = cfg.E_CR * (n_R + 0.5) + cfg.E_m * n_L
    e_pt = np.linalg.solve(A, [mu_L, mu_R])
    h_pt = np.linalg.solve(A, [mu_L + cfg.E_m, mu_R + cfg.E_m])
    return (float(e_pt[0]), float(e_pt[1])), (float(h_pt[0]), float(h_pt[1]))
