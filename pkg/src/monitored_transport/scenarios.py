"""Ready-made junctions for the two worked models.

``filter_level_junction``: one level at ``eps_d`` with its occupation
monitored, each reservoir seen through a Lorentzian filter placed
symmetrically at -/+ ``eps_filter``.

``cross_monitored_pair``: two uncoupled levels, each with its own filtered
reservoir aligned to the level, and the monitor O = d_L^+ d_R + h.c.
"""
from __future__ import annotations

from .model import Junction, LorentzianFilter, Reservoir, single_level_junction, two_site_junction

FILTER_ENERGY = 1.48
FILTER_WIDTH = 0.55
PAIR_WIDTH = 0.5
PAIR_LEVELS = (10.0, 3.0)


def filter_level_junction(
    gamma: float,
    eps_d: float = 0.0,
    eps_filter: float = FILTER_ENERGY,
    delta: float = FILTER_WIDTH,
    t_c: float = 1.0,
    mu: float = 0.0,
    T: float = 0.0,
) -> Junction:
    left = Reservoir(LorentzianFilter(t_c, delta, -eps_filter), mu=mu, T=T)
    right = Reservoir(LorentzianFilter(t_c, delta, eps_filter), mu=mu, T=T)
    return single_level_junction(eps_d, left, right, gamma)


def cross_monitored_pair(
    gamma: float,
    eps_left: float = PAIR_LEVELS[0],
    eps_right: float = PAIR_LEVELS[1],
    delta: float = PAIR_WIDTH,
    t_c: float = 1.0,
    mu: float = 0.0,
    T_left: float = 1.0,
    T_right: float = 1.0,
) -> Junction:
    left = Reservoir(LorentzianFilter(t_c, delta, eps_left), mu=mu, T=T_left)
    right = Reservoir(LorentzianFilter(t_c, delta, eps_right), mu=mu, T=T_right)
    return two_site_junction(eps_left, eps_right, left, right, gamma)
