"""Discrete-time stochastic epidemics with vaccination on a contact network."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .netgraph import Network, disjoint_complete_graphs

#: Sentinel day for "never happened". Compares greater than every real day.
NEVER = np.iinfo(np.int32).max

OutsideMode = Literal["every-day", "day-1-only"]


@dataclass(frozen=True)
class DiseaseParams:
    """Transmission and natural-history parameters.

    ``p_o`` is the daily probability of infection from outside the network,
    ``p_u``/``p_v`` the daily probability of infection by each infectious
    unvaccinated/vaccinated contact. A vaccinated susceptible has every
    source probability multiplied by ``delta``. A node infected on day ``t``
    is infectious on days ``t + b`` through ``t + b + f``.
    """

    p_o: float = 0.01
    p_u: float = 0.4
    p_v: float = 0.4
    delta: float = 1.0
    b: int = 1
    f: int = 3
    t_f: int = 100
    outside_mode: OutsideMode = "every-day"

    def __post_init__(self):
        for name in ("p_o", "p_u", "p_v"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if self.b < 0 or self.f < 0:
            raise ValueError("b and f must be non-negative")
        if self.t_f < 1:
            raise ValueError("t_f must be at least 1")
        if self.outside_mode not in ("every-day", "day-1-only"):
            raise ValueError(f"unknown outside_mode {self.outside_mode!r}")

    @property
    def s(self) -> int:
        return self.f + self.b


@dataclass(frozen=True)
class Trajectory:
    """Per-node infection and infectious-onset days (``NEVER`` when absent).

    An onset that would fall after ``t_f`` is not observed and stays ``NEVER``.
    """

    infected_day: np.ndarray
    onset_day: np.ndarray

    def __len__(self) -> int:
        return len(self.onset_day)

    def infected(self, i: int) -> int | None:
        d = int(self.infected_day[i])
        return None if d == NEVER else d

    def onset(self, i: int) -> int | None:
        d = int(self.onset_day[i])
        return None if d == NEVER else d

    def attack_rate(self) -> float:
        return float(np.mean(self.infected_day != NEVER)) if len(self) else 0.0


def assign_vaccination(node_count: int, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(``prob``) vaccination per node."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("vaccination probability must lie in [0, 1]")
    return rng.random(node_count) < prob


def simulate_epidemic(
    net: Network,
    vaccinated: np.ndarray,
    params: DiseaseParams,
    rng: np.random.Generator,
    initial_infected: Sequence[int] = (),
) -> Trajectory:
    """Run the day loop ``t = 1 .. t_f``.

    Every susceptible node faces independent Bernoulli sources each day: the
    outside world (probability ``p_o``, every day or day 1 only) and each
    contact infectious at the start of the day (``p_v`` or ``p_u`` by the
    contact's vaccination). Vaccinated susceptibles have each source scaled by
    ``delta``. Nodes in ``initial_infected`` are infected on day 1 regardless.

    Random draws per day, in order: ``node_count`` uniforms for the outside
    source (only on days it is active), then one uniform per (susceptible,
    infectious contact) pair in CSR order of the adjacency.
    """
    n = net.node_count
    vaccinated = np.asarray(vaccinated, dtype=bool)
    if vaccinated.shape != (n,):
        raise ValueError("vaccination vector length must equal node_count")
    b, f, t_f = params.b, params.f, params.t_f

    infected_day = np.full(n, NEVER, dtype=np.int64)
    onset_day = np.full(n, NEVER, dtype=np.int64)
    susceptible_scale = np.where(vaccinated, params.delta, 1.0)
    source_prob = np.where(vaccinated, params.p_v, params.p_u)

    adj = net.adjacency
    rows = np.repeat(np.arange(n), np.diff(adj.indptr))
    cols = adj.indices
    edge_prob = susceptible_scale[rows] * source_prob[cols]

    seeds = np.asarray(initial_infected, dtype=np.int64)

    for t in range(1, t_f + 1):
        susceptible = infected_day == NEVER
        infectious = (onset_day <= t) & (t <= onset_day + f)
        hit = np.zeros(n, dtype=bool)
        if t == 1 and seeds.size:
            hit[seeds] = True
        if params.outside_mode == "every-day" or t == 1:
            u = rng.random(n)
            hit |= u < susceptible_scale * params.p_o
        exposed = susceptible[rows] & infectious[cols]
        if exposed.any():
            u = rng.random(int(exposed.sum()))
            success = u < edge_prob[exposed]
            hit[rows[exposed][success]] = True
        new = susceptible & hit
        infected_day[new] = t
        if t + b <= t_f:
            onset_day[new] = t + b
    return Trajectory(infected_day, onset_day)


def draw_contact_counts(num_groups: int, mean: float, rng: np.random.Generator) -> np.ndarray:
    """Number of mutual contacts per group, Poisson(``mean``)."""
    return rng.poisson(mean, size=num_groups)


@dataclass(frozen=True)
class GroupEpidemics:
    """Independent groups simulated together as a disjoint union of cliques.

    Node ``starts[k]`` is the alter of group ``k`` and ``starts[k] + 1`` its ego.
    """

    network: Network
    starts: np.ndarray
    sizes: np.ndarray
    vaccinated: np.ndarray
    trajectory: Trajectory

    def split(self) -> list[tuple[Network, np.ndarray, Trajectory]]:
        out = []
        for start, size in zip(self.starts, self.sizes):
            sl = slice(int(start), int(start + size))
            sub, _ = disjoint_complete_graphs([int(size)])
            traj = Trajectory(self.trajectory.infected_day[sl].copy(),
                              self.trajectory.onset_day[sl].copy())
            out.append((sub, self.vaccinated[sl].copy(), traj))
        return out


def simulate_group_epidemics(
    contact_counts: Sequence[int],
    vacc_prob: float,
    params: DiseaseParams,
    rng: np.random.Generator,
) -> GroupEpidemics:
    """Each group is a complete graph on alter, ego and ``n_k`` mutual contacts.

    Groups share no ties, so running the whole-network engine on their
    disjoint union is the same as simulating each group separately.
    Vaccination is drawn first, then the epidemic.
    """
    counts = np.asarray(contact_counts, dtype=np.int64)
    if np.any(counts < 0):
        raise ValueError("contact counts must be non-negative")
    sizes = counts + 2
    net, starts = disjoint_complete_graphs(sizes)
    vacc = assign_vaccination(net.node_count, vacc_prob, rng)
    traj = simulate_epidemic(net, vacc, params, rng)
    return GroupEpidemics(net, starts, sizes, vacc, traj)


def simulate_independent_groups(
    group_sizes: Sequence[int] | None,
    vacc_prob: float,
    params: DiseaseParams,
    rng: np.random.Generator,
    num_groups: int | None = None,
    contact_mean: float = 3.0,
) -> list[tuple[Network, np.ndarray, Trajectory]]:
    """Per-group ``(network, vaccination, trajectory)`` triples.

    ``group_sizes`` lists the number of mutual contacts ``n_k`` of each group;
    when it is ``None``, ``num_groups`` counts are drawn from
    Poisson(``contact_mean``).
    """
    if group_sizes is None:
        if num_groups is None:
            raise ValueError("give group_sizes or num_groups")
        group_sizes = draw_contact_counts(num_groups, contact_mean, rng)
    return simulate_group_epidemics(group_sizes, vacc_prob, params, rng).split()


def save_trajectory_csv(path: str | os.PathLike, vaccinated: np.ndarray, traj: Trajectory) -> None:
    """Columns ``node,vaccinated,infected_day,onset_day``; empty field means never."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "vaccinated", "infected_day", "onset_day"])
        for i in range(len(traj)):
            inf, ons = traj.infected(i), traj.onset(i)
            w.writerow([i, int(vaccinated[i]),
                        "" if inf is None else inf, "" if ons is None else ons])


def load_trajectory_csv(path: str | os.PathLike) -> tuple[np.ndarray, Trajectory]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["node", "vaccinated", "infected_day", "onset_day"]:
            raise ValueError(f"unexpected trajectory header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                node = int(row[0])
                vac = int(row[1])
                inf = NEVER if row[2] == "" else int(row[2])
                ons = NEVER if row[3] == "" else int(row[3])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if node != len(rows):
                raise ValueError(f"line {lineno}: nodes must be listed in order 0..n-1")
            if vac not in (0, 1):
                raise ValueError(f"line {lineno}: vaccinated must be 0 or 1")
            rows.append((vac, inf, ons))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return arr[:, 0].astype(bool), Trajectory(arr[:, 1].copy(), arr[:, 2].copy())
