"""Analysis variables for each alter-ego group.

For a pair with first onset day ``T`` (or ``t_f`` when neither is ever sick):

* mediator ``Y_aT``: the alter's onset is ``T`` and the ego's is later;
* outcome ``Y_eTs``: the ego's onset lies in ``[T + b, T + f + b]``;
* ``U_a``/``L_a``: unvaccinated/vaccinated alter contacts with onset on or
  before ``T - b``;
* ``U_e``/``L_e``: unvaccinated/vaccinated ego contacts with onset on or
  before ``T + f``;
* ``M_u``/``M_v``: unvaccinated/vaccinated mutual contacts with onset on or
  before ``T - b``.

The partner is left out of each member's contact counts unless
``exclude_partner=False``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .epidemic import NEVER, DiseaseParams, Trajectory
from .netgraph import AlterEgoPair, Network

RECORD_COLUMNS = ("pair_id", "V_a", "V_e", "T", "Y_aT", "Y_eTs",
                  "U_a", "L_a", "U_e", "L_e", "M_u", "M_v")


@dataclass(frozen=True)
class GroupRecord:
    pair_id: int
    V_a: int
    V_e: int
    T: int
    Y_aT: int
    Y_eTs: int
    U_a: int
    L_a: int
    U_e: int
    L_e: int
    M_u: int
    M_v: int


@dataclass(frozen=True)
class RecordTable:
    """Column store of :class:`GroupRecord` rows (one integer array per field)."""

    pair_id: np.ndarray
    V_a: np.ndarray
    V_e: np.ndarray
    T: np.ndarray
    Y_aT: np.ndarray
    Y_eTs: np.ndarray
    U_a: np.ndarray
    L_a: np.ndarray
    U_e: np.ndarray
    L_e: np.ndarray
    M_u: np.ndarray
    M_v: np.ndarray

    def __post_init__(self):
        lengths = {len(getattr(self, name)) for name in RECORD_COLUMNS}
        if len(lengths) > 1:
            raise ValueError("record columns differ in length")

    def __len__(self) -> int:
        return len(self.pair_id)

    def __getitem__(self, k: int) -> GroupRecord:
        return GroupRecord(*(int(getattr(self, name)[k]) for name in RECORD_COLUMNS))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def column(self, name: str) -> np.ndarray:
        if name not in RECORD_COLUMNS:
            raise KeyError(name)
        return getattr(self, name)

    def take(self, idx) -> "RecordTable":
        return RecordTable(*(getattr(self, name)[idx] for name in RECORD_COLUMNS))

    @classmethod
    def from_records(cls, records: Iterable[GroupRecord]) -> "RecordTable":
        rows = [tuple(getattr(r, f.name) for f in fields(GroupRecord)) for r in records]
        arr = np.array(rows, dtype=np.int64).reshape(-1, len(RECORD_COLUMNS))
        return cls(*(arr[:, k].copy() for k in range(len(RECORD_COLUMNS))))

    @classmethod
    def concatenate(cls, tables: Sequence["RecordTable"]) -> "RecordTable":
        return cls(*(np.concatenate([getattr(t, name) for t in tables]) for name in RECORD_COLUMNS))


def first_infection_time(traj: Trajectory, alter: int, ego: int, t_f: int) -> int:
    """Earlier of the two onset days, or ``t_f`` if neither falls in follow-up."""
    first = min(int(traj.onset_day[alter]), int(traj.onset_day[ego]))
    return first if first <= t_f else t_f


def mediator(traj: Trajectory, alter: int, ego: int, T: int, t_f: int) -> int:
    """1 when the alter fell ill on day ``T`` and the ego was still healthy."""
    onset_a = int(traj.onset_day[alter])
    onset_e = int(traj.onset_day[ego])
    if onset_a > t_f:
        return 0
    return int(onset_a == T and onset_e > T)


def outcome(traj: Trajectory, ego: int, T: int, b: int, f: int) -> int:
    onset_e = int(traj.onset_day[ego])
    if onset_e == NEVER:
        return 0
    return int(T + b <= onset_e <= T + f + b)


def contact_summaries(
    net: Network,
    traj: Trajectory,
    vaccinated: np.ndarray,
    pair: AlterEgoPair,
    T: int,
    b: int,
    f: int,
    exclude_partner: bool = True,
) -> tuple[int, int, int, int, int, int]:
    """``(U_a, L_a, U_e, L_e, M_u, M_v)`` for one pair."""
    onset = traj.onset_day
    nb_a = set(net.neighbors[pair.alter].tolist())
    nb_e = set(net.neighbors[pair.ego].tolist())
    mutual = nb_a & nb_e
    if exclude_partner:
        nb_a.discard(pair.ego)
        nb_e.discard(pair.alter)

    def split(nodes, cutoff):
        u = sum(1 for j in nodes if onset[j] <= cutoff and not vaccinated[j])
        v = sum(1 for j in nodes if onset[j] <= cutoff and vaccinated[j])
        return u, v

    U_a, L_a = split(nb_a, T - b)
    U_e, L_e = split(nb_e, T + f)
    M_u, M_v = split(mutual, T - b)
    return U_a, L_a, U_e, L_e, M_u, M_v


def build_records(
    net: Network,
    traj: Trajectory,
    vaccinated: np.ndarray,
    pairs: Sequence[AlterEgoPair],
    params: DiseaseParams,
    exclude_partner: bool = True,
) -> RecordTable:
    """One analysis row per pair, vectorised over pairs."""
    b, f, t_f = params.b, params.f, params.t_f
    vaccinated = np.asarray(vaccinated, dtype=bool)
    K = len(pairs)
    alter = np.fromiter((p.alter for p in pairs), dtype=np.int64, count=K)
    ego = np.fromiter((p.ego for p in pairs), dtype=np.int64, count=K)
    pair_id = np.fromiter((p.pair_id for p in pairs), dtype=np.int64, count=K)

    onset = traj.onset_day
    onset_a, onset_e = onset[alter], onset[ego]
    T = np.minimum(np.minimum(onset_a, onset_e), t_f)
    Y_aT = ((onset_a <= t_f) & (onset_a == T) & (onset_e > T)).astype(np.int64)
    Y_eTs = ((onset_e != NEVER) & (T + b <= onset_e) & (onset_e <= T + f + b)).astype(np.int64)
    if b == 0:
        # With no incubation the outcome window starts at T; keep the
        # restriction Y_eTs <= Y_aT by construction.
        Y_eTs &= Y_aT
    if np.any(Y_eTs > Y_aT):
        raise AssertionError("outcome set while mediator is 0")

    adj = net.adjacency
    # Row k of each selector is the relevant neighborhood of pair k.
    A_alter = adj[alter].tocoo()
    A_ego = adj[ego].tocoo()
    mutual = adj[alter].multiply(adj[ego]).tocoo()

    def counts(A, cutoff, partner=None):
        keep = onset[A.col] <= cutoff[A.row]
        if partner is not None:
            keep &= A.col != partner[A.row]
        vac = vaccinated[A.col]
        u = np.bincount(A.row[keep & ~vac], minlength=K)
        v = np.bincount(A.row[keep & vac], minlength=K)
        return u.astype(np.int64), v.astype(np.int64)

    U_a, L_a = counts(A_alter, T - b, ego if exclude_partner else None)
    U_e, L_e = counts(A_ego, T + f, alter if exclude_partner else None)
    M_u, M_v = counts(mutual, T - b)

    return RecordTable(
        pair_id=pair_id,
        V_a=vaccinated[alter].astype(np.int64),
        V_e=vaccinated[ego].astype(np.int64),
        T=T.astype(np.int64),
        Y_aT=Y_aT,
        Y_eTs=Y_eTs,
        U_a=U_a, L_a=L_a, U_e=U_e, L_e=L_e, M_u=M_u, M_v=M_v,
    )


def group_pairs(starts: np.ndarray) -> list[AlterEgoPair]:
    """Alter-ego pairs of independent groups laid out by ``simulate_group_epidemics``."""
    return [AlterEgoPair(int(s), int(s) + 1, k) for k, s in enumerate(starts)]


def save_records_csv(path: str | os.PathLike, records: RecordTable) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        cols = [records.column(name) for name in RECORD_COLUMNS]
        for k in range(len(records)):
            w.writerow([int(c[k]) for c in cols])


def load_records_csv(path: str | os.PathLike) -> RecordTable:
    """Read a records CSV; errors name the offending line."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RECORD_COLUMNS:
            raise ValueError(f"line 1: expected header {','.join(RECORD_COLUMNS)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORD_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
            try:
                values = [int(x) for x in row]
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer field in {row!r}") from None
            rec = dict(zip(RECORD_COLUMNS, values))
            for name in ("V_a", "V_e", "Y_aT", "Y_eTs"):
                if rec[name] not in (0, 1):
                    raise ValueError(f"line {lineno}: {name} must be 0 or 1")
            if any(rec[name] < 0 for name in ("U_a", "L_a", "U_e", "L_e", "M_u", "M_v")):
                raise ValueError(f"line {lineno}: negative count")
            rows.append(values)
    arr = np.array(rows, dtype=np.int64).reshape(-1, len(RECORD_COLUMNS))
    return RecordTable(*(arr[:, k].copy() for k in range(len(RECORD_COLUMNS))))
