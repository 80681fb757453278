import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vaxcontagion.epidemic import NEVER, DiseaseParams, Trajectory, assign_vaccination, simulate_epidemic
from vaxcontagion.extract import (
    RECORD_COLUMNS,
    GroupRecord,
    RecordTable,
    build_records,
    contact_summaries,
    first_infection_time,
    group_pairs,
    load_records_csv,
    mediator,
    outcome,
    save_records_csv,
)
from vaxcontagion.netgraph import (
    AlterEgoPair,
    Network,
    complete_graph,
    extract_independent_pairs,
    generate_family_network,
)


def traj_from_onsets(onsets, b=1):
    onset = np.array([NEVER if o is None else o for o in onsets], dtype=np.int64)
    infected = np.where(onset == NEVER, NEVER, onset - b)
    return Trajectory(infected, onset)


def test_first_infection_time():
    assert first_infection_time(traj_from_onsets([5, 9]), 0, 1, 100) == 5
    assert first_infection_time(traj_from_onsets([None, None]), 0, 1, 100) == 100
    assert first_infection_time(traj_from_onsets([7, 7]), 0, 1, 100) == 7
    assert first_infection_time(traj_from_onsets([None, 3]), 0, 1, 100) == 3


def test_mediator():
    assert mediator(traj_from_onsets([5, 9]), 0, 1, 5, 100) == 1
    assert mediator(traj_from_onsets([5, None]), 0, 1, 5, 100) == 1
    assert mediator(traj_from_onsets([7, 7]), 0, 1, 7, 100) == 0
    assert mediator(traj_from_onsets([None, None]), 0, 1, 100, 100) == 0
    assert mediator(traj_from_onsets([9, 5]), 0, 1, 5, 100) == 0


def test_outcome_window():
    assert outcome(traj_from_onsets([5, 6]), 1, 5, 1, 3) == 1
    assert outcome(traj_from_onsets([5, 9]), 1, 5, 1, 3) == 1
    assert outcome(traj_from_onsets([5, 10]), 1, 5, 1, 3) == 0
    assert outcome(traj_from_onsets([5, None]), 1, 5, 1, 3) == 0


def test_contact_summaries_no_sick_contacts():
    net = complete_graph(5)
    traj = traj_from_onsets([5, None, None, None, None])
    counts = contact_summaries(net, traj, np.zeros(5, bool), AlterEgoPair(0, 1, 0), 5, 1, 3)
    assert counts == (0, 0, 0, 0, 0, 0)


def test_contact_summaries_boundary_inclusive():
    # alter 0, ego 1, contact 2 of the alter only, onset exactly T - b
    net = Network(3, [(0, 1), (0, 2)])
    traj = traj_from_onsets([5, None, 4])
    U_a, L_a, U_e, L_e, M_u, M_v = contact_summaries(
        net, traj, np.zeros(3, bool), AlterEgoPair(0, 1, 0), 5, 1, 3)
    assert (U_a, L_a) == (1, 0)
    assert (U_e, L_e, M_u, M_v) == (0, 0, 0, 0)


def test_contact_summaries_outside_window():
    net = Network(3, [(0, 1), (1, 2)])
    traj = traj_from_onsets([5, None, 9])  # T + f + 1 with T=5, f=3
    out = contact_summaries(net, traj, np.zeros(3, bool), AlterEgoPair(0, 1, 0), 5, 1, 3)
    assert out[2:4] == (0, 0)


def test_hand_built_five_node_record():
    # Alter 0 and ego 1 share contacts 2 (unvaccinated) and 3 (vaccinated);
    # 4 is the ego's own contact (vaccinated).
    #   onsets: 2 -> 3, 3 -> 4, alter -> 6, 4 -> 8, ego -> 9
    # T = 6 (alter first), Y_aT = 1, window [7, 10] holds 9 -> Y_eTs = 1.
    # Alter contacts sick by T-b=5: 2 (U) and 3 (L); ego contacts sick by
    # T+f=9: 2 (U), 3 (L), 4 (L); mutual sick by 5: 2 (U), 3 (L).
    net = Network(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 4)])
    traj = traj_from_onsets([6, 9, 3, 4, 8])
    vacc = np.array([False, True, False, True, True])
    params = DiseaseParams(b=1, f=3, t_f=100)
    rec = build_records(net, traj, vacc, [AlterEgoPair(0, 1, 0)], params)[0]
    assert rec == GroupRecord(pair_id=0, V_a=0, V_e=1, T=6, Y_aT=1, Y_eTs=1,
                              U_a=1, L_a=1, U_e=1, L_e=2, M_u=1, M_v=1)


def test_partner_inclusion_switch():
    net = Network(2, [(0, 1)])
    traj = traj_from_onsets([3, 2])  # ego sick first
    params = DiseaseParams()
    pair = [AlterEgoPair(0, 1, 0)]
    excl = build_records(net, traj, np.zeros(2, bool), pair, params)[0]
    incl = build_records(net, traj, np.zeros(2, bool), pair, params, exclude_partner=False)[0]
    assert excl.U_e == 0 and incl.U_e == 1
    assert excl.U_a == 0 and incl.U_a == 0  # ego onset 2 > T - b = 1


def test_never_sick_group():
    net = complete_graph(2)
    traj = traj_from_onsets([None, None])
    rec = build_records(net, traj, np.zeros(2, bool), [AlterEgoPair(0, 1, 0)],
                        DiseaseParams(t_f=100))[0]
    assert (rec.T, rec.Y_aT, rec.Y_eTs, rec.U_a, rec.L_a, rec.U_e, rec.L_e) == (100, 0, 0, 0, 0, 0, 0)


def scalar_records(net, traj, vacc, pairs, params):
    rows = []
    for p in pairs:
        T = first_infection_time(traj, p.alter, p.ego, params.t_f)
        y_a = mediator(traj, p.alter, p.ego, T, params.t_f)
        y_e = outcome(traj, p.ego, T, params.b, params.f) if y_a else 0
        counts = contact_summaries(net, traj, vacc, p, T, params.b, params.f)
        rows.append(GroupRecord(p.pair_id, int(vacc[p.alter]), int(vacc[p.ego]), T, y_a, y_e, *counts))
    return rows


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), b=st.integers(1, 3), f=st.integers(0, 4))
def test_vectorised_matches_scalar(seed, b, f):
    g = np.random.default_rng(seed)
    net = generate_family_network(60, 5, 0.01, g)
    vacc = assign_vaccination(net.node_count, 0.5, g)
    params = DiseaseParams(p_o=0.02, p_u=0.3, p_v=0.1, delta=0.5, b=b, f=f, t_f=40)
    traj = simulate_epidemic(net, vacc, params, g)
    pairs = [p for p, _ in extract_independent_pairs(net, g)]
    table = build_records(net, traj, vacc, pairs, params)
    assert list(table) == scalar_records(net, traj, vacc, pairs, params)
    # restriction and count bounds
    assert np.all(table.Y_eTs <= table.Y_aT)
    deg = net.degree()
    alters = np.array([p.alter for p in pairs])
    egos = np.array([p.ego for p in pairs])
    assert np.all(table.U_a + table.L_a <= deg[alters])
    assert np.all(table.U_e + table.L_e <= deg[egos])
    assert np.all((table.T >= 1) & (table.T <= params.t_f))


def test_zero_incubation_keeps_restriction():
    g = np.random.default_rng(3)
    net = complete_graph(6)
    params = DiseaseParams(p_o=0.2, p_u=0.5, b=0, f=2, t_f=20)
    for _ in range(50):
        traj = simulate_epidemic(net, np.zeros(6, bool), params, g)
        table = build_records(net, traj, np.zeros(6, bool), [AlterEgoPair(0, 1, 0)], params)
        assert np.all(table.Y_eTs <= table.Y_aT)


def test_window_metamorphic():
    # Growing f can only add ego contacts to U_e/L_e and widen the outcome window.
    g = np.random.default_rng(8)
    net = generate_family_network(100, 5, 0.01, g)
    vacc = assign_vaccination(net.node_count, 0.5, g)
    params = DiseaseParams(p_o=0.02, p_u=0.3, p_v=0.3, b=1, f=3)
    traj = simulate_epidemic(net, vacc, params, g)
    pairs = [p for p, _ in extract_independent_pairs(net, g)]
    base = build_records(net, traj, vacc, pairs, params)
    wide = build_records(net, traj, vacc, pairs, DiseaseParams(p_o=0.02, p_u=0.3, p_v=0.3, b=1, f=5))
    assert np.array_equal(base.T, wide.T) and np.array_equal(base.Y_aT, wide.Y_aT)
    assert np.all(wide.U_e >= base.U_e) and np.all(wide.Y_eTs >= base.Y_eTs)
    changed = (wide.Y_eTs != base.Y_eTs)
    onset_e = traj.onset_day[[p.ego for p in pairs]]
    assert np.all((onset_e[changed] > base.T[changed] + 4) & (onset_e[changed] <= base.T[changed] + 6))


def test_group_pairs_layout():
    pairs = group_pairs(np.array([0, 3, 5]))
    assert [(p.alter, p.ego, p.pair_id) for p in pairs] == [(0, 1, 0), (3, 4, 1), (5, 6, 2)]


def test_record_count_matches_pairs():
    g = np.random.default_rng(1)
    net = generate_family_network(200, 5, 0.002, g)
    pairs = [p for p, _ in extract_independent_pairs(net, g)]
    traj = simulate_epidemic(net, np.zeros(net.node_count, bool), DiseaseParams(), g)
    assert len(build_records(net, traj, np.zeros(net.node_count, bool), pairs, DiseaseParams())) == len(pairs)


def test_record_table_helpers():
    rec = GroupRecord(3, 1, 0, 7, 1, 0, 1, 2, 3, 4, 0, 1)
    table = RecordTable.from_records([rec, rec])
    assert len(table) == 2 and table[1] == rec
    assert table.take(np.array([True, False]))[0] == rec
    both = RecordTable.concatenate([table, table])
    assert len(both) == 4
    with pytest.raises(KeyError):
        table.column("nope")


def test_records_csv_round_trip(tmp_path):
    g = np.random.default_rng(2)
    net = generate_family_network(100, 5, 0.004, g)
    vacc = assign_vaccination(net.node_count, 0.5, g)
    traj = simulate_epidemic(net, vacc, DiseaseParams(p_o=0.02), g)
    pairs = [p for p, _ in extract_independent_pairs(net, g)]
    table = build_records(net, traj, vacc, pairs, DiseaseParams())
    path = tmp_path / "r.csv"
    save_records_csv(path, table)
    assert path.read_text().splitlines()[0] == ",".join(RECORD_COLUMNS)
    assert list(load_records_csv(path)) == list(table)


@pytest.mark.parametrize("body,line", [
    ("pair_id,V_a\n", 1),
    (",".join(RECORD_COLUMNS) + "\n0,1,0,5,1,0,0,0,0,0,0\n", 2),
    (",".join(RECORD_COLUMNS) + "\n0,1,0,5,1,0,0,0,0,0,0,0\n1,2,0,5,1,0,0,0,0,0,0,0\n", 3),
    (",".join(RECORD_COLUMNS) + "\n0,1,0,5,1,x,0,0,0,0,0,0\n", 2),
    (",".join(RECORD_COLUMNS) + "\n0,1,0,5,1,0,-1,0,0,0,0,0\n", 2),
])
def test_records_csv_errors_name_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError, match=f"line {line}"):
        load_records_csv(path)
