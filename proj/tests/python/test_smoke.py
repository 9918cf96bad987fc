import math
import random

import pytest

import pcnroute as pr


def small_network(seed=3, n=60):
    g = pr.generate("waxman", n, seed=seed, mean_degree=6,
                    capacity={"kind": "lognormal", "median": 50000, "sigma": 0.5})
    if not g.is_connected():
        g, _ = pr.largest_component(g)
    coords = pr.assign_coordinates(g, dim=3, seed=seed)
    return g, coords, pr.build_mdt(g, coords)


def test_generate_is_seeded():
    a = pr.generate("waxman", 50, seed=1, mean_degree=5)
    b = pr.generate("waxman", 50, seed=1, mean_degree=5)
    assert a.channels() == b.channels()
    assert a.node_count == 50


def test_topology_csv_round_trip(tmp_path):
    g = pr.generate("scalefree", 40, seed=2, m=2)
    path = tmp_path / "t.csv"
    pr.write_topology_csv(g, path)
    assert pr.read_topology_csv(path).channels() == g.channels()


def test_routing_conserves_funds():
    g, _, mdt = small_network()
    total = g.total_balance()
    rng = random.Random(0)
    ok = 0
    for t in range(200):
        s, r = rng.sample(range(g.node_count), 2)
        res = pr.route_mdt(mdt, g, s, r, rng.randint(1, 20000), trans_id=t)
        if res["success"]:
            ok += 1
            assert res["path"][0] == s and res["path"][-1] == r
        assert g.total_balance() == total
    assert ok > 50
    res = pr.route_pe(mdt, g, 0, 1, 10, seed=5)
    assert res["reason"] in {"none", "no-route", "insufficient", "loop-guard", "line-exited", "commit-failed"}


def test_direct_hop_balances():
    g = pr.Graph(3)
    g.add_channel(0, 1, 5, 5)
    g.add_channel(1, 2, 5, 5)
    mdt = pr.build_mdt(g, [[0.0, 0.0], [1.0, 0.2], [2.0, 0.0]])
    res = pr.route_mdt(mdt, g, 0, 2, 3)
    assert res["success"] and res["path"] == [0, 1, 2]
    assert (g.balance(0, 1), g.balance(1, 0)) == (2, 8)
    assert (g.balance(1, 2), g.balance(2, 1)) == (2, 8)


def test_anonymity_formulas():
    assert pr.path_avoid_prob(10, 0.1, 3) == pytest.approx(0.7)
    assert pr.path_avoid_prob(10, 0.9, 3) is None
    assert pr.entropy_ratio([0.25] * 4) == pytest.approx(1.0)
    mdt = pr.anonymity_mdt(1000, 0.1, 4, 8)
    pe = pr.anonymity_pe(1000, 0.1, 4, 8)
    assert 0 < mdt <= pe <= 1


def test_message_codec():
    msg = {"trans_id": 7, "type": 3, "scheme": "pe", "dim": 2,
           "direction": [0.5, -1.0, 0.6, 0.8], "capacity": 4, "commit": 5}
    raw = pr.encode_message(msg)
    assert len(raw) == 4 + 26 + 8 * 4
    out = pr.decode_message(raw)
    assert out["type_name"] == "PROBE"
    assert {k: out[k] for k in msg} == msg
    with pytest.raises(pr.ProtocolError):
        pr.decode_message(raw[:-1])


def test_run_experiment():
    cfg = {"topology": {"model": "waxman", "n": 80, "mean_degree": 6},
           "router": "wf", "tx_count": 100, "seed": 4, "runs": 2}
    runs = pr.run_experiment(cfg)
    assert len(runs) == 2
    for r in runs:
        assert 0 <= r["success_ratio"] <= 1
        assert r["router"] == "wf"
    assert pr.run_experiment(cfg) == runs


def test_grid_spectrum():
    g = pr.generate("grid", 0, seed=0, rows=12, cols=12)
    s = pr.svd_spectrum(g)
    assert s[0] == pytest.approx(1.0)
    assert s[1] >= 3 * s[3] and not math.isnan(s[1])
