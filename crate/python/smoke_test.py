"""Smoke test for the zonematch Python extension.

Build and install first, e.g. `maturin build --release -m crates/py/Cargo.toml`
and `pip install` the wheel, then run `python python/smoke_test.py`.
"""

import json
import math
import os
import random
import tempfile

import zonematch as zm


def sep(ra1, dec1, ra2, dec2):
    p1, p2 = math.radians(dec1), math.radians(dec2)
    dl = math.radians(ra2 - ra1)
    a = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    a = min(1.0, max(0.0, a))
    return math.degrees(2 * math.atan2(math.sqrt(a), math.sqrt(1 - a)))


def main():
    assert zm.zone_of(-90.0) == 0
    assert zm.zone_of(0.0) == 1350
    assert zm.zone_of(90.0) == 2699
    assert zm.parse_angle("10arcsec") == 10 / 3600
    try:
        zm.parse_angle("10")
        raise AssertionError("bare number accepted")
    except ValueError:
        pass

    p, q = zm.SkyPoint(359.95, 0.0), zm.SkyPoint(0.05, 0.0)
    assert abs(zm.angular_separation(p, q) - 0.1) < 1e-12
    assert abs(p.separation(q) - sep(359.95, 0.0, 0.05, 0.0)) < 1e-12

    rng = random.Random(4)
    n = 3000
    ra_a = [rng.uniform(0, 2) for _ in range(n)]
    dec_a = [rng.uniform(-1, 1) for _ in range(n)]
    ra_b = [rng.uniform(0, 2) for _ in range(n)]
    dec_b = [rng.uniform(-1, 1) for _ in range(n)]
    a = zm.ZoneIndex.from_points("a", list(range(n)), ra_a, dec_a)
    b = zm.ZoneIndex.from_points("b", list(range(n, 2 * n)), ra_b, dec_b)
    assert len(a) == n and a.zone_count == 2700 and sum(a.histogram()) == n

    radius = 1 / 60
    want = sorted(
        (i, n + j)
        for i in range(n)
        for j in range(n)
        if sep(ra_a[i], dec_a[i], ra_b[j], dec_b[j]) <= radius
    )
    outputs = []
    for workers, strategy in [(1, "contiguous"), (4, "density"), (8, "round-robin")]:
        pairs, report = zm.crossmatch(a, b, radius, workers=workers, strategy=strategy)
        outputs.append(pairs)
        stats = json.loads(report)
        assert stats["worker_count"] == workers and len(stats["workers"]) == workers
    assert outputs[0] == outputs[1] == outputs[2]
    assert [(x, y) for x, y, _ in outputs[0]] == want, (len(outputs[0]), len(want))

    hits = a.cone_search(1.0, 0.0, 0.1)
    assert [i for i, _ in hits] == [i for i in range(n) if sep(1.0, 0.0, ra_a[i], dec_a[i]) <= 0.1]

    plan = zm.plan(a, 4, "density")
    assert plan.worker_count == 4 and plan.strategy == "density"
    assert zm.PartitionPlan.from_json(plan.to_json()).assignment() == plan.assignment()
    assert json.loads(plan.workload_report(a))["imbalance"] >= 1.0

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cat.csv")
        zm.generate(path, 5000, "clustered", seed=7)
        idx, rejected = zm.ZoneIndex.from_csv(path)
        assert len(idx) == 5000 and rejected == [] and idx.bands == ["r"]
        snap = os.path.join(tmp, "cat.idx")
        idx.save(snap)
        again = zm.ZoneIndex.load(snap)
        assert again.histogram() == idx.histogram()
        hits, report = again.scan("r", 9.0, 10.0, workers=2)
        assert all(9.0 <= m <= 10.0 for _, m in hits)
        assert sum(w["rows_scanned"] for w in json.loads(report)["workers"]) == 5000

    print("zonematch python smoke test: ok")


if __name__ == "__main__":
    main()
