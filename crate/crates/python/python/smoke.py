"""Smoke test for the predplan extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import pathlib
import sys

import predplan

ROOT = pathlib.Path(__file__).resolve().parents[3]


def main() -> int:
    grid = [[False] * 60 for _ in range(40)]
    for iy in range(18, 22):
        for ix in range(28, 32):
            grid[iy][ix] = True
    field = predplan.DistanceField(grid, 0.1)
    assert field.shape == (40, 60)
    d, _, inside = field.sample(1.0, 2.0)
    # block spans x in [2.8, 3.2]; the point is about 1.8 m to its left
    assert inside and abs(d - 1.8) < 0.1, d

    crowded = field.with_discs([(1.0, 1.0)], 0.25)
    assert crowded.sample(1.0, 1.0)[0] == 0.0

    track = [(0.1 * k, 0.1 * k, 3.0) for k in range(12)]
    pred = predplan.predict(track, [(5.5, 3.0, 1.0), (1.0, 0.5, 1.0)], field)
    assert pred.goal == (5.5, 3.0), pred.goal
    assert len(pred.times) == len(pred.positions)
    assert abs(sum(pred.posterior) - 1.0) < 1e-9

    cvm = predplan.predict_cvm(track, 2.0, 0.5)
    assert abs(cvm[-1][0] - (1.1 + 2.0)) < 1e-9

    # start off the block axis; a perfectly collinear start is a saddle
    path, trace = predplan.plan(field, (0.5, 2.3), (5.5, 2.0))
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert all(field.sample(x, y)[0] > 0.3 for x, y in path)

    scenario = predplan.Scenario.load(str(ROOT / "scenarios" / "change_of_places.toml"))
    min_none, hit_none, _, _ = scenario.run("none")
    min_ours, hit_ours, reached, csv = scenario.run("proposed")
    assert csv.startswith("time,robot_x")
    print(f"{scenario.name}: none {min_none:.3f} m (collision {hit_none}), proposed {min_ours:.3f} m (collision {hit_ours}, reached {reached})")
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
