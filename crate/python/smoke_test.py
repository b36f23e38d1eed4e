"""Smoke test for the degreelab Python extension."""

import json
import math

import degreelab


def main():
    circle = [(math.cos(3 * t), math.sin(3 * t)) for t in (2 * math.pi * j / 512 for j in range(512))]
    assert degreelab.winding_degree(circle, (0.1, 0.2)) == 3
    assert degreelab.winding_degree(circle, (1.5, 0.0)) == 0

    params = json.loads(degreelab.chain_parameters(2, 1.0, 0.4, 8))
    assert params["q"] == 1.5 and params["e"] == 2
    centers, radii, circlings = degreelab.chain_geometry(2, 1.0, 0.4, 8)
    assert circlings[:3] == [1, 4, 9]
    for k in (1, 2, 3):
        y = centers[k - 1][:2]
        expected = 1 if k == 1 else 2 * k * k + 1
        assert degreelab.chain_degree(2, 1.0, 0.4, 8, y) == expected
        y = [centers[k - 1][0] + 0.5 * radii[k - 1], centers[k - 1][1]]
        assert degreelab.chain_degree(2, 1.0, 0.4, 8, y) == expected

    ks, sums, fit = degreelab.lp_mass(1.0, 0.4, 1024, 16)
    assert fit is not None and fit[1] > 0
    assert all(b > a for a, b in zip(sums, sums[1:]))

    d = degreelab.koch_dimension(6)
    assert abs(d - math.log(4) / math.log(3)) < 0.05, d
    v = degreelab.square_distance_integral(-0.5)
    assert abs(v - 3.7712) / 3.7712 < 0.02, v

    passed, checks = degreelab.run_experiment(json.dumps({"kind": "dimension-estimate"}))
    assert passed and checks and checks[0][0] == "dimension"

    try:
        degreelab.chain_degree(2, 1.0, 0.4, 8, [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("wrong target dimension accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
