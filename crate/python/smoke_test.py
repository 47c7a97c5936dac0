"""Smoke test for the `superpos` extension module.

Build and install it first:

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math

import superpos


def binary_entropy(p):
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def main():
    vec = superpos.BroadcastChannel.vector()
    uv = superpos.UVDist([0.5, 0.5], [0.5, 0.5], [0, 1, 2, 3], 4)
    region = superpos.region_uv(vec, uv)
    assert region.contains(1.0, 1.0), region

    # cloud on receiver 1 only reaches sum rate 1 on this channel
    ux = superpos.UXDist(2, 4, [0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25])
    het = superpos.region_ux(vec, ux).union(superpos.region_vx(vec, ux))
    assert het.max_weighted_sum(1.0, 1.0) <= 1.0 + 1e-9
    assert region.includes(het)

    terms = superpos.mi_terms_ux(vec, ux)
    assert abs(terms["i_u_y1"] - 1.0) < 1e-12 and abs(terms["i_u_y2"]) < 1e-12

    bsc = superpos.BroadcastChannel.bsc(0.1, 0.2)
    assert bsc.is_degraded()
    assert abs(superpos.entropy([0.1, 0.9]) - binary_entropy(0.1)) < 1e-12
    i = superpos.mutual_information((2, 2), [0.45, 0.05, 0.05, 0.45])
    assert abs(i - (1 - binary_entropy(0.1))) < 1e-12

    cert = superpos.verify_inclusion(bsc, superpos.UXDist.random(7, 2, 2))
    assert cert["verdict"], cert

    q = ux.functional_representation()
    assert max(abs(a - b) for a, b in zip(q.joint_ux(), ux.pux)) < 1e-12

    hull = superpos.sweep_uv(bsc, random_samples=200, refine_iters=5)
    assert 0.5 < hull.max_weighted_sum(1.0, 0.0) <= 1 - binary_entropy(0.1) + 1e-9

    same = superpos.BroadcastChannel.loads(bsc.dumps())
    assert same.transitions == bsc.transitions
    assert isinstance(superpos.load_dist(ux.dumps()), superpos.UXDist)

    sim = superpos.estimate_error(vec, ux, n=8, r1=0.0, r2=0.0, trials=20)
    assert sim["joint_errors"] == 0, sim

    try:
        superpos.UVDist([0.5, 0.6], [1.0], [0, 1], 2)
    except ValueError:
        pass
    else:
        raise AssertionError("unnormalized pmf accepted")

    print("superpos smoke test passed")


if __name__ == "__main__":
    main()
