"""Smoke test for the blockcap Python extension.

Build and install the wheel first:

    maturin build -m crates/py/Cargo.toml --release
    pip install target/wheels/blockcap-*.whl
"""

import math

import blockcap


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    bs = blockcap.BlockStructure(16, 4)
    assert (bs.signal_len, bs.num_blocks, bs.block_len) == (16, 4, 4)
    assert len(bs.pair_supports()) == 6

    model = blockcap.SensingModel.fourier(8, 16)
    p0 = model.random_init(1)
    a = model.assemble(p0)
    assert len(a) == 8 and len(a[0]) == 16
    for j in range(16):
        assert close(math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(8))), 1.0, 1e-12)

    report = blockcap.capacity_report(a, bs)
    assert report["min_capacity"] == min(report["per_pair"])
    assert report["min_capacity"] <= 0.0

    ric = blockcap.block_ric(a, blockcap.BlockStructure.singletons(16), t=2)
    assert close(ric["delta"], blockcap.mutual_coherence(a), 1e-10)

    assert blockcap.prox_linf([3.0, 1.0], 1.0) == [2.0, 1.0]
    assert blockcap.project_l1_ball([3.0, 1.0], 1.0) == [1.0, 0.0]
    try:
        blockcap.prox_linf([1.0], 0.0)
        raise AssertionError("non-positive weight accepted")
    except ValueError:
        pass

    result = blockcap.design(model, bs, p0, max_outer=10)
    assert result["optimized_min_capacity"] >= result["baseline_min_capacity"]
    assert result["termination"] in ("converged", "max_iter")
    again = blockcap.design(model, bs, p0, max_outer=10)
    assert again["p_final"] == result["p_final"]

    x = blockcap.random_block_sparse(bs, 1, 7, 0)
    a_opt = model.assemble(result["p_final"])
    y = [sum(a_opt[i][j] * x[j] for j in range(16)) for i in range(8)]
    rec = blockcap.solve_group_bp(a_opt, y, bs)
    assert rec["converged"]
    err = math.sqrt(sum(abs(u - v) ** 2 for u, v in zip(rec["x_hat"], x)))
    assert err <= 1e-3 * math.sqrt(sum(abs(v) ** 2 for v in x)), err

    try:
        blockcap.design(model, bs, p0, not_an_option=1)
        raise AssertionError("unknown option accepted")
    except ValueError:
        pass

    em = blockcap.SensingModel.em(antennas=9, pixels_per_side=4, square_side=2)
    assert em.natural_blocks().num_blocks == 4
    print("blockcap smoke test passed")


if __name__ == "__main__":
    main()
