"""Smoke test for the compiled extension.

Build with `cargo build --release -p mixext-python`, then copy
`target/release/libmixext.so` to `python/mixext.so` and run this script.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import mixext  # noqa: E402


def main():
    assert "cube2d" in mixext.domains()
    assert "sinpi" in mixext.functions()

    # on the domain the extension agrees with the finest quasi-interpolant,
    # so it approximates f at second order
    pts = [[0.1 + 0.8 * i / 9, 0.2 + 0.6 * j / 9] for i in range(10) for j in range(10)]
    exact = mixext.sample("sinpi", pts)
    errs = []
    for k in (2, 3, 4):
        ext = mixext.extend("cube2d", "sinpi", [1.5, 1.5], [2, 2], k)
        vals = ext.eval(pts)
        errs.append(max(abs(a - b) for a, b in zip(vals, exact)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    print("max errors", errs, "orders", orders)
    assert all(1.5 < o < 2.5 for o in orders), orders

    # outside the domain it is defined and compactly supported
    lo, hi = ext.support_box()
    outside = ext.eval([[hi[0] + 0.5, 0.5], [-0.5, 0.5]])
    assert outside[0] == 0.0 and math.isfinite(outside[1])
    assert ext.num_blocks == 25

    back = mixext.Extension.from_text(ext.to_text(), "cube2d")
    for a, b in zip(back.eval(pts, [1, 0]), ext.eval(pts, [1, 0])):
        assert abs(a - b) < 1e-11 * (1 + abs(b))

    h = mixext.prime_norm("cube2d", "gauss", [1.5, 1.5], theta=math.inf, x_level=5, kt=4)
    b = mixext.prime_norm("cube2d", "gauss", [1.5, 1.5], theta=2.0, x_level=5, kt=4)
    print("norms: theta=inf", h, "theta=2", b)
    assert 0 < h <= b * 16 * 2 ** 3

    rep = mixext.validate_domain("lshape2d", [2, 2], 2)
    assert rep["pass"] and rep["witness"] is None, rep

    try:
        mixext.extend("disk", "sinpi", [1.5, 1.5], [2, 2], 1)
    except ValueError as e:
        assert "cube2d" in str(e)
    else:
        raise AssertionError("unknown domain accepted")

    print("smoke ok")


if __name__ == "__main__":
    main()
