"""Extend 1/(z2 - 3) across the closed polydisc of radius 0.5 and compare with the original."""
import itertools

import numpy as np

from hartogs import Extender, closed_polydisc_set, parse, polydisc_domain


def main():
    omega = polydisc_domain((0, 0), 1.5)
    hole = closed_polydisc_set((0, 0), 0.5)
    f = parse("1/(z2-3)", 2)
    ext = Extender(f, omega, hole, 2, eps=0.4, step=0.1)
    axis = [-0.4, 0.0, 0.25j, 0.3 - 0.2j]
    print(f"{'z':>32}  {'F(z)':>30}  {'|F - f|':>9}  provenance")
    for z in itertools.product(axis, axis):
        rep = ext.extend_at(z)
        dev = abs(rep.value - f(z))
        print(f"{str(z):>32}  {rep.value:>30.15f}  {dev:9.2e}  {rep.provenance.code}")
    fc = ext.neighborhood((0,))
    print(f"contour at z1=0: {len(fc.contour.loops)} loop(s), h={fc.contour.h:.4f}, rho={fc.rho:.4f}")
    assert np.isfinite(fc.rho)


if __name__ == "__main__":
    main()
