"""Extend a function from the Hartogs figure to the unit bidisc, slicing in z1."""
from hartogs import Extender, hartogs_figure, parse


def main():
    hf = hartogs_figure((0.5, 0.5), 2)
    f = parse("1/(z1-3) + z1*z2", 2)
    ext = Extender(f, hf.ambient, hf.removable, 1, eps=0.2, step=0.1, verify=False)
    points = [(0.3, 0.8), (0.1j, 0.7), (-0.2, -0.75j), (0.4, 0.9), (0.2, 0.2)]
    for z in points:
        inside = hf.figure.contains(z)
        rep = ext.extend_at(z)
        print(f"{str(z):>22}  in H: {str(inside):5}  F = {rep.value:.12f}  "
              f"|F - f| = {abs(rep.value - f(z)):.1e}  ({rep.provenance.code})")


if __name__ == "__main__":
    main()
