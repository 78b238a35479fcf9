"""Wehrl entropy of a few spin states next to the two lower bounds.

Run with ``python3 demos/entropy_tour.py``.  Coherent states sit exactly on
the lower bound 2j/(2j+1) and every other state lies strictly above it.
For spin 1/2 every state is coherent, so all rows of the first block sit on
the bound.  The unconditional bound stays below it by less than 1/(4j).
"""

import math

from spinwehrl import (coherent_state, default_rule, lieb_bound, random_state, theorem2_bound,
                       wehrl_entropy)
from spinwehrl.states import basis_state


def main():
    rule = default_rule(64, 128)
    print(f"{'twice_j':>7} {'state':>12} {'S':>12} {'S - lieb':>12} {'S - thm2':>12}")
    for tj in (1, 2, 3, 4):
        lb, t2 = lieb_bound(tj), theorem2_bound(tj)
        states = {
            "coherent": coherent_state(tj, 0.3 - 0.7j),
            "basis k=1": basis_state(tj, 1),
            "random": random_state(tj, 1),
        }
        for name, f in states.items():
            s = wehrl_entropy(f, rule)
            print(f"{tj:>7} {name:>12} {s:12.8f} {s - lb:12.2e} {s - t2:12.2e}")
    print()
    print("spin-1 state z:  S = 5/3 - ln 2 =", 5 / 3 - math.log(2))
    print("                 quadrature     =", wehrl_entropy(basis_state(2, 1), rule))


if __name__ == "__main__":
    main()
