"""Monotonicity of the normalized Husimi norms along the lattice q = p + n/j.

Run with ``python3 demos/norm_ladder.py``.  For random states the ratio
nnorm_q / nnorm_p never exceeds one on the lattice; coherent states attain
equality because all their normalized norms equal one.  Off-lattice
exponents are reported too, where monotonicity is only conjectured.
"""

from spinwehrl import coherent_state, default_rule, norm_profile, random_state


def main():
    rule = default_rule(64, 128)
    p, samples = 2.0, 300
    for tj in (2, 3, 4):
        j = tj / 2
        qs = [p + k / (2 * j) for k in range(1, 7)]
        worst = {q: 0.0 for q in qs}
        for i in range(samples):
            norms = norm_profile(random_state(tj, [5, tj, i]), [p] + qs, rule)
            for q in qs:
                worst[q] = max(worst[q], norms[q] / norms[p])
        coh = norm_profile(coherent_state(tj, 0), [p] + qs, rule)
        print(f"twice_j = {tj}, p = {p}, {samples} random states")
        for k, q in enumerate(qs, 1):
            tag = "lattice" if k % 2 == 0 else "between"
            print(f"  q = {q:6.4f} ({tag:7})  max ratio {worst[q]:.6f}  coherent {coh[q] / coh[p]:.12f}")


if __name__ == "__main__":
    main()
