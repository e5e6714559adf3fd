"""Why symmetry buys spatial decay: the moment polynomial P_m must be divisible by |xi|^2.

Builds the two cubic example fields, checks their symmetry groups, and
shows which moment polynomials vanish, which are divisible and which are not.
"""
from symflow import fields as F
from symflow import polyalg as pa
from symflow.groups import standard_group

bar, til = F.builtin_field("bar_a"), F.builtin_field("tilde_a")
for name, a in (("bar_a", bar), ("tilde_a", til), ("bar_a + tilde_a", bar + til)):
    groups = [g for g in ("T", "T_d", "O_h") if F.is_invariant(a, standard_group(g))]
    print(f"{name:16s} invariant under {', '.join(groups)}")
    for m in range(3):
        P = pa.compute_Pm(a, m)
        _, R = pa.divide_by_r2(P)
        status = "zero" if P.norm() < 1e-12 else ("divisible" if pa.is_divisible(P) else "NOT divisible")
        print(f"    P_{m}: {status:14s} remainder/|P| = {R.norm() / max(P.norm(), 1e-300):.3g}")

# the first non-divisible P_m fixes the decay |x|^-(d+1+m): 5 for the sum at m=1, 6 for tilde_a at m=2
print()
for name in ("T", "O", "Y"):
    G = standard_group(name)
    dims = [len(pa.invariant_space(G, d)) for d in range(2, 7)]
    print(f"{name}: invariant polynomial dimensions for degrees 2..6 = {dims}")
