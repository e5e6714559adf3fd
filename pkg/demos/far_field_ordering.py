"""Spatial tails of four symmetric flows at the start of their evolution.

The early-time response to data a is t grad q with q = Lap^-1 d_h d_k (a_h a_k);
its decay rate is set by the first moment polynomial that is not divisible
by |xi|^2.  Larger symmetry groups push that polynomial to higher degree.
Takes about a minute.
"""
from symflow.farfield import early_time_tail
from symflow.fields import builtin_field

cases = [("prism (D_4h)", builtin_field("prism_a", 2), -4),
         ("T_d", builtin_field("bar_plus_tilde_a"), -5),
         ("O_h", builtin_field("tilde_a"), -6),
         ("Y_h", builtin_field("icosahedral_a"), -8)]
for label, a, expected in cases:
    fit = early_time_tail(a)
    print(f"{label:14s} tail exponent {fit.exponent:+.3f} (expected {expected}), valid={fit.valid}")
