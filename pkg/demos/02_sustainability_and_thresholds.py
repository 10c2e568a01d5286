#!/usr/bin/env python3
"""When does self-interest keep peers uploading?

A protocol survives exactly when no single-period deviation profits: refusing
every upload saves lam*b*c now but triggers the punishment lottery next
period.  This demo evaluates the constraint slacks directly and then walks
the design boundaries: the minimum activity threshold, the maximum connection
count, the cost-ratio ceiling, the patience floor, the forgiveness ceiling,
and the altruist ceiling.
"""

import numpy as np

from normforge import (
    NetworkEnv,
    ProtocolParams,
    check_equilibrium,
    existence_cost_threshold,
    existence_discount_threshold,
    max_altruist_fraction,
    max_connections,
    max_forgiveness,
    min_service_threshold,
    overall_utilities,
)

env = NetworkEnv(r=1.0, c=0.2, eps=0.1, lam=1.0, delta=0.8)
params = ProtocolParams(L=3, h_o=1, b=2)

print("=" * 72)
print("One protocol under the microscope (L=3, h_o=1, b=2, c/r=0.2)")
print("=" * 72)
profile = overall_utilities(params, env)
print("  discounted values by reputation:",
      ", ".join(f"{v:.3f}" for v in profile.v_inf))
report = check_equilibrium(params, env)
print(f"  service slack {report.serve_slack:+.4f}   refusal slack "
      f"{report.refuse_slack:+.4f}   equilibrium: {report.is_equilibrium}")

print()
print("=" * 72)
print("Design boundaries for this network")
print("=" * 72)
print(f"  smallest sustainable activity threshold: {min_service_threshold(env, b=2)}")
print(f"  largest sustainable connection count at h_o=1: {max_connections(env, 1, 20)}")
for L in (1, 3, 10):
    print(f"  cost-ratio ceiling T_c at ladder L={L}: "
          f"{existence_cost_threshold(env, L):.4f}")
print(f"  patience floor T_delta at L=3: "
      f"{existence_discount_threshold(env, 3):.6f}")
print(f"  forgiveness ceiling at (h_o=1, b=2): "
      f"{max_forgiveness(params, env):.4f}")
print(f"  altruist ceiling at (h_o=1, b=2): "
      f"{max_altruist_fraction(params, env):.4f}  (never above 0.5)")

print()
print("=" * 72)
print("The cost boundary bites exactly where the formula says")
print("=" * 72)
t_c = existence_cost_threshold(env, 3)
best = ProtocolParams(L=3, h_o=3, b=1)
for c in (t_c - 0.01, t_c + 0.01):
    verdict = check_equilibrium(best, env.replace(c=c)).is_equilibrium
    print(f"  c/r = {c:.4f}  ->  sustainable: {verdict}")

print()
print("Sweep of the service slack in each direction (sign = sustainability):")
for label, values, make in (
    ("c/r", (0.1, 0.3, 0.5), lambda v: (params, env.replace(c=v))),
    ("delta", (0.3, 0.6, 0.9), lambda v: (params, env.replace(delta=v))),
    ("b", (1, 4, 8), lambda v: (ProtocolParams(L=3, h_o=1, b=int(v)), env)),
    ("h_o", (1, 2, 3), lambda v: (ProtocolParams(L=3, h_o=int(v), b=2), env)),
):
    row = []
    for v in values:
        p, e = make(v)
        slack = check_equilibrium(p, e).serve_slack / (e.lam * p.b)
        row.append(f"{v}: {slack:+.3f}")
    print(f"  per-request slack vs {label:<6} " + "   ".join(row))
