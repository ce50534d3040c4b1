"""Three series for K(Pois(zeta) | nu) and how fast they approach it."""
import numpy as np

from sumrule_lab import kl, make_reference
from sumrule_lab.sumrules import coefficient_side, parse_rule

zeta = 0.3 + 0.2j
nu = make_reference("GW", g=-0.5)
target = kl(make_reference("Pois", zeta=zeta), nu)
print(f"K(Pois|GW(-0.5)) = {target:.12f}")
for variant in ("NP", "Bessonov", "Simon"):
    rule = parse_rule({"rule": "Poisson" + variant, "params": {"zeta": [zeta.real, zeta.imag]}})
    s = coefficient_side(rule, nu)
    p = s.partials
    print(f"{variant:9s} value {s.value:.12f}  partial sums at 1, 5, 20: "
          + ", ".join(f"{p[i]:.6f}" for i in (0, 4, 19)))
