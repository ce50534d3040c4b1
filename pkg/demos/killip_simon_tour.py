"""Killip-Simon on a few perturbations of the free Jacobi matrix."""
import numpy as np

from sumrule_lab import add_atoms, jacobi_measure, make_reference, verify

k = np.arange(1, 201)
cases = {
    "free": make_reference("SC"),
    "decaying b, a": jacobi_measure(0.4 / k ** 2, 1 + 0.2 / k ** 2),
    "one site b_1 = 1.5": jacobi_measure([1.5], []),
    "SC plus two atoms": add_atoms(make_reference("SC"), [(2.5, 0.05), (-3.0, 0.02)]),
}

print(f"{'measure':22s} {'K(SC|mu)':>12s} {'outliers':>12s} {'series':>12s}  verdict")
for name, mu in cases.items():
    r = verify("KillipSimon", mu)
    print(f"{name:22s} {r.kl:12.8f} {r.outliers:12.8f} {r.rhs:12.8f}  {r.verdict}")
