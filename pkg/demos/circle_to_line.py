"""Moving between the circle and the line: Szego map, Geronimus relations, DVZ."""
import numpy as np

from sumrule_lab import (dvz_push, jacobi_from_measure, kl, make_reference, szego_push,
                         verblunsky_from_measure, verblunsky_measure)
from sumrule_lab.oprl import canonical_from_jacobi

alpha = np.array([0.5, -0.3, 0.2, 0.1])
nu = verblunsky_measure(alpha)

# canonical moments of Sz(nu) are the Verblunsky coefficients of nu
u = canonical_from_jacobi(jacobi_from_measure(szego_push(nu), 4))[:6]
print("alpha        ", np.r_[alpha, 0, 0])
print("u(Sz nu)     ", np.round(u, 12))

# DVZ+: a_k = rho_{k-1}, b_1 = 1 + alpha_0, b_k = alpha_{k-1} - alpha_{k-2}
J = jacobi_from_measure(dvz_push(nu), 5)
print("DVZ a        ", np.round(J.a, 12))
print("DVZ b        ", np.round(J.b, 12))

# relative entropy is preserved by the pushforward
hp = make_reference("HP", d=1)
print("K(HP|nu)     ", kl(hp, nu))
print("K(Sz HP|Sz nu)", kl(szego_push(hp), szego_push(nu)))
print("alpha(HP(1)) ", verblunsky_from_measure(hp, 5).alpha.real)
