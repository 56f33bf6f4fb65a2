"""The closed-form thermodynamics behind the adaptive schedule.

The sampler treats the vector of population-mean energies as a point on a
Riemannian manifold whose metric is the negative inverse of a closed-form
linear-response matrix.  Minimal entropy production then fixes the optimal
cooling trajectory (a power law) and, through the metric, the thermodynamic
force that the temperature update applies at every step.
"""

import numpy as np

import sabc

# the combinatorial coefficients entering the response matrix
print("response coefficients:", [sabc.catalan_coeff(n) for n in range(6)])

# response matrix and metric are negative inverses of each other
U = np.array([0.4, 0.25, 0.1])
c3 = sabc.catalan_coeff(3)
L = sabc.onsager_matrix(U, c3)
g = sabc.metric(U, c3)
print("\nmax |(-L g) - I| =", np.abs(-L @ g - np.eye(3)).max())

# the optimal trajectory is a power-law decay towards zero energy
for t in (0.0, 1.0, 10.0, 100.0):
    print(f"geodesic U(t={t:>5}):", np.round(sabc.geodesic_u(t, np.full(3, 0.5), v=1.0, n=3), 4))

# the beta <-> U relation closes the loop: mean energy 1/2 at infinite
# temperature, beta ~ 1/U when cold
print("\nmean energy at beta = 0:", sabc.u_of_beta(0.0))
for u in (0.4, 0.1, 0.01):
    print(f"beta for U = {u}: {sabc.beta_of_u(u):.3f}")

# the temperature update: internal temperature plus a force that never cools
sched = sabc.Schedule("multi", v=1.0, n_stats=3)
U = np.array([0.3, 0.3, 0.05])
beta = sabc.beta_of_u(U)
beta_e = sabc.update_beta_e_multi(sched, U)
print("\nU      :", U)
print("beta   :", np.round(beta, 3))
print("beta_e :", np.round(beta_e, 3), "(more converged statistics get pushed harder)")

# Monte Carlo verification of the closed-form response integral
rng = np.random.default_rng(0)
est, se = sabc.onsager_mc_estimate(2, 500_000, rng)
print("\nresponse integral, n = 2:")
print("  diagonal estimate %.3f +- %.3f (closed form 10)" % (est[0, 0], se[0, 0]))
print("  off-diag estimate %.3f +- %.3f (closed form -5)" % (est[0, 1], se[0, 1]))
