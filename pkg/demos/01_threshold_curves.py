"""Threshold curves in the (rho, rho_x) plane.

The first-order threshold sigma has a closed form for the Pipes family, so
the ODE construction can be checked against it. The second-order threshold
eta drops below sigma as C_eta grows and, for large enough C_eta, plunges
to -infinity before the inflection point rho_c.
"""

import numpy as np

from nonlocal_arz import make_pipes_flux, sigma_closed_form, solve_threshold_ode

for J in (1.0, 2.0, 3.0):
    model = make_pipes_flux(J)
    ode = solve_threshold_ode("sigma", model)
    exact = sigma_closed_form(model)
    r = np.linspace(0.0, model.rho_c, 1001)
    print(f"J={J:g}: rho_c={model.rho_c:.4f}  max|sigma_ode - rho(1-rho)/J| = "
          f"{np.max(np.abs(ode(r) - exact(r))):.1e}")

model = make_pipes_flux(2.0)
print("\nf = rho (1 - rho)^2, eta for increasing C_eta:")
probe = np.array([0.1, 0.2, 0.3, 0.4])
print("   C_eta   " + "  ".join(f"eta({p:.1f})" for p in probe) + "   rho_star")
for C in (0.0, 0.5, 1.0, 2.0, 3.0):
    eta = solve_threshold_ode("eta", model, C)
    vals = "  ".join(f"{v:8.4f}" for v in eta(probe))
    star = "none" if eta.rho_star is None else f"{eta.rho_star:.4f}"
    print(f"   {C:5.2f}   {vals}   {star}")
print("\nBeyond rho_star no profile is subcritical: eta is -inf there.")
