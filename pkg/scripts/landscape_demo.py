#!/usr/bin/env python3
"""Print one landscape curve and the tau(fhat) = R* identity for a toy problem."""

import numpy as np

import tradeoff_lab as tl

n = 40
grid = tl.uniform_grid(n)
p = tl.Problem(
    grid=grid,
    f0=tl.true_function_values("sin2pi", grid),
    lam=tl.rate_lambda(n, 0.5, 0.05),
    seminorm=tl.spline_penalty_form(grid, 2),
)
draw = tl.draw_noise(n, master_seed=42, rep_index=0)
radii = tl.default_radius_grid(p, alpha=0.5, size=16)
curve = tl.landscape_curve(p, draw, radii)
fit = tl.fit(p, p.f0 + draw.epsilon)

print(f"{'R':>10} {'M_n':>12} {'H_n':>12}")
for r, m, h in zip(curve.radii, curve.m_values, curve.h_values):
    print(f"{r:10.6f} {m:12.8f} {h:12.8f}")
print(f"\nR*        = {curve.r_star:.9f}")
print(f"tau(fhat) = {fit.tau:.9f}")
print(f"|diff|    = {abs(fit.tau - curve.r_star):.2e}")
