"""Grid oracle for the two-qubit feasibility floor.

Establishes, independently of the package, how small the summed
violation of the two-voter overlap conditions can get for qubits:

    f = |<U x I>|^2 + |<I x V>|^2 + |<U x V>|^2 + |1 - <U x V^d>|^2

with U = I cos(nu) + i (m.sigma) sin(nu), V likewise. The sweep walks
nu, theta and the spherical angles of m_hat, n_hat on a pi/12 grid
against a pool of 50 seeded Haar-random two-qubit states, using the
closed form of f in the correlators alpha = <m.sigma x I>,
beta = <I x n.sigma>, T = <m.sigma x n.sigma>. A Nelder-Mead polish
from the best grid point then tightens the estimate, and the floor is
set at 90 percent of the polished minimum.

Writes nogo_grid.json next to this script. Runtime is a few minutes.
"""

import json
import time
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

ANGLE_STEP = np.pi / 12
OMEGA_POOL = 50
SEED = 20240817
SAFETY = 0.9

SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def sphere_grid(step):
    polar = np.arange(0, np.pi + step / 2, step)
    azim = np.arange(0, 2 * np.pi, step)
    dirs = []
    for t in polar:
        for p in azim:
            dirs.append([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
    return np.unique(np.round(np.array(dirs), 12), axis=0)


def correlators(omega):
    """alpha_i = <sigma_i x I>, beta_i = <I x sigma_i>, T_ij = <sigma_i x sigma_j>."""
    rho = np.outer(omega, omega.conj()).reshape(2, 2, 2, 2)
    alpha = np.array([np.einsum("abcb,ca->", rho, SIGMA[i]).real for i in range(3)])
    beta = np.array([np.einsum("abad,db->", rho, SIGMA[i]).real for i in range(3)])
    T = np.array([[np.einsum("abcd,ca,db->", rho, SIGMA[i], SIGMA[j]).real
                   for j in range(3)] for i in range(3)])
    return alpha, beta, T


def residual_closed_form(cn, sn, ct, st, am, bn, T):
    fa = cn ** 2 + (sn * am) ** 2
    fb = ct ** 2 + (st * bn) ** 2
    re_c = cn * ct - sn * st * T
    im_c = cn * st * bn + sn * ct * am
    re_e = cn * ct + sn * st * T
    im_e = sn * ct * am - cn * st * bn
    return fa + fb + re_c ** 2 + im_c ** 2 + (1 - re_e) ** 2 + im_e ** 2


def raw_residual(x):
    """Direct 16-parameter evaluation used by the polish step."""
    nu, theta = x[0], x[1]
    m = x[2:5] / max(np.linalg.norm(x[2:5]), 1e-12)
    n = x[5:8] / max(np.linalg.norm(x[5:8]), 1e-12)
    w = (x[8:12] + 1j * x[12:16])
    w = w / max(np.linalg.norm(w), 1e-12)
    U = np.cos(nu) * np.eye(2) + 1j * np.sin(nu) * np.tensordot(m, SIGMA, 1)
    V = np.cos(theta) * np.eye(2) + 1j * np.sin(theta) * np.tensordot(n, SIGMA, 1)
    a = np.vdot(w, np.kron(U, np.eye(2)) @ w)
    b = np.vdot(w, np.kron(np.eye(2), V) @ w)
    c = np.vdot(w, np.kron(U, V) @ w)
    e = np.vdot(w, np.kron(U, V.conj().T) @ w)
    return abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(1 - e) ** 2


def main():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    dirs = sphere_grid(ANGLE_STEP)
    angles = np.arange(0, 2 * np.pi, ANGLE_STEP)
    omegas = rng.standard_normal((OMEGA_POOL, 4)) + 1j * rng.standard_normal((OMEGA_POOL, 4))
    omegas /= np.linalg.norm(omegas, axis=1, keepdims=True)

    best = {"value": np.inf}
    for w_idx, omega in enumerate(omegas):
        alpha, beta, T = correlators(omega)
        am = dirs @ alpha            # (M,)
        bn = dirs @ beta             # (M,)
        tmn = dirs @ T @ dirs.T      # (M, M)
        for nu in angles:
            cn, sn = np.cos(nu), np.sin(nu)
            for theta in angles:
                ct, st = np.cos(theta), np.sin(theta)
                f = residual_closed_form(cn, sn, ct, st,
                                         am[:, None], bn[None, :], tmn)
                idx = np.unravel_index(np.argmin(f), f.shape)
                if f[idx] < best["value"]:
                    best = {"value": float(f[idx]), "nu": float(nu), "theta": float(theta),
                            "m_hat": dirs[idx[0]].tolist(), "n_hat": dirs[idx[1]].tolist(),
                            "omega_index": w_idx}
    grid_min = best["value"]

    omega = omegas[best["omega_index"]]
    x0 = np.concatenate([
        [best["nu"], best["theta"]], best["m_hat"], best["n_hat"],
        omega.real, omega.imag,
    ])
    polish = minimize(raw_residual, x0, method="Nelder-Mead",
                      options={"maxiter": 20000, "xatol": 1e-12, "fatol": 1e-14})
    refined_min = float(polish.fun)
    floor = SAFETY * refined_min

    out = {
        "description": "coarse-grid oracle for the two-qubit feasibility floor",
        "angle_step": ANGLE_STEP,
        "direction_count": int(len(dirs)),
        "omega_pool": OMEGA_POOL,
        "seed": SEED,
        "grid_min": grid_min,
        "grid_argmin": {k: v for k, v in best.items() if k != "value"},
        "refined_min": refined_min,
        "safety_factor": SAFETY,
        "epsilon0": floor,
        "runtime_seconds": round(time.time() - t0, 1),
    }
    path = Path(__file__).with_name("nogo_grid.json")
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
