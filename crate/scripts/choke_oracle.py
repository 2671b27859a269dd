"""Reference total mass flow values for the choke model test fixtures.

Evaluates the Sachdeva choke equation in 50-digit arithmetic with mpmath,
independently of the Rust implementation, for 100 fixed input cases.

    python3 scripts/choke_oracle.py > crates/core/tests/fixtures/choke_oracle.csv
"""
import random

import mpmath as mp

mp.mp.dps = 50


def flow(u, p1, p2, t, phi_g, phi_o, phi_w, rho_o, rho_w, kappa, z, m, r, r_c, c_d, a_max):
    u, p1, p2, t = map(mp.mpf, (u, p1, p2, t))
    phi_g, phi_o, phi_w = map(mp.mpf, (phi_g, phi_o, phi_w))
    rho_o, rho_w, kappa, z, m, r, r_c, c_d, a_max = map(
        mp.mpf, (rho_o, rho_w, kappa, z, m, r, r_c, c_d, a_max))
    pr = max(p2 / p1, r_c)
    rho_g1 = p1 * m / (z * r * t)
    rho_g2 = rho_g1 * pr ** (1 / kappa)
    rho_mix = 1 / (phi_g / rho_g2 + phi_o / rho_o + phi_w / rho_w)
    bracket = (kappa / (kappa - 1) * phi_g * (1 / rho_g1 - pr / rho_g2)
               + (phi_o / rho_o + phi_w / rho_w) * (1 - pr))
    return c_d * a_max * u * mp.sqrt(2 * rho_mix ** 2 * p1 * bracket)


def main():
    rng = random.Random(20240611)
    cols = ["u", "p1", "p2", "t", "phi_g", "phi_o", "phi_w", "rho_o", "rho_w", "kappa",
            "z", "m", "r", "r_c", "c_d", "a_max", "flow"]
    print(",".join(cols))
    for _ in range(100):
        u = rng.uniform(0.0, 1.0)
        p1 = rng.uniform(5e5, 1.5e7)
        p2 = p1 * rng.uniform(0.05, 1.0)
        t = rng.uniform(280.0, 420.0)
        gamma = rng.uniform(0.0, 1.0)
        lam = rng.uniform(0.0, 1.0)
        phi_g = gamma
        phi_o = (1 - gamma) * lam
        phi_w = (1 - gamma) * (1 - lam)
        rho_o = rng.uniform(650.0, 950.0)
        rho_w = rng.uniform(990.0, 1100.0)
        kappa = rng.uniform(1.1, 1.6)
        z = rng.uniform(0.7, 1.1)
        m = rng.uniform(0.016, 0.030)
        r = 8.314
        r_c = rng.uniform(0.45, 0.7)
        c_d = rng.uniform(0.6, 1.0)
        a_max = rng.uniform(1e-3, 5e-2)
        y = flow(u, p1, p2, t, phi_g, phi_o, phi_w, rho_o, rho_w, kappa, z, m, r, r_c, c_d, a_max)
        vals = [u, p1, p2, t, phi_g, phi_o, phi_w, rho_o, rho_w, kappa, z, m, r, r_c, c_d, a_max]
        print(",".join(repr(float(v)) for v in vals) + "," + mp.nstr(y, 20))


if __name__ == "__main__":
    main()
