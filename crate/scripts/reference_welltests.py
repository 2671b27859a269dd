"""Generates the frozen reference well-test table used by the 10-well benchmarks.

Run once; the output is committed as crates/core/data/reference_welltests.csv.
Per-well test counts and composition ranges describe a 10-well field with
190 tests over the horizon. Times are distinct and at least
two steps apart so the step preceding every test is a production step.

    python3 scripts/reference_welltests.py > crates/core/data/reference_welltests.csv
"""
import random

HORIZON = 840
# (tests, min gamma, max gamma, min lambda, max lambda)
WELLS = [
    (14, 0.13, 0.14, 0.81, 0.90),
    (21, 0.14, 0.16, 0.78, 1.00),
    (22, 0.14, 0.17, 0.96, 1.00),
    (29, 0.15, 0.16, 0.97, 1.00),
    (14, 0.08, 0.15, 0.86, 0.95),
    (15, 0.15, 0.17, 0.96, 1.00),
    (17, 0.13, 0.29, 0.81, 0.97),
    (7, 0.05, 0.14, 0.79, 0.87),
    (18, 0.14, 0.15, 0.89, 1.00),
    (33, 0.14, 0.16, 0.87, 0.99),
]
# well index (0-based) that is untested during the first half of the horizon
LATE_WELL = 7


def walk(rng, n, lo, hi):
    x = rng.uniform(lo, hi)
    out = [x]
    sd = (hi - lo) / 3.0
    for _ in range(n - 1):
        x = min(hi, max(lo, x + rng.gauss(0.0, sd)))
        out.append(x)
    # make sure the recorded range is actually spanned
    out[rng.randrange(n)] = lo
    out[rng.randrange(n)] = hi
    return out


def main():
    rng = random.Random(190)
    taken = set()

    def free(t):
        return all(abs(t - s) >= 2 for s in taken)

    rows = []
    for j, (count, g_lo, g_hi, l_lo, l_hi) in enumerate(WELLS):
        lo_t = HORIZON // 2 if j == LATE_WELL else 2
        times = []
        while len(times) < count:
            t = rng.randrange(lo_t, HORIZON - 1)
            if free(t):
                taken.add(t)
                times.append(t)
        times.sort()
        gammas = walk(rng, count, g_lo, g_hi)
        lambdas = walk(rng, count, l_lo, l_hi)
        for t, g, l in zip(times, gammas, lambdas):
            rows.append((t, j, g, l))
    rows.sort()
    print("t,well_id,gamma,lambda")
    for t, j, g, l in rows:
        print(f"{t},{j},{g:.4f},{l:.4f}")


if __name__ == "__main__":
    main()
