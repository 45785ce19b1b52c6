"""Train reduced models of several orders on the four-signal learning set and
score them against the LOM over a diffusivity sweep under the daily sine.

Writes ``orders.csv`` (one row per order) and ``sweep_order<r>.csv`` (errors
per diffusivity) into ``--out``.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from walldiff.metrics import eps_inf
from walldiff.model import integrate_lom
from walldiff.rom import integrate_rom, learn, rom_errors
from walldiff.scenarios import learning_set, sweep_cases
from walldiff.swarm import SwarmConfig
from walldiff.workflow import write_table


def forward_times(system, reduced, case, dt, repeats=5):
    """Best-of-``repeats`` wall clock of the LOM and the ROM on one case."""
    def best(fn):
        out = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            out.append(time.perf_counter() - t0)
        return min(out)

    t_lom = best(lambda: integrate_lom(system, case.fo, case.forcing, case.init, dt))
    t_rom = best(lambda: integrate_rom(reduced, case.fo, case.forcing, dt))
    return t_lom, t_rom


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", default="1,2,3,5,7,10")
    ap.add_argument("--particles", type=int, default=50)
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-alpha", type=int, default=50)
    ap.add_argument("--out", default="rom_study")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ls = learning_set()
    alphas = np.linspace(2.03e-7, 6.37e-7, args.n_alpha)
    cases = sweep_cases(alphas)
    cfg = SwarmConfig(particles=args.particles, iterations=args.iterations, seed=args.seed)
    rows = []
    for order in (int(v) for v in args.orders.split(",")):
        t0 = time.perf_counter()
        reduced = learn(ls, order, cfg)
        train_s = time.perf_counter() - t0
        e2u, eiu, e2t, eit = rom_errors(reduced, cases, ls.dt)
        per_alpha = []
        for a, c in zip(alphas, cases):
            sol = integrate_rom(reduced, c.fo, c.forcing, ls.dt)
            per_alpha.append((a, eps_inf(sol.yu, c.reference.yu),
                              eps_inf(sol.ytheta, c.reference.ytheta)))
        write_table(out / f"sweep_order{order}.csv", ["alpha", "epsinf_u", "epsinf_theta"],
                    per_alpha)
        t_lom, t_rom = forward_times(ls.system, reduced, cases[len(cases) // 2], ls.dt)
        rows.append((order, e2u, eiu, e2t, eit, reduced.record["j_rom"], train_s, t_rom / t_lom))
        print(f"order {order}: eps_inf u {eiu:.3e} theta {eit:.3e}, J {reduced.record['j_rom']:.3e}, "
              f"train {train_s:.1f} s, cpu ratio {t_rom / t_lom:.3f}")
    write_table(out / "orders.csv", ["order", "eps2_u", "epsinf_u", "eps2_theta", "epsinf_theta",
                                     "j_rom", "train_s", "cpu_ratio"], rows)


if __name__ == "__main__":
    main()
