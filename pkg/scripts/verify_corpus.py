"""Check the main inequality and the square identity on a seeded corpus."""
import argparse
from dataclasses import dataclass

import numpy as np

from sharp_ineq import functionals, special


@dataclass
class Config:
    n: int = 2
    s: float = 0.5
    size: int = 100
    seed: int = 0
    C_relative: float = 1.0


def main(cfg: Config):
    P = special.Params(cfg.n, cfg.s)
    C = cfg.C_relative * special.sobolev_constant(P)
    corpus = functionals.random_corpus(P, cfg.size, seed=cfg.seed)
    checks = [functionals.verify_main_inequality(F, P, C=C) for F in corpus]
    rel = np.array([c.margin / c.scale for c in checks])
    sq = max(functionals.verify_square_identity(F, P).residual for F in corpus)
    print(f"functions: {cfg.size}  violations: {sum(not c.holds for c in checks)}")
    print(f"relative margin: min {rel.min():.3e}  median {np.median(rel):.3e}")
    print(f"square identity residual: {sq:.3e}")
    lim = functionals.quotient_lower_bound(P)
    print(f"degree-2 quotient limit {lim.limit:.10f}  expected {lim.expected:.10f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=Config.n)
    ap.add_argument("--s", type=float, default=Config.s)
    ap.add_argument("--size", type=int, default=Config.size)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--C", type=float, default=Config.C_relative)
    a = ap.parse_args()
    main(Config(a.n, a.s, a.size, a.seed, a.C))
