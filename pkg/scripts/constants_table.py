"""Print sharp constants and the degree-k spectral table for a few (n, s)."""
import argparse
from dataclasses import dataclass, field

import numpy as np

from sharp_ineq import special


@dataclass
class Config:
    cases: list = field(default_factory=lambda: [(2, 0.5), (3, 1.0), (4, 0.75), (5, 2.2)])
    K: int = 6


def main(cfg: Config):
    for n, s in cfg.cases:
        P = special.Params(n, s)
        S = special.sobolev_constant(P)
        print(f"n={n} s={s}  S={S:.15g}  linearized={special.linearization_factor(P) * S:.15g}"
              f"  HLS={special.hls_constant(n, P.lam):.15g}")
        k = np.arange(2, cfg.K + 1)
        for kk, g, r in zip(k, special.gamma_k(P, k), special.ratio_beta_alpha(P, k)):
            print(f"   k={kk:3d}  gamma_k={g:.12e}  beta/alpha={r:.12e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=Config.K)
    main(Config(K=ap.parse_args().K))
