"""Tabulate the approach of the finite-t quantities to their endpoint limits."""
import argparse
from dataclasses import dataclass

from sharp_ineq import mto
from sharp_ineq.sphere import ZonalFunction


@dataclass
class Config:
    n: int = 2
    coeffs: tuple = (0.0, 0.5, 0.3, -0.2)
    t_sequence: tuple = (0.04, 0.02, 0.01, 0.005, 0.0025)


def main(cfg: Config):
    tab = mto.endpoint_limit_check(ZonalFunction(cfg.n, cfg.coeffs), t_sequence=cfg.t_sequence)
    for which in ("sobolev", "hls"):
        print(f"# {which}")
        print(tab.to_csv(which), end="")
        print("halving ratios:", " ".join(f"{r:.4f}" for r in tab.halving_ratios(which)))
    print(f"constant lower bound, expansion: {mto.mto_constant_epsilon_bound(cfg.n):.10f}"
          f"  closed form: {mto.mto_constant_lower_bound(cfg.n):.10f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=Config.n)
    main(Config(n=ap.parse_args().n))
