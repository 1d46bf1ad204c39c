#!/usr/bin/env python3
"""Regenerate the frozen oracle constants used by the test suite.

Every pinned expected value in tests/ was produced by an independent route
(high-precision quadrature or closed-form hand arithmetic), not by the
library code under test.  Run this script to re-derive them.
"""

import mpmath as mp

mp.mp.dps = 30


def truncated_second_moment_normal(t):
    return 2 * mp.quad(lambda x: x * x * mp.npdf(x), [t, mp.inf])


def main() -> None:
    print("# standard normal truncated second moments E[X^2; |X| >= t]")
    for t in ("0", "0.5", "1", "2", "3.5"):
        print(f"T_normal({t}) = {mp.nstr(truncated_second_moment_normal(mp.mpf(t)), 17)}")

    print("\n# standard normal CDF / quantile")
    print(f"Phi(1.96)   = {mp.nstr(mp.ncdf(mp.mpf('1.96')), 17)}")
    print(f"Phi^-1(0.975) = {mp.nstr(mp.sqrt(2) * mp.erfinv(2 * mp.mpf('0.975') - 1), 17)}")

    print("\n# cumulative variance, power law p=0.1 a=1 s2=4 b=1 at n=2")
    # (1 - 0.1) + 0.1*4  +  (1 - 0.05) + 0.05*8  =  1.3 + 1.35
    print("s_2^2 =", mp.nstr(mp.mpf("0.9") + mp.mpf("0.4") + mp.mpf("0.95") + mp.mpf("0.4"), 17))


if __name__ == "__main__":
    main()
