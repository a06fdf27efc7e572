#!/usr/bin/env python3
"""Extension pipeline on SL(2,Z) x| Z^2: spread lattice tents over the
matrix-part cosets and watch the window residual to 1 fall as k grows."""

import argparse
import sys

from mdlab.cli import main


def run(out: str) -> int:
    return main(["extension", "--k-list", "2,4,8,16,32,64,128",
                 "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/extension")
    sys.exit(run(ap.parse_args().out))
