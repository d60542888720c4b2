"""Regenerate the frozen planar-bound golden values from the brute-force oracle.

Usage: python3 scripts/make_planar_golden.py
"""

import json
from fractions import Fraction
from pathlib import Path

from spinwitness.oracle import brute_force_planar

N_SAMPLES = 1_000_000
SEED = 20240601


def main():
    rows = []
    for twoJ in range(1, 11):
        J = Fraction(twoJ, 2)
        value, _ = brute_force_planar(J, n_samples=N_SAMPLES, seed=SEED)
        rows.append({"J": str(J), "C_J": round(value, 12)})
        print(J, value)
    out = {
        "method": f"random pure states ({N_SAMPLES} per J, seed {SEED}) + BFGS refinement of the 20 best",
        "units": "spin (multiply by 4 for Pauli units)",
        "values": rows,
    }
    path = Path(__file__).resolve().parents[1] / "src" / "spinwitness" / "data" / "planar_golden.json"
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
