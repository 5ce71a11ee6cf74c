"""Regenerate the exact cubic piece table shipped with the package.

Runs the B-recurrence symbolically on every cell of the reference split and
writes rational coefficients as strings.
"""

import argparse
import time
from pathlib import Path

from wsspline.local_basis import _table_to_json, generate_piece_table

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "wsspline" / "data" / "ws3_pieces.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    t0 = time.time()
    table = generate_piece_table()
    args.out.write_text(_table_to_json(table))
    print(f"wrote {args.out} ({len(table)} functions x {len(table[0])} cells) in {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
