# src/db/utils.py
from __future__ import annotations

import argparse

from src.db.migrations import init_db
from src.db.repositories.grams import delete_cache_entries, list_cache_entries


def main() -> None:
    parser = argparse.ArgumentParser(description="Prune cached Gram matrices by age.")
    parser.add_argument(
        "--older-than-days",
        type=float,
        default=None,
        help="Only entries unused for this many days (default: all entries).",
    )
    parser.add_argument("--apply", action="store_true", help="Actually delete entries. Without this flag - dry run.")
    args = parser.parse_args()

    init_db()
    entries = list_cache_entries(args.older_than_days)
    total_bytes = sum(len(e.matrix_npy) for e in entries)

    print(f"MATCHING ENTRIES: {len(entries)}")
    print(f"MATRIX BYTES:     {total_bytes}")
    print()

    if entries:
        print("Will delete:" if not args.apply else "Deleting:")
        for e in entries:
            print(f" - {e.fingerprint[:16]}  {e.family:<7} n={e.n_points:<5} hits={e.hits}  last={e.last_used_at}")

    if args.apply and entries:
        removed = delete_cache_entries(args.older_than_days)
        print(f"\nDone. Removed {removed}.")


if __name__ == "__main__":
    main()
