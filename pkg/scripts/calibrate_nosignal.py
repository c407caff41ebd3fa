"""False-alarm rate of the statistical no-signaling check.

Samples the noisy switch behavior under many seeds and counts how often each
decision rule raises a flag. The behavior satisfies every constraint exactly,
so every flag is a false alarm.

    python scripts/calibrate_nosignal.py --seeds 100 --rounds 1000000
"""

import argparse

from vbcswitch import NoiseModel, compute_behavior
from vbcswitch.stats import nosignal_stat_check, sample_counts


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--rounds", type=int, default=1_000_000)
    ap.add_argument("--visibility", type=float, default=0.98)
    ap.add_argument("--werner-p", type=float, default=0.92)
    args = ap.parse_args(argv)

    beh = compute_behavior(NoiseModel(args.visibility, args.werner_p))
    flags = {"familywise": 0, "per-comparison": 0}
    for seed in range(args.seeds):
        table = sample_counts(beh, args.rounds, seed=seed)
        for rule in flags:
            flags[rule] += nosignal_stat_check(table, rule).flagged
    for rule, n in flags.items():
        print(f"{rule:15s} flagged {n:4d} of {args.seeds} seeds")


if __name__ == "__main__":
    main()
