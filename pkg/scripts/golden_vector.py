#!/usr/bin/env python3
"""Regenerate the frozen encoder-stream vector used by the test suite.

Applies the encoding protocol with plain loops and no package imports so the
library implementation can be cross-checked against an independent
realization: inverse-CDF degree draw, then a partial Fisher-Yates shuffle
for the neighbor set, one shared RNG stream for everything.
"""

import argparse
import bisect
import random

DEGREE_TABLE = [
    (1, 0.00466),
    (2, 0.55545),
    (3, 0.09743),
    (5, 0.17506),
    (8, 0.03774),
    (14, 0.08202),
    (33, 0.01775),
    (100, 0.02989),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--k", type=int, default=1024)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    degrees = [d for d, _ in DEGREE_TABLE]
    cum = []
    acc = 0.0
    for _, p in DEGREE_TABLE:
        acc += p
        cum.append(acc)

    message_rng = random.Random(f"{args.seed}:message")
    message = [message_rng.randrange(2) for _ in range(args.k)]
    stream_rng = random.Random(f"{args.seed}:stream")

    lines = []
    for j in range(args.count):
        u = stream_rng.random()
        idx = bisect.bisect_right(cum, u)
        if idx == len(degrees):
            idx -= 1
        degree = degrees[idx]
        pool = list(range(args.k))
        for i in range(degree):
            swap = stream_rng.randrange(i, args.k)
            pool[i], pool[swap] = pool[swap], pool[i]
        neighbors = sorted(pool[:degree])
        bit = 0
        for i in neighbors:
            bit ^= message[i]
        lines.append(f"{j},{degree},{';'.join(map(str, neighbors))},{bit}")

    text = "\n".join(lines) + "\n"
    if args.out == "-":
        print(text, end="")
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
