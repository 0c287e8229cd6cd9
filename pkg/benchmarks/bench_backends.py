"""Compare the native and pure-Python curve backends.

Usage::

    python benchmarks/bench_backends.py [--messages 10] [--repeat 3] [--json]

Each operation runs ``--repeat`` times per backend and the median wall time
is reported. The pure backend is slow (seconds per pairing), so keep the
repeat count small.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import time

from permadid import bbs
from permadid.bbs import backend
from permadid.bbs.scheme import scalar_bytes


def _median_seconds(fn, repeat: int) -> float:
    samples = []
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - started)
    return statistics.median(samples)


def bench(name: str, messages: int, repeat: int) -> dict[str, float]:
    sk, pk = bbs.keygen(b"\x01" * 32)
    msgs = [bbs.message_to_scalar(f"claim{i}=value{i}".encode()) for i in range(messages)]
    header, ph = b"bench-header", b"bench-presentation"
    shown = list(range(0, messages, 2))
    disclosed = [(i, msgs[i]) for i in shown]

    with backend.use(name) as k:
        q1, hs = bbs.generators(messages)
        points = [q1, *hs]
        scalars = [scalar_bytes(bbs.hash_to_scalar(bytes([i]))) for i in range(len(points))]
        sig = bbs.sign(sk, pk, header, msgs)
        proof = bbs.proof_gen(pk, sig, header, ph, msgs, shown)
        g1, g2 = k.g1_generator(), k.g2_generator()
        return {
            f"g1_msm[{len(points)}]": _median_seconds(lambda: k.g1_msm(points, scalars), repeat),
            "pairing_check[2]": _median_seconds(lambda: k.pairing_product_is_one([g1, g1], [g2, g2]), repeat),
            "sign": _median_seconds(lambda: bbs.sign(sk, pk, header, msgs), repeat),
            "verify": _median_seconds(lambda: bbs.verify(pk, header, msgs, sig), repeat),
            "proof_gen": _median_seconds(lambda: bbs.proof_gen(pk, sig, header, ph, msgs, shown), repeat),
            "proof_verify": _median_seconds(lambda: bbs.proof_verify(pk, proof, header, ph, disclosed), repeat),
        }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--messages", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="print machine-readable results")
    args = parser.parse_args(argv)

    results = {name: bench(name, args.messages, args.repeat) for name in backend.available()}
    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    names = list(results)
    print(f"{'operation':<18}" + "".join(f"{n:>14}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for op in results[names[0]]:
        row = f"{op:<18}" + "".join(f"{results[n][op] * 1000:>12.2f}ms" for n in names)
        if len(names) == 2:
            row += f"{results['pure'][op] / results['native'][op]:>11.0f}x"
        print(row)
    print(f"\nmessages={args.messages} repeat={args.repeat} cpus={os.cpu_count()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
