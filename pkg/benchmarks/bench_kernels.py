"""Compare the compiled and numpy kernel backends.

Usage:
    python3 benchmarks/bench_kernels.py [--bytes 64] [--repeat 20] [--json out.json]

Times the convolutional encoder and the Viterbi decoder on one frame of
``--bytes`` payload bytes (plus tag and CRC), and one full NCMA slot decode.
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from ncma import convcode
from ncma.channel import bpsk_map, draw_channel, transmit
from ncma.demod import quantize
from ncma.erasure import Stream
from ncma.phydec import decode_slot, frame_bits


def _time(fn, repeat: int) -> float:
    """Best-of-3 mean seconds per call."""
    runs = timeit.repeat(fn, number=repeat, repeat=3)
    return min(runs) / repeat


def main(argv=None) -> dict:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bytes", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    payload = rng.integers(0, 256, args.bytes, dtype=np.uint8)
    bits = frame_bits(payload, Stream.A)
    coded = convcode.conv_encode(bits)
    rx = bpsk_map(coded) + rng.normal(0, 0.7, coded.size)
    soft = quantize(rx, 1.0)

    results = {"info_bits": int(bits.size), "backends": {}}
    kernels = convcode.backends()
    for name, mod in kernels.items():
        results["backends"][name] = {
            "conv_encode_us": 1e6 * _time(lambda: mod.conv_encode(bits), args.repeat),
            "viterbi_us": 1e6 * _time(lambda: mod.viterbi(soft), args.repeat),
        }
    a, b = payload, rng.integers(0, 256, args.bytes, dtype=np.uint8)
    ca, cb = convcode.conv_encode(frame_bits(a, Stream.A)), convcode.conv_encode(frame_bits(b, Stream.B))
    ch = draw_channel(6.0, 6.0, ca.size, rng)
    y = transmit(bpsk_map(ca), bpsk_map(cb), ch, rng)
    results["slot_decode_us"] = 1e6 * _time(lambda: decode_slot(y, ch), args.repeat)
    results["active_backend"] = convcode.BACKEND

    print(f"{'backend':<10}{'encode (us)':>14}{'viterbi (us)':>14}")
    for name, r in results["backends"].items():
        print(f"{name:<10}{r['conv_encode_us']:>14.1f}{r['viterbi_us']:>14.1f}")
    if {"cython", "python"} <= set(results["backends"]):
        c, p = results["backends"]["cython"], results["backends"]["python"]
        results["viterbi_speedup"] = p["viterbi_us"] / c["viterbi_us"]
        print(f"viterbi speedup: {results['viterbi_speedup']:.1f}x")
    print(f"full slot decode ({results['active_backend']}): {results['slot_decode_us']:.0f} us")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(results, f, indent=2)
    return results


if __name__ == "__main__":
    main()
