"""Bjontegaard deltas on synthetic rate-distortion curves.

Run: python3 demos/bdrate_codecs.py
"""
from odsr import bdrate

ANCHOR = [(1000, 30.0), (2000, 33.0), (4000, 36.0), (8000, 39.0)]


def main():
    a = bdrate.curve(ANCHOR)
    print("anchor curve (kbps, dB):", ANCHOR)
    print()
    cases = {
        "identical codec": 1.0,
        "20% cheaper at equal quality": 0.8,
        "25% costlier at equal quality": 1.25,
    }
    for label, factor in cases.items():
        test = bdrate.curve([(b * factor, q) for b, q in ANCHOR])
        print(f"  {label:32s} BD-rate {bdrate.bd_rate(a, test):+8.3f}%")

    up = bdrate.curve([(b, q + 0.5) for b, q in ANCHOR])
    print(f"  {'+0.5 dB at every rate':32s} BD-PSNR "
          f"{bdrate.bd_quality(a, up):+8.3f} dB")

    print()
    swap = bdrate.curve([(b * 0.8, q) for b, q in ANCHOR])
    fwd = bdrate.bd_rate(a, swap)
    rev = bdrate.bd_rate(swap, a)
    print("antisymmetry: (1 + fwd/100) * (1 + rev/100) = "
          f"{(1 + fwd / 100) * (1 + rev / 100):.12f}")


if __name__ == "__main__":
    main()
