"""Why latitude weighting matters: the same error, three latitudes.

Run: python3 demos/spherical_metrics.py
"""
import numpy as np

from odsr import metrics


def main():
    h, w = 64, 128
    rng = np.random.default_rng(0)
    ref = rng.integers(0, 256, (h, w)).astype(np.float64)

    print(f"Reference: {h}x{w} equirectangular frame; a 4-row band of "
          "noise moves from pole to equator.\n")
    print(f"  {'band rows':>12s} {'PSNR':>8s} {'WS-PSNR':>8s}")
    for top in (0, 16, 30):
        test = ref.copy()
        test[top:top + 4] = np.clip(
            test[top:top + 4] + rng.normal(0, 20, (4, w)), 0, 255)
        print(f"  {f'{top}-{top + 4}':>12s} "
              f"{metrics.psnr(ref, test):8.3f} "
              f"{metrics.ws_psnr(ref, test):8.3f}")

    print("\nPlain PSNR barely moves; WS-PSNR penalizes the equator band "
          "hardest because those pixels cover the most sphere area.")

    wm = metrics.WeightMap.for_frame(8, 1)
    print("\nRow weights for an 8-row frame (cosine of latitude):")
    for i, val in enumerate(wm.rows):
        print(f"  row {i}: {val:.4f} " + "*" * int(val * 40))

    one = np.full((64, 128), 100.0)
    print(f"\nUniform one-level error anchor: "
          f"{metrics.ws_psnr(one, one + 1.0):.4f} dB "
          "(20*log10(255) since the weighted MSE is exactly 1)")


if __name__ == "__main__":
    main()
