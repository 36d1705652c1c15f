"""Walk through the composite score Q: anchors, penalty curve, both tracks.

Run: python3 demos/score_tour.py
"""
from odsr import score


def main():
    fig = score.ScoreParams.for_scale(2)
    print("Score constants (x2 track):", fig)
    print()

    print("Anchor points")
    print(f"  31.000 dB @ 10.0 ms -> Q = "
          f"{score.q_score(31.0, 0.010, fig):6.2f}   (top of range)")
    print(f"  29.589 dB @  5.7 ms -> Q = "
          f"{score.q_score(29.589, 0.0057, fig):6.2f}   (x2 winner's data)")
    print(f"  runtime credit at 29.8 ms    = "
          f"{score.runtime_score(0.0298, fig):.4f}")
    print()

    print("Runtime penalty curve (quality fixed at 30 dB)")
    for ms in (1, 16, 20, 30, 50, 100):
        q = score.q_score(30.0, ms / 1000.0, fig)
        bar = "#" * max(0, int(q / 2))
        print(f"  {ms:4d} ms  Q = {q:6.2f}  {bar}")
    print()

    print("Published x4 column vs the formula (exact)")
    p4 = score.ScoreParams.for_scale(4)
    for r in score.published_results(4):
        if r.runtime_s is None:
            continue
        got = score.q_score(r.ws_psnr, r.runtime_s, p4)
        print(f"  {r.team:8s} printed {r.q_printed:6.2f}  "
              f"computed {got:6.2f}")
    print()
    print("The x2 column does not reproduce; see "
          "reports/q_score_discrepancy.md (regenerate with "
          "score.q_discrepancy_note()).")


if __name__ == "__main__":
    main()
