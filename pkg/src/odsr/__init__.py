"""odsr: a 360-degree video super-resolution benchmark toolkit.

Reference implementations of four challenge-winning lightweight SR networks
plus classical baselines, spherically weighted quality metrics, Bjontegaard
BD-rate, the composite challenge score, bit-exact PPM/Y4M media handling, a
benchmark harness with leaderboard output, and a small CPU trainer.  All
neural components run on the package's own numpy tensor engine.
"""

__version__ = "0.1.0"
