"""Deterministic portfolio construction and backtesting toolkit.

Three allocation methods over a shared market-data layer:

* Monte-Carlo mean-variance (max-Sharpe and min-volatility candidates),
* hierarchical risk parity over a ward-linkage dendrogram,
* an autoencoder bottleneck whose reconstructions become portfolio weights.

All stages are seed-deterministic: the same inputs and seed produce
byte-identical artifacts.
"""

__version__ = "0.1.0"
