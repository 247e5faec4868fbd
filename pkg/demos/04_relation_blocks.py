"""
Correlation structure of the disentangled embedding
===================================================

With K relation channels the embedding is K blocks side by side.
After pretraining, dimensions inside one block should correlate more
with each other than with dimensions of other blocks.
"""

import numpy as np

from graphmixup import ExperimentConfig, generate_sbm
from graphmixup import trainer as T
from graphmixup.metrics import block_correlation_contrast, feature_correlation

g = generate_sbm(n_nodes=300, n_classes=3, p_in=0.03, p_out=0.01, class_sep=1.2, seed=0)
cfg = ExperimentConfig(K=4, hidden=16, pretrain_epochs=300)
theta, _, hist = T.cached_pretrain(g, cfg, 0)
print("L_dis", round(hist[0]["L_dis"], 3), "->", round(hist[-1]["L_dis"], 3))

C = feature_correlation(T.embeddings(g, theta))
within, across = block_correlation_contrast(C, cfg.hidden)
print(f"mean |corr| within blocks {within:.3f}, across blocks {across:.3f}")

# coarse picture: average |corr| per pair of blocks
blocks = C.reshape(cfg.K, cfg.hidden, cfg.K, cfg.hidden).mean(axis=(1, 3))
print(np.round(blocks, 2))
