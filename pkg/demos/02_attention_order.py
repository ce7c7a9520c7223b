"""
Attention ranks neighbors by a single score
===========================================

Within one head, a row's logits are a row term plus a neighbor term,
passed through LeakyReLU.  That map is increasing, so every row orders
its support by the neighbor term alone.
"""

import numpy as np

from influlocal.autodiff import Tensor, attention_support, gat_attention, gat_scores
from influlocal.data import small_world

rng = np.random.default_rng(3)
g = small_world(12, 4, 0.3, rng)
support = attention_support(g)

feats = rng.normal(size=(12, 6))
weight = Tensor(rng.normal(size=(4, 6)))
attn_vec = Tensor(rng.normal(size=8))

attn = gat_attention(Tensor(feats), support, weight, attn_vec).data
score = gat_scores(feats, weight, attn_vec)

# %%
# Rows sum to one and vanish off the support (edges plus self-loops).
print("row sums:", np.round(attn.sum(axis=1), 12))
print("mass off support:", attn[~support].sum())

# %%
# Sort each row's support by attention and by score: same order.
for i in range(4):
    nb = np.flatnonzero(support[i])
    by_attn = nb[np.argsort(-attn[i, nb])]
    by_score = nb[np.argsort(-score[nb])]
    print(i, by_attn, by_score, np.array_equal(by_attn, by_score))
