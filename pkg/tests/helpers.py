"""Small synthetic datasets shared by the model, baseline and acceptance tests."""

import numpy as np

from influlocal.data import build_instances, filter_and_balance, sample_all, synth_cascades
from influlocal.feats import VertexFeatureTable


def tiny_dataset(count=64, n=20, vertices=300, seed=0, min_active=2, embed_dim=64):
    """``count`` sampled instances (about 1:3 positive:negative) with features and embeddings."""
    g, log = synth_cascades("small-world", vertices, {"k": 6, "p": 0.2}, edge_prob=0.3,
                            seeds_fraction=0.05, rounds=6, seed=seed, actions=8)
    specs = filter_and_balance(build_instances(g, log), g, log, min_active=min_active, seed=seed)
    rng = np.random.default_rng(seed)
    pos = [s for s in specs if s.label == 1]
    neg = [s for s in specs if s.label == 0]
    n_pos = count // 4
    pick = ([pos[i] for i in rng.choice(len(pos), n_pos, replace=False)]
            + [neg[i] for i in rng.choice(len(neg), count - n_pos, replace=False)])
    instances = sample_all(g, pick, log, n=n, seed=seed)
    table = VertexFeatureTable.compute(g)
    emb = rng.normal(size=(g.vertex_count, embed_dim))
    return g, log, instances, table, emb
