"""
Influence prediction on a small synthetic network
=================================================

Cascades on a small-world graph, ego instances around each candidate,
then DeepInf-GAT against logistic regression.  Runs in about two minutes.
"""

import numpy as np

from influlocal.data import build_instances, filter_and_balance, sample_all, split, synth_cascades
from influlocal.embed import deepwalk
from influlocal.feats import VertexFeatureTable
from influlocal.baselines import baseline_features, linear_train
from influlocal.eval import auc
from influlocal import model as M

# %%
# A 2,000-vertex ring lattice with 20% rewiring and 20 independent cascades.
# Only the most clustered fifth of users pass an action on (probability 0.5);
# the rest adopt but never spread, so which active neighbor matters.
g, log = synth_cascades("small-world", 2000,
                        {"k": 10, "p": 0.2, "influence": "clustering", "strong_fraction": 0.2},
                        edge_prob=0.5, seeds_fraction=0.1, rounds=10, seed=0, actions=20)
print(g.vertex_count, "vertices,", g.edge_count, "edges,", len(log), "activations")

# %%
# One instance per (user, action): positives are users who activated,
# negatives are inactive neighbors of active users.  Keep egos with at
# least 3 active neighbors, at roughly three negatives per positive.
specs = filter_and_balance(build_instances(g, log), g, log, min_active=3, seed=0)
train_s, valid_s, test_s = split(specs, seed=0)
print(len(specs), "instances;", sum(s.label for s in specs), "positive")

# %%
# Random walks with restart collect a fixed-size neighborhood (n = 50
# here) around each ego.
instances = sample_all(g, train_s + valid_s + test_s, log, n=50, seed=0)
tr = instances[:len(train_s)]
va = instances[len(train_s):len(train_s) + len(valid_s)]
te = instances[len(train_s) + len(valid_s):]

table = VertexFeatureTable.compute(g)
emb = deepwalk(g, dim=64, walks_per_vertex=10, walk_length=40, epochs=1, seed=0)

# %%
# Baseline: logistic regression on ego-level features.
xtr, xte = baseline_features(tr, g, table, emb), baseline_features(te, g, table, emb)
scaler = M.FeatureScaler().fit(xtr)
ytr = np.array([i.label for i in tr])
yte = np.array([i.label for i in te])
lr = linear_train(scaler.transform(xtr), ytr, epochs=30, lr=0.05)
print("LR   test AUC %.3f" % auc(yte, lr.score(scaler.transform(xte))))

# %%
# DeepInf-GAT: three attention layers, 8 heads of 16, on the sampled
# neighborhoods.  A small batch keeps the number of updates reasonable
# at this scale.
cfg = M.DeepInfConfig(variant="gat", n=50, batch_size=64, max_epochs=60, patience=10)
fs = M.fit_feature_scaler(tr, table)
enc = [M.encode_instances(part, emb, cfg, table, fs) for part in (tr, va, te)]
params, hist = M.train(cfg, enc[0], enc[1])
print("GAT  test AUC %.3f  (best epoch %d)" % (auc(enc[2].labels, M.predict(params, cfg, enc[2])),
                                                hist.best_epoch))

# %%
# With ~2,000 training instances the two are close, and LR often wins:
# ego-level counts already carry most of the signal.  On the 5,000-vertex
# benchmark (`influlocal synth` defaults, ~6,000 instances) GAT pulls ahead.
