"""
Random walk with restart around an ego
======================================

A walker that jumps back to the ego or one of its active neighbors with
probability 0.8 each step.  Long-run visit frequencies match the
stationary distribution of that chain.
"""

import numpy as np

from influlocal.data import rwr_walk
from influlocal.graph import Graph

# two triangles joined by an edge
g = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)])
start = [0, 1]
restart = 0.8

# %%
# Explicit chain: restart to a uniform start vertex, else a uniform neighbor.
a = g.adjacency(dense=True)
move = a / a.sum(axis=1, keepdims=True)
jump = np.zeros(6)
jump[start] = 1 / len(start)
chain = restart * jump[None, :] + (1 - restart) * move
vals, vecs = np.linalg.eig(chain.T)
pi = np.real(vecs[:, np.argmax(np.real(vals))])
pi /= pi.sum()

# %%
_, trace = rwr_walk(g, start, restart, np.random.default_rng(0), n=None, max_steps=200_000)
freq = np.bincount(trace, minlength=6) / len(trace)
print("stationary:", np.round(pi, 4))
print("empirical: ", np.round(freq, 4))
print("L1 gap: %.4f" % np.abs(pi - freq).sum())

# %%
# With n set, the walk stops once n distinct vertices are collected;
# restart = 1 never leaves the start set.
collected, _ = rwr_walk(g, start, 1.0, np.random.default_rng(1), n=None, max_steps=1000)
print("restart=1 collects", sorted(collected))
