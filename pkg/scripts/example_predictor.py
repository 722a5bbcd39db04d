#!/usr/bin/env python3
"""Minimal external predictor speaking the stdio inference protocol.

The benchmark's ppd_* methods can delegate inference to any child process
that answers newline-delimited JSON requests on stdin with one JSON reply
on stdout per line:

    request:  {"train_x": [[...]], "train_y": [[...]], "query_x": [[...]],
               "edges": [...], "targets": T}
    response: {"probs": [[[...]]]}   # query x targets x buckets, rows sum to 1

``train_y`` arrives standardized per target and ``edges`` is the shared
bucket grid in that standardized space.  This example answers with a
distance-weighted Gaussian per (query, target) — replace ``predict_probs``
with calls into a real model to serve learned predictive distributions.

Try it:
    cbo-bench validate --predictor-cmd "python scripts/example_predictor.py"
    cbo-bench run --methods ppd_cei --problems jlh2 --trials 3 --iters 20 \\
        --predictor-cmd "python scripts/example_predictor.py" --out results/ext
"""

import json
import sys

import numpy as np
from scipy.stats import norm


def predict_probs(train_x, train_y, query_x, edges):
    X = np.asarray(train_x, float)
    Y = np.asarray(train_y, float)
    Q = np.asarray(query_x, float)
    edges = np.asarray(edges, float)

    n, d = X.shape
    h = max(n ** (-1.0 / (d + 4)) * float(np.maximum(X.std(axis=0), 0.05).mean()), 1e-6)
    sqd = ((Q[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    W = np.exp(-0.5 * sqd / (h * h))
    W = W / np.maximum(W.sum(axis=1, keepdims=True), 1e-300)

    mu = W @ Y                                   # query x targets
    var = np.maximum(W @ (Y * Y) - mu * mu, 0.0)
    std = np.sqrt(var + 0.25)                    # generous spread off-data

    # CDF differences over the interior edges; tails fold into end buckets
    z = (edges[None, 1:-1, None] - mu[:, None, :]) / std[:, None, :]
    cdf = norm.cdf(z)                            # query x (buckets-1) x targets
    ones = np.ones_like(cdf[:, :1, :])
    zeros = np.zeros_like(ones)
    cum = np.concatenate([zeros, cdf, ones], axis=1)
    probs = np.diff(cum, axis=1)                 # query x buckets x targets
    probs = np.maximum(probs, 0.0)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs.transpose(0, 2, 1)              # query x targets x buckets


def main() -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        probs = predict_probs(req["train_x"], req["train_y"], req["query_x"], req["edges"])
        sys.stdout.write(json.dumps({"probs": probs.tolist()}) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
