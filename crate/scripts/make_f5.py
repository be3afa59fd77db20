#!/usr/bin/env python3
"""Generate the F5 fixture: a 5-8-2 ReLU classifier and its train/test splits.

The original leukemia expression table is not redistributable here, so this
script draws a synthetic five-feature table that keeps the usual ALL/AML split
sizes (train: 27 ALL + 11 AML, test: 20 ALL + 14 AML). Features are positive
log-expression-like values. The network is trained with full-batch gradient
descent on softmax cross-entropy; inference is plain argmax over the logits.

Outputs (written to fixtures/ by default):
    f5.json                 network file (schema_version 1)
    leukemia_train.csv      38 rows
    leukemia_test.csv       34 rows
    f5_meta.json            recorded train/test accuracy

Usage: python3 scripts/make_f5.py [--out fixtures] [--seed 7]
"""

import argparse
import json
import os

import numpy as np

LABELS = ["AML", "ALL"]  # index 0 = L0 (minority), index 1 = L1 (majority)
SPLITS = {"train": {"ALL": 27, "AML": 11}, "test": {"ALL": 20, "AML": 14}}

# per-class feature means and a shared spread
MEANS = {
    "ALL": np.array([3.2, 2.1, 4.0, 1.6, 2.8]),
    "AML": np.array([2.2, 2.9, 3.1, 2.4, 2.7]),
}
SPREAD = np.array([0.45, 0.40, 0.55, 0.35, 0.30])

HIDDEN = 8


def draw(rng, split):
    rows = []
    for name in ("ALL", "AML"):
        n = SPLITS[split][name]
        x = MEANS[name] + SPREAD * rng.standard_normal((n, 5))
        x = np.clip(x, 0.05, None)
        for r in x:
            rows.append((np.round(r, 4), LABELS.index(name)))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


def forward(w1, b1, w2, b2, x):
    # same accumulation order as the Rust evaluator: sum_j w[r][j]*x[j], then + b
    h = []
    for r in range(w1.shape[0]):
        acc = 0.0
        for j in range(w1.shape[1]):
            acc = acc + float(w1[r, j]) * float(x[j])
        acc = acc + float(b1[r])
        h.append(acc if acc > 0.0 else 0.0)
    out = []
    for r in range(w2.shape[0]):
        acc = 0.0
        for j in range(w2.shape[1]):
            acc = acc + float(w2[r, j]) * h[j]
        out.append(acc + float(b2[r]))
    return out


def predict(params, x):
    out = forward(*params, x)
    best = max(out)
    winners = [i for i, v in enumerate(out) if v == best]
    return winners[0] if len(winners) == 1 else None


def train(rng, xs, ys, epochs=4000, lr=0.05):
    mu = xs.mean(axis=0)
    sd = xs.std(axis=0)
    z = (xs - mu) / sd
    w1 = rng.standard_normal((HIDDEN, 5)) * 0.5
    b1 = np.zeros(HIDDEN)
    w2 = rng.standard_normal((2, HIDDEN)) * 0.5
    b2 = np.zeros(2)
    onehot = np.eye(2)[ys]
    for _ in range(epochs):
        pre = z @ w1.T + b1
        h = np.maximum(pre, 0.0)
        logits = h @ w2.T + b2
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        g = (p - onehot) / len(ys)
        gw2 = g.T @ h
        gb2 = g.sum(axis=0)
        gh = g @ w2
        gh[pre <= 0.0] = 0.0
        gw1 = gh.T @ z
        gb1 = gh.sum(axis=0)
        w1 -= lr * gw1
        b1 -= lr * gb1
        w2 -= lr * gw2
        b2 -= lr * gb2
    # fold the standardisation into the first layer so the net reads raw features
    w1_raw = w1 / sd
    b1_raw = b1 - (w1 * (mu / sd)).sum(axis=1)
    return w1_raw, b1_raw, w2, b2


def accuracy(params, rows):
    hits = sum(1 for x, y in rows if predict(params, x) == y)
    return hits / len(rows)


def write_csv(path, rows):
    with open(path, "w") as f:
        f.write("id," + ",".join(f"f{i}" for i in range(5)) + ",label\n")
        for i, (x, y) in enumerate(rows):
            f.write(f"{i}," + ",".join(repr(float(v)) for v in x) + f",{LABELS[y]}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "fixtures"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    train_rows = draw(rng, "train")
    test_rows = draw(rng, "test")
    xs = np.array([x for x, _ in train_rows])
    ys = np.array([y for _, y in train_rows])
    params = train(rng, xs, ys)

    def rowmajor(m):
        return [float(v) for v in np.asarray(m).reshape(-1)]

    w1, b1, w2, b2 = params
    net = {
        "schema_version": 1,
        "input_dim": 5,
        "labels": LABELS,
        "layers": [
            {"rows": HIDDEN, "cols": 5, "weights": rowmajor(w1), "biases": rowmajor(b1), "activation": "relu"},
            {"rows": 2, "cols": HIDDEN, "weights": rowmajor(w2), "biases": rowmajor(b2), "activation": "identity"},
        ],
    }
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "f5.json"), "w") as f:
        json.dump(net, f, indent=2)
        f.write("\n")
    write_csv(os.path.join(args.out, "leukemia_train.csv"), train_rows)
    write_csv(os.path.join(args.out, "leukemia_test.csv"), test_rows)

    # reload the written values so the recorded numbers match what the files hold
    w1 = np.array(net["layers"][0]["weights"]).reshape(HIDDEN, 5)
    b1 = np.array(net["layers"][0]["biases"])
    w2 = np.array(net["layers"][1]["weights"]).reshape(2, HIDDEN)
    b2 = np.array(net["layers"][1]["biases"])
    params = (w1, b1, w2, b2)
    meta = {
        "schema_version": 1,
        "seed": args.seed,
        "train_accuracy": accuracy(params, train_rows),
        "test_accuracy": accuracy(params, test_rows),
        "test_correct": sum(1 for x, y in test_rows if predict(params, x) == y),
        "test_samples": len(test_rows),
        "train_samples": len(train_rows),
    }
    with open(os.path.join(args.out, "f5_meta.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(meta, sort_keys=True))


if __name__ == "__main__":
    main()
