"""Reference external trainer for the slice-tuner/1 stdio protocol.

Keeps a synthetic binary-classification dataset partitioned into slices
(Gaussian clusters with per-slice separations, so the slices have
genuinely different learning curves), and on every eval request trains a
fresh logistic-regression classifier on the requested subset sizes of
all slices together, replying with per-slice validation log losses.
Acquire requests move examples from a per-slice reserve pool into the
active training set, clamped at the reserve and flagged when clamped.

One UTF-8 JSON object per line on stdin/stdout:

    <- {"type": "hello", "version": "slice-tuner/1"}
    -> {"type": "hello", "version": "slice-tuner/1", "slices": {id: size}}
    <- {"type": "eval", "id": 1, "fractions": {id: f}, "seed": 7}
       ("sizes": {id: n} works too)
    -> {"type": "losses", "id": 1, "losses": {id: loss}}
    <- {"type": "acquire", "id": 2, "counts": {id: k}}
    -> {"type": "ack", "id": 2, "realized": {id: k}, "clamped": false}
    -> {"type": "error", "id": n, "code": "...", "message": "..."}

Malformed input never crashes the process; it is answered with an error
message. EOF on stdin ends the loop.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

PROTOCOL_VERSION = "slice-tuner/1"
PROB_EPS = 1e-7

# fixed optimizer settings so identical requests give identical losses
GD_ITERATIONS = 300
GD_LEARNING_RATE = 0.5
GD_L2 = 1e-4


def _mix(seed: int, k: int) -> int:
    mask = (1 << 64) - 1
    z = (seed + (k + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


class SliceData:
    """One slice's train pool, reserve boundary, and fixed validation split."""

    def __init__(self, features, labels, initial_size, val_size):
        self.val_x = features[:val_size]
        self.val_y = labels[:val_size]
        self.pool_x = features[val_size:]
        self.pool_y = labels[val_size:]
        self.train_size = min(initial_size, len(self.pool_y))

    @property
    def reserve(self) -> int:
        return len(self.pool_y) - self.train_size


class PluginDataset:
    """Sliced Gaussian-cluster dataset with balanced binary labels."""

    def __init__(self, n_slices, seed, val_size, initial_size, pool_size, dim):
        rng = np.random.default_rng(seed)
        self.ids = [f"s{i}" for i in range(n_slices)]
        self.slices: dict[str, SliceData] = {}
        # one shared true boundary for every slice (so more data always
        # helps every slice); slice centers vary only orthogonally to it
        # and per-slice class separation shrinks, so later slices are
        # harder and their learning curves sit higher
        boundary = rng.normal(0.0, 1.0, dim)
        boundary /= np.linalg.norm(boundary)
        separations = np.linspace(2.4, 0.9, n_slices)
        for sid, sep in zip(self.ids, separations):
            total = val_size + initial_size + pool_size
            per_class = (total + 1) // 2
            center = rng.normal(0.0, 2.0, dim)
            center -= (center @ boundary) * boundary  # keep it on the boundary
            x0 = center - 0.5 * sep * boundary + rng.normal(0.0, 1.0, (per_class, dim))
            x1 = center + 0.5 * sep * boundary + rng.normal(0.0, 1.0, (per_class, dim))
            features = np.concatenate([x0, x1])[:total]
            labels = np.concatenate([np.zeros(per_class), np.ones(per_class)])[:total]
            order = rng.permutation(total)
            self.slices[sid] = SliceData(features[order], labels[order],
                                         initial_size, val_size)

    def sizes(self) -> dict[str, int]:
        return {sid: self.slices[sid].train_size for sid in self.ids}


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def train_classifier(features, labels):
    """Deterministic full-batch gradient-descent logistic regression."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0] = 1.0
    x = np.column_stack([(features - mean) / std, np.ones(len(features))])
    w = np.zeros(x.shape[1])
    for _ in range(GD_ITERATIONS):
        p = _sigmoid(x @ w)
        grad = x.T @ (p - labels) / len(labels) + GD_L2 * w
        w = w - GD_LEARNING_RATE * grad
    return w, mean, std


def eval_losses(dataset: PluginDataset, subset_sizes: dict[str, int], seed: int):
    """Train once on seeded subsets of every slice; report per-slice losses."""
    parts_x, parts_y = [], []
    for k, sid in enumerate(dataset.ids):
        data = dataset.slices[sid]
        m = max(1, min(int(subset_sizes[sid]), data.train_size))
        rng = np.random.default_rng(_mix(seed, k))
        picked = rng.permutation(data.train_size)[:m]
        parts_x.append(data.pool_x[picked])
        parts_y.append(data.pool_y[picked])
    w, mean, std = train_classifier(np.concatenate(parts_x), np.concatenate(parts_y))
    losses = {}
    for sid in dataset.ids:
        data = dataset.slices[sid]
        x = np.column_stack([(data.val_x - mean) / std, np.ones(len(data.val_y))])
        p = np.clip(_sigmoid(x @ w), PROB_EPS, 1.0 - PROB_EPS)
        y = data.val_y
        loss = float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))
        losses[sid] = round(loss, 9)
    return losses


class Plugin:
    def __init__(self, dataset: PluginDataset, default_seed: int):
        self.dataset = dataset
        self.default_seed = default_seed

    def handle(self, msg: dict) -> dict:
        kind = msg.get("type")
        if kind == "hello":
            if msg.get("version") != PROTOCOL_VERSION:
                return {"type": "error", "id": None, "code": "version-mismatch",
                        "message": f"supported version is {PROTOCOL_VERSION}"}
            return {"type": "hello", "version": PROTOCOL_VERSION,
                    "slices": self.dataset.sizes()}
        rid = msg.get("id")
        if not isinstance(rid, int):
            return {"type": "error", "id": None, "code": "missing-id",
                    "message": "requests other than hello need an integer id"}
        if kind == "eval":
            return self._eval(rid, msg)
        if kind == "acquire":
            return self._acquire(rid, msg)
        return {"type": "error", "id": rid, "code": "unknown-type",
                "message": f"unknown message type {kind!r}"}

    def _subset_sizes(self, msg: dict) -> dict[str, int]:
        sizes = {}
        if isinstance(msg.get("sizes"), dict):
            for sid in self.dataset.ids:
                sizes[sid] = int(msg["sizes"].get(sid, self.dataset.slices[sid].train_size))
        elif isinstance(msg.get("fractions"), dict):
            for sid in self.dataset.ids:
                f = float(msg["fractions"].get(sid, 1.0))
                if not 0.0 < f <= 1.0:
                    raise ValueError(f"fraction for {sid} must lie in (0, 1], got {f}")
                current = self.dataset.slices[sid].train_size
                sizes[sid] = max(1, int(np.floor(f * current + 0.5)))
        else:
            raise ValueError("eval needs a fractions or sizes map")
        return sizes

    def _eval(self, rid: int, msg: dict) -> dict:
        try:
            sizes = self._subset_sizes(msg)
        except (ValueError, TypeError) as exc:
            return {"type": "error", "id": rid, "code": "bad-eval", "message": str(exc)}
        seed = msg.get("seed")
        seed = self.default_seed if not isinstance(seed, int) else seed
        losses = eval_losses(self.dataset, sizes, seed)
        return {"type": "losses", "id": rid, "losses": losses}

    def _acquire(self, rid: int, msg: dict) -> dict:
        counts = msg.get("counts")
        if not isinstance(counts, dict):
            return {"type": "error", "id": rid, "code": "bad-acquire",
                    "message": "acquire needs a counts map"}
        realized = {}
        clamped = False
        for sid in self.dataset.ids:
            want = int(counts.get(sid, 0))
            if want < 0:
                return {"type": "error", "id": rid, "code": "bad-acquire",
                        "message": f"negative count for {sid}"}
            data = self.dataset.slices[sid]
            give = min(want, data.reserve)
            clamped |= give < want
            data.train_size += give
            realized[sid] = give
        return {"type": "ack", "id": rid, "realized": realized, "clamped": clamped}


def serve(plugin: Plugin, stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
            if not isinstance(msg, dict):
                raise ValueError("message must be a JSON object")
            reply = plugin.handle(msg)
        except Exception as exc:  # a bad request must never kill the loop
            reply = {"type": "error", "id": None, "code": "bad-request",
                     "message": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Reference trainer plugin speaking the slice-tuner/1 protocol."
    )
    parser.add_argument("--slices", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--val-size", type=int, default=500)
    parser.add_argument("--initial-size", type=int, default=100)
    parser.add_argument("--pool", type=int, default=4000,
                        help="reserve examples acquirable per slice")
    parser.add_argument("--dim", type=int, default=6)
    args = parser.parse_args(argv)
    if args.slices < 1 or args.val_size < 1 or args.initial_size < 1 or args.pool < 0:
        parser.error("slices, val-size and initial-size must be positive; pool >= 0")
    dataset = PluginDataset(args.slices, args.seed, args.val_size,
                            args.initial_size, args.pool, args.dim)
    serve(Plugin(dataset, default_seed=args.seed))
    return 0


if __name__ == "__main__":
    sys.exit(main())
