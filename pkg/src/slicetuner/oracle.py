"""Loss oracles: sources of per-slice validation losses.

An oracle answers two questions about a hypothetical training run:
"what would the per-slice validation losses be at these training sizes
(or subset fractions)?" and, statefully, "acquire this many new
examples per slice". Two implementations are provided:

* ``SyntheticWorld``: a seeded simulator with per-slice ground-truth
  power-law curves, optional cross-slice influence driven by the
  imbalance-ratio drift, and Gaussian measurement noise.
* ``TrainerProcess``: a client for a real trainer living in a child
  process, speaking newline-delimited JSON over stdin/stdout.

Wire protocol (version "slice-tuner/1"), one UTF-8 JSON object/line:

    -> {"type": "hello", "version": "slice-tuner/1"}
    <- {"type": "hello", "version": "slice-tuner/1", "slices": {id: size}}
    -> {"type": "eval", "id": 1, "fractions": {id: f}, "seed": 7}
       (or "sizes": {id: n} instead of "fractions")
    <- {"type": "losses", "id": 1, "losses": {id: loss}}
    -> {"type": "acquire", "id": 2, "counts": {id: k}}
    <- {"type": "ack", "id": 2, "realized": {id: k}, "clamped": false}
    <- {"type": "error", "id": n, "code": "...", "message": "..."}

Request ids are monotonically increasing integers; every request gets
exactly one response with a matching id; unknown fields are ignored.
"""

from __future__ import annotations

import hashlib
import json
import logging
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import (
    PoolExhaustedError,
    TrainerCrashedError,
    TrainerProtocolError,
    TrainerTimeoutError,
)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "slice-tuner/1"
DEFAULT_KAPPA_MAX = 0.2


class AcquireResult(NamedTuple):
    realized: tuple[int, ...]
    clamped: bool


@runtime_checkable
class LossOracle(Protocol):
    """Anything that can report per-slice losses and accept acquisitions."""

    reentrant: bool
    stateful: bool

    @property
    def slice_ids(self) -> tuple[str, ...]: ...

    def eval_sizes(self, sizes: Sequence[int], seed: int | None = None) -> list[float]: ...

    def eval_fractions(self, fractions: Sequence[float], seed: int | None = None) -> list[float]: ...

    def acquire(self, counts: Sequence[int]) -> AcquireResult: ...


def _fraction_sizes(fractions, current_sizes) -> list[int]:
    """Shared subset-size convention: round half up, at least one example."""
    return [
        max(1, int(np.floor(f * s + 0.5)))
        for f, s in zip(fractions, current_sizes)
    ]


class SyntheticWorld:
    """Seeded simulator with power-law ground truth per slice.

    The loss of slice j at query sizes x is

        b_j * x_j**(-a_j) + c_j + row_sum(kappa)_j * dIR + noise

    where dIR = IR(x) - IR(reference sizes at world creation), kappa is
    the influence matrix (kappa[j, l] is the effect on slice j of
    imbalance drift involving others; the diagonal is zero), and noise
    is seeded Gaussian with standard deviation ``noise_sigma``. Losses
    are clipped at zero. Growing all slices by the same factor leaves IR
    unchanged, so uniform growth never triggers influence.
    """

    reentrant = True
    stateful = True

    def __init__(
        self,
        slice_ids: Sequence[str],
        a: Sequence[float],
        b: Sequence[float],
        c: Sequence[float] | None = None,
        sizes: Sequence[int] = (),
        kappa: np.ndarray | None = None,
        noise_sigma: float = 0.0,
        seed: int = 0,
        pool_limit: Sequence[int] | None = None,
        kappa_max: float = DEFAULT_KAPPA_MAX,
    ):
        self._ids = tuple(slice_ids)
        n = len(self._ids)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
        self.sizes = np.asarray(sizes, dtype=np.int64).copy()
        if not (len(self.a) == len(self.b) == len(self.c) == len(self.sizes) == n):
            raise ValueError("slice_ids, a, b, c and sizes must share one length")
        if np.any(self.a <= 0) or np.any(self.b <= 0) or np.any(self.c < 0):
            raise ValueError("need a > 0, b > 0, c >= 0 for every slice")
        if np.any(self.sizes < 1):
            raise ValueError("initial sizes must be >= 1")
        self.kappa = np.zeros((n, n)) if kappa is None else np.asarray(kappa, dtype=float)
        if self.kappa.shape != (n, n):
            raise ValueError(f"kappa must be {n}x{n}")
        if np.any(np.diag(self.kappa) != 0):
            raise ValueError("kappa diagonal must be zero")
        if np.any(np.abs(self.kappa) > kappa_max):
            raise ValueError(f"|kappa| entries must not exceed {kappa_max}")
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)
        self.reference_sizes = self.sizes.copy()
        if pool_limit is None:
            self.size_cap = None
        else:
            caps = np.asarray(pool_limit, dtype=np.int64)
            if len(caps) != n or np.any(caps < 0):
                raise ValueError("pool_limit must be nonnegative, one entry per slice")
            self.size_cap = self.reference_sizes + caps
        self._rng = np.random.default_rng(self.seed)

    @property
    def slice_ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def n(self) -> int:
        return len(self._ids)

    def _check_pool(self, sizes: np.ndarray) -> None:
        if self.size_cap is None:
            return
        over = np.nonzero(sizes > self.size_cap)[0]
        if over.size:
            raise PoolExhaustedError(self._ids[int(over[0])])

    def eval_sizes(self, sizes, seed: int | None = None) -> list[float]:
        x = np.asarray(sizes, dtype=np.int64)
        if len(x) != self.n or np.any(x < 1):
            raise ValueError(f"need {self.n} sizes, all >= 1")
        self._check_pool(x)
        xf = x.astype(float)
        delta_ir = xf.max() / xf.min() - float(
            self.reference_sizes.max() / self.reference_sizes.min()
        )
        losses = self.b * np.power(xf, -self.a) + self.c
        losses = losses + self.kappa.sum(axis=1) * delta_ir
        if self.noise_sigma > 0:
            losses = losses + self._rng.normal(0.0, self.noise_sigma, size=self.n)
        return [float(v) for v in np.maximum(losses, 0.0)]

    def eval_fractions(self, fractions, seed: int | None = None) -> list[float]:
        fracs = np.asarray(fractions, dtype=float)
        if len(fracs) != self.n or np.any(fracs <= 0) or np.any(fracs > 1):
            raise ValueError(f"need {self.n} fractions in (0, 1]")
        return self.eval_sizes(_fraction_sizes(fracs, self.sizes), seed=seed)

    def acquire(self, counts) -> AcquireResult:
        req = np.asarray(counts, dtype=np.int64)
        if len(req) != self.n or np.any(req < 0):
            raise ValueError(f"need {self.n} nonnegative counts")
        realized = req.copy()
        clamped = False
        if self.size_cap is not None:
            room = self.size_cap - self.sizes
            realized = np.minimum(req, np.maximum(room, 0))
            clamped = bool(np.any(realized < req))
        self.sizes = self.sizes + realized
        return AcquireResult(tuple(int(v) for v in realized), clamped)

    def digest(self) -> str:
        """Stable fingerprint of the world's current state."""
        h = hashlib.sha256()
        h.update(repr(self._ids).encode())
        for arr in (self.sizes, self.reference_sizes, self.a, self.b, self.c, self.kappa):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(repr((self.noise_sigma, self.seed)).encode())
        return h.hexdigest()[:16]


def synthetic_eval(world: SyntheticWorld, sizes) -> list[float]:
    """Losses of a synthetic world at the given per-slice training sizes."""
    return world.eval_sizes(sizes)


class CountingOracle:
    """Wrapper that counts evaluation queries, delegating everything else."""

    def __init__(self, inner: LossOracle):
        self.inner = inner
        self.queries = 0
        self.reentrant = inner.reentrant
        self.stateful = inner.stateful

    @property
    def slice_ids(self):
        return self.inner.slice_ids

    def eval_sizes(self, sizes, seed=None):
        self.queries += 1
        return self.inner.eval_sizes(sizes, seed=seed)

    def eval_fractions(self, fractions, seed=None):
        self.queries += 1
        return self.inner.eval_fractions(fractions, seed=seed)

    def acquire(self, counts):
        return self.inner.acquire(counts)


@dataclass(frozen=True)
class TrainerEndpoint:
    """How to launch and talk to an external trainer."""

    command: str
    protocol_version: str = PROTOCOL_VERSION
    timeout: float = 60.0

    def __post_init__(self):
        if self.protocol_version != PROTOCOL_VERSION:
            raise ValueError(
                f"unsupported protocol version {self.protocol_version!r}; "
                f"expected {PROTOCOL_VERSION!r}"
            )
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class TrainerProcess:
    """Loss oracle backed by a trainer child process (strictly serial)."""

    reentrant = False
    stateful = True

    def __init__(self, endpoint: TrainerEndpoint):
        self.endpoint = endpoint
        self._proc = subprocess.Popen(
            shlex.split(endpoint.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._next_id = 1
        self._ids: tuple[str, ...] = ()
        self._sizes: dict[str, int] = {}
        self._handshake()

    def _read_loop(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF sentinel

    def _send(self, obj: dict) -> None:
        if self._proc.poll() is not None:
            raise TrainerCrashedError(
                f"trainer exited with status {self._proc.returncode} before request"
            )
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TrainerCrashedError(f"trainer pipe closed: {exc}") from exc

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.endpoint.timeout)
        except queue.Empty:
            raise TrainerTimeoutError(
                f"no response within {self.endpoint.timeout}s"
            ) from None
        if line is None:
            code = self._proc.wait()
            raise TrainerCrashedError(f"trainer closed its output (exit status {code})")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            raise TrainerProtocolError("response is not valid JSON", payload=line) from None
        if not isinstance(msg, dict) or "type" not in msg:
            raise TrainerProtocolError("response is not a typed object", payload=line)
        return msg

    def _handshake(self):
        self._send({"type": "hello", "version": self.endpoint.protocol_version})
        msg = self._recv()
        if msg.get("type") != "hello" or msg.get("version") != self.endpoint.protocol_version:
            raise TrainerProtocolError("bad handshake", payload=json.dumps(msg))
        slices = msg.get("slices")
        if isinstance(slices, dict):
            self._ids = tuple(slices.keys())
            self._sizes = {k: int(v) for k, v in slices.items()}

    def _request(self, body: dict) -> dict:
        rid = self._next_id
        self._next_id += 1
        self._send({**body, "id": rid})
        msg = self._recv()
        if msg.get("type") == "error":
            raise TrainerProtocolError(
                f"trainer error {msg.get('code')!r}: {msg.get('message')}",
                payload=json.dumps(msg),
            )
        if msg.get("id") != rid:
            raise TrainerProtocolError(
                f"out-of-order response: expected id {rid}, got {msg.get('id')}",
                payload=json.dumps(msg),
            )
        return msg

    @property
    def slice_ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def sizes(self) -> tuple[int, ...]:
        """Training sizes as last reported or adjusted by acquire acks."""
        return tuple(self._sizes.get(i, 0) for i in self._ids)

    def _loss_list(self, msg: dict) -> list[float]:
        losses = msg.get("losses")
        if not isinstance(losses, dict) or set(losses) != set(self._ids):
            raise TrainerProtocolError("losses map does not cover the slices",
                                       payload=json.dumps(msg))
        return [float(losses[i]) for i in self._ids]

    def eval_sizes(self, sizes, seed: int | None = None) -> list[float]:
        body = {"type": "eval", "sizes": {i: int(s) for i, s in zip(self._ids, sizes)}}
        if seed is not None:
            body["seed"] = int(seed)
        msg = self._request(body)
        if msg.get("type") != "losses":
            raise TrainerProtocolError("expected a losses message", payload=json.dumps(msg))
        return self._loss_list(msg)

    def eval_fractions(self, fractions, seed: int | None = None) -> list[float]:
        body = {"type": "eval", "fractions": {i: float(f) for i, f in zip(self._ids, fractions)}}
        if seed is not None:
            body["seed"] = int(seed)
        msg = self._request(body)
        if msg.get("type") != "losses":
            raise TrainerProtocolError("expected a losses message", payload=json.dumps(msg))
        return self._loss_list(msg)

    def acquire(self, counts) -> AcquireResult:
        body = {"type": "acquire", "counts": {i: int(k) for i, k in zip(self._ids, counts)}}
        msg = self._request(body)
        if msg.get("type") != "ack" or not isinstance(msg.get("realized"), dict):
            raise TrainerProtocolError("expected an ack message", payload=json.dumps(msg))
        realized = msg["realized"]
        if set(realized) != set(self._ids):
            raise TrainerProtocolError("realized map does not cover the slices",
                                       payload=json.dumps(msg))
        for i in self._ids:
            self._sizes[i] = self._sizes.get(i, 0) + int(realized[i])
        return AcquireResult(tuple(int(realized[i]) for i in self._ids),
                             bool(msg.get("clamped", False)))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self._ids, tuple(sorted(self._sizes.items())),
                       self.endpoint.command)).encode())
        return h.hexdigest()[:16]

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
