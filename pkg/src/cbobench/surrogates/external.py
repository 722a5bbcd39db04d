"""Adapter hosting an out-of-process predictive-distribution model.

The child process speaks newline-delimited JSON on stdio, one request per
line:

    request:  {"train_x": [[...]], "train_y": [[...]], "query_x": [[...]],
               "edges": [...], "targets": T}
    response: {"probs": [[[...]]]}        # shape: query x targets x buckets

Targets are standardized per column before the request, and the common
standardized bucket grid is mapped back to per-target original-unit edges
afterwards, so the child never needs to know problem units. Every response
is validated (shape, finiteness, normalization within 1e-6, then exact
renormalization) before anything downstream sees it; a dead child, a
timeout, or a malformed reply surfaces as an inference error carrying
diagnostics, never as partial output.
"""

from __future__ import annotations

import hashlib
import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from ..errors import InferenceError, ProtocolViolationError
from .dataset import Dataset, standardize
from .ppd import PPDBatch, _target_matrix


class ExternalPPDSurrogate:
    """Persistent child-process predictor behind the stdio protocol."""

    def __init__(self, command_line, timeout: float = 60.0, bucket_count: int = 1000):
        if isinstance(command_line, str):
            self.argv = shlex.split(command_line)
        else:
            self.argv = list(command_line)
        if not self.argv:
            raise ValueError("external predictor needs a non-empty command line")
        self.timeout = float(timeout)
        self.bucket_count = int(bucket_count)
        self.inference_call_count = 0
        self._proc = None
        self._lines = None
        self._stderr_chunks = None

    # -- process management -------------------------------------------------

    def _ensure_started(self):
        if self._proc is not None:
            if self._proc.poll() is None:
                return
            # The child died since the last request. Surface that as a
            # failure of THIS request rather than silently relaunching,
            # then forget the corpse so the next request starts fresh.
            diag = self._diagnostics()
            self._proc = None
            raise InferenceError(
                "external predictor exited between requests "
                f"(returncode {diag['returncode']})",
                payload=diag,
            )
        try:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise InferenceError(
                f"could not launch external predictor {self.argv!r}: {exc}",
                payload={"argv": self.argv},
            ) from exc
        self._lines = queue.Queue()
        self._stderr_chunks = []
        threading.Thread(
            target=self._pump, args=(self._proc.stdout, self._lines), daemon=True
        ).start()
        threading.Thread(
            target=self._drain_stderr,
            args=(self._proc.stderr, self._stderr_chunks),
            daemon=True,
        ).start()

    @staticmethod
    def _pump(stdout, out_queue):
        for line in stdout:
            out_queue.put(line)
        out_queue.put(None)  # EOF marker

    @staticmethod
    def _drain_stderr(stderr, chunks):
        for line in stderr:
            chunks.append(line)
            del chunks[:-50]  # keep a bounded tail

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def _diagnostics(self, extra=None) -> dict:
        payload = {
            "argv": self.argv,
            "returncode": None if self._proc is None else self._proc.poll(),
            "stderr_tail": "".join(self._stderr_chunks or [])[-4000:],
        }
        if extra:
            payload.update(extra)
        return payload

    # -- protocol -----------------------------------------------------------

    def state_hash(self) -> str:
        tag = f"external|{self.argv}|{self.timeout}|{self.bucket_count}"
        return hashlib.sha256(tag.encode()).hexdigest()

    def _roundtrip(self, request: dict) -> dict:
        self._ensure_started()
        line = json.dumps(request)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise InferenceError(
                "external predictor pipe is closed", payload=self._diagnostics()
            ) from exc
        try:
            reply = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise InferenceError(
                f"external predictor timed out after {self.timeout:g}s",
                payload=self._diagnostics(),
            ) from None
        if reply is None:
            raise InferenceError(
                "external predictor exited before answering",
                payload=self._diagnostics(),
            )
        try:
            return json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ProtocolViolationError(
                "external predictor reply is not valid JSON",
                payload=self._diagnostics({"reply_head": reply[:500]}),
            ) from exc

    def predict(self, D: Dataset, targets: str, Xq: np.ndarray) -> PPDBatch:
        if D.n == 0:
            raise ValueError("external surrogate needs at least one observation")
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Y = _target_matrix(D, targets)
        n, T = Y.shape
        B = self.bucket_count

        Z = np.empty_like(Y)
        locs = np.empty(T)
        scales = np.empty(T)
        for t in range(T):
            Z[:, t], locs[t], scales[t] = standardize(Y[:, t])
        z_edges = np.linspace(Z.min() - 3.0, Z.max() + 3.0, B + 1)
        if not np.all(np.diff(z_edges) > 0):
            raise ProtocolViolationError(
                "constructed bucket edges are not strictly increasing",
                payload={"z_min": float(Z.min()), "z_max": float(Z.max())},
            )

        reply = self._roundtrip(
            {
                "train_x": D.X.tolist(),
                "train_y": Z.tolist(),
                "query_x": Xq.tolist(),
                "edges": z_edges.tolist(),
                "targets": T,
            }
        )
        self.inference_call_count += 1

        if "probs" not in reply:
            raise ProtocolViolationError(
                "external predictor reply lacks 'probs'",
                payload=self._diagnostics({"keys": sorted(reply)}),
            )
        probs = np.asarray(reply["probs"], dtype=float)
        if probs.shape != (Xq.shape[0], T, B):
            raise ProtocolViolationError(
                f"probs shape {probs.shape} != expected {(Xq.shape[0], T, B)}",
                payload=self._diagnostics(),
            )
        if not np.all(np.isfinite(probs)) or np.any(probs < -1e-12):
            raise ProtocolViolationError(
                "probs contain non-finite or negative entries",
                payload=self._diagnostics(),
            )
        np.maximum(probs, 0.0, out=probs)
        sums = probs.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise ProtocolViolationError(
                f"probs not normalized (max |sum-1| = {worst:g})",
                payload=self._diagnostics(),
            )
        probs /= sums[:, :, None]

        edges = locs[:, None] + scales[:, None] * z_edges[None, :]
        return PPDBatch(edges=edges, probs=probs)


def external_ppd_surrogate(command_line, timeout: float = 60.0, bucket_count: int = 1000):
    return ExternalPPDSurrogate(
        command_line, timeout=timeout, bucket_count=bucket_count
    )
