"""Threaded HTTP server exposing rules, metrics and sweeps for a checkpoint.

Endpoints (all JSON, CORS-open):

    GET /api/meta               atoms, network shape, thresholds, counts
    GET /api/rules?t=&mode=     extraction at a threshold (full | weighted)
    GET /api/metrics?t=         sweep row (rule-as-ranker metrics) at one threshold
    GET /api/sweep              sweep rows over the configured threshold grid
    GET /api/model-metrics      the network's own ranking metrics

Responses reuse the CLI serializers, so a saved artifact and the matching API
body are byte-identical. With ui_dir set, files under it are served at /.
"""
from __future__ import annotations

import logging
import mimetypes
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .checkpoint import Checkpoint, stable_json
from .data import assemble_split, temporal_split
from .errors import ConfigError
from .metrics import (
    DEFAULT_THRESHOLDS,
    TIE_SHUFFLES,
    SweepRow,
    ranking_report,
    score_network,
    threshold_sweep,
)
from .pipeline import load_data_dir
from .reports import metrics_doc, rule_doc, sweep_doc

log = logging.getLogger("fuzzyrules")

__all__ = ["ServerContext", "build_server", "serve"]


@dataclass
class ServerContext:
    """Checkpoint plus the encoded validation split and response caches."""

    checkpoint: Checkpoint
    x_val: np.ndarray
    labels: np.ndarray
    slices: list
    thresholds: tuple[float, ...]
    ui_dir: Path | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _sweep_cache: dict = field(default_factory=dict, repr=False)
    _model_metrics: str | None = field(default=None, repr=False)

    @property
    def state(self):
        return self.checkpoint.state

    @property
    def vocab(self):
        return self.checkpoint.vocabulary

    def max_abs_output_weight(self) -> float:
        return float(np.max(np.abs(self.state.weights()[-1])))

    def meta_body(self) -> str:
        spec = self.state.spec
        doc = {
            "atoms": list(self.vocab.names),
            "n_atoms": spec.n_atoms,
            "network": {
                "layer_sizes": list(spec.layer_sizes),
                "output_kind": spec.output_kind.value,
            },
            "thresholds": list(self.thresholds),
            "max_abs_output_weight": self.max_abs_output_weight(),
            "n_impressions": len(self.slices),
            "n_rows": int(self.x_val.shape[0]),
        }
        return stable_json(doc)

    def rules_body(self, threshold: float, mode: str) -> str:
        return stable_json(rule_doc(self.state, self.vocab, threshold, mode))

    def _sweep_row(self, threshold: float) -> SweepRow:
        key = repr(float(threshold))
        with self._lock:
            if key not in self._sweep_cache:
                self._sweep_cache[key] = threshold_sweep(
                    self.state,
                    self.x_val,
                    self.labels,
                    self.slices,
                    thresholds=(threshold,),
                    vocab=self.vocab,
                    tie_shuffles=TIE_SHUFFLES,
                    shuffle_seed=self.checkpoint.train_config.seed,
                )[0]
            return self._sweep_cache[key]

    def metrics_body(self, threshold: float) -> str:
        return stable_json(self._sweep_row(threshold).to_json())

    def sweep_body(self) -> str:
        rows = [self._sweep_row(t) for t in self.thresholds]
        return stable_json(sweep_doc(rows, self.max_abs_output_weight()))

    def model_metrics_body(self) -> str:
        with self._lock:
            if self._model_metrics is None:
                scores = score_network(self.state, self.x_val)
                stable = ranking_report(self.labels, scores, self.slices)
                expected = ranking_report(
                    self.labels,
                    scores,
                    self.slices,
                    tie_shuffles=TIE_SHUFFLES,
                    shuffle_seed=self.checkpoint.train_config.seed,
                )
                self._model_metrics = stable_json(metrics_doc(stable, expected))
            return self._model_metrics


def build_context(
    checkpoint: Checkpoint,
    data_dir,
    split_time=None,
    ui_dir=None,
    thresholds=None,
) -> ServerContext:
    dataset = load_data_dir(data_dir)
    if split_time is None:
        split_time = checkpoint.meta.get("split_time")
    if split_time is None:
        raise ConfigError("no split time given and the checkpoint records none")
    _, val_imps = temporal_split(dataset.impressions, split_time)
    frame = assemble_split(dataset, val_imps)
    x_val = checkpoint.fuzzifier.transform(frame.rows)
    if thresholds is None:
        meta = checkpoint.meta.get("thresholds")
        thresholds = tuple(float(t) for t in meta) if meta else DEFAULT_THRESHOLDS
    ui_path = None
    if ui_dir is not None:
        ui_path = Path(ui_dir).resolve()
        if not ui_path.is_dir():
            raise ConfigError(f"--ui-dir {ui_dir} is not a directory")
    return ServerContext(
        checkpoint=checkpoint,
        x_val=x_val,
        labels=frame.labels,
        slices=frame.slices,
        thresholds=tuple(thresholds),
        ui_dir=ui_path,
    )


class _Handler(BaseHTTPRequestHandler):
    context: ServerContext  # set on the subclass by build_server

    def log_message(self, fmt, *args):  # route through logging, not stderr writes
        log.debug("http: " + fmt, *args)

    def _send(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, text: str) -> None:
        self._send(code, text.encode("utf-8"), "application/json; charset=utf-8")

    def _error(self, code: int, message: str) -> None:
        self._send_json(code, stable_json({"error": message}))

    def do_OPTIONS(self) -> None:
        self._send(204, b"", "text/plain")

    def _query_threshold(self, params) -> float | None:
        raw = params.get("t", [None])[0]
        if raw is None:
            self._error(400, "missing query parameter t")
            return None
        try:
            t = float(raw)
        except ValueError:
            self._error(400, f"t must be a number, got {raw!r}")
            return None
        if not (0.0 <= t < 1.0):
            self._error(400, f"t must satisfy 0 <= t < 1, got {t}")
            return None
        return t

    def do_GET(self) -> None:
        ctx = self.context
        url = urlparse(self.path)
        params = parse_qs(url.query)
        try:
            if url.path == "/api/meta":
                self._send_json(200, ctx.meta_body())
            elif url.path == "/api/rules":
                t = self._query_threshold(params)
                if t is None:
                    return
                mode = params.get("mode", ["full"])[0]
                if mode not in ("full", "weighted"):
                    self._error(400, f"mode must be full or weighted, got {mode!r}")
                    return
                self._send_json(200, ctx.rules_body(t, mode))
            elif url.path == "/api/metrics":
                t = self._query_threshold(params)
                if t is None:
                    return
                self._send_json(200, ctx.metrics_body(t))
            elif url.path == "/api/sweep":
                self._send_json(200, ctx.sweep_body())
            elif url.path == "/api/model-metrics":
                self._send_json(200, ctx.model_metrics_body())
            elif ctx.ui_dir is not None:
                self._serve_static(url.path)
            else:
                self._error(404, f"unknown path {url.path}")
        except BrokenPipeError:
            pass
        except Exception as exc:  # surface handler bugs as 500s, keep serving
            log.exception("request failed: %s", self.path)
            try:
                self._error(500, str(exc))
            except OSError:
                pass

    def _serve_static(self, path: str) -> None:
        ctx = self.context
        rel = path.lstrip("/") or "index.html"
        target = (ctx.ui_dir / rel).resolve()
        if not target.is_relative_to(ctx.ui_dir):
            self._error(404, "not found")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._error(404, f"not found: {path}")
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self._send(200, target.read_bytes(), ctype)


def build_server(context: ServerContext, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"context": context})
    return ThreadingHTTPServer((host, port), handler)


def serve(checkpoint: Checkpoint, data_dir, host: str, port: int, ui_dir=None, split_time=None) -> None:
    context = build_context(checkpoint, data_dir, split_time=split_time, ui_dir=ui_dir)
    httpd = build_server(context, host, port)
    log.info("serving on http://%s:%d/ (ctrl-c stops)", host, httpd.server_address[1])
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        httpd.server_close()
