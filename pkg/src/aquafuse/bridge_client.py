"""Client side of the segmentation wire protocol, plus a local reference
segmenter implementing the same mock algorithm in-process.

Wire protocol (shared with the external bridge): length-prefixed JSON
over TCP or a child process's stdio.  Each message is a 4-byte unsigned
big-endian length followed by that many bytes of UTF-8 JSON.

Request:  {"frame_id": int,
           "synthetic": {"width": int, "height": int,
                          "left_rle": [...], "right_rle": [...]}
            | "left_png_b64"/"right_png_b64": str,
           "prompts": [{"view": "L"|"R", "u": float, "v": float}]}
Response: {"frame_id": int,
           "targets": [{"left_mask_rle": [...], "right_mask_rle": [...],
                         "confidence": float}]}
          or {"frame_id": int, "error": str}

RLE runs are row-major alternating background/foreground, starting with
background.
"""

from __future__ import annotations

import json
import shlex
import socket
import struct
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ProviderUnavailable
from .masks import Mask, min_bounding_box, rle_encode
from .segmentation import PromptPoint, TargetSegments, View
from .simulator import FrameBundle

LUMINANCE_THRESHOLD = 128


def _frame_payload(bundle: FrameBundle, prompts: Sequence[PromptPoint]) -> dict:
    if bundle.left_image is None or bundle.right_image is None:
        raise ProviderUnavailable(
            "bundle has no raster images; enable render.raster for bridge runs"
        )
    return {
        "frame_id": bundle.frame_id,
        "synthetic": {
            "width": bundle.width,
            "height": bundle.height,
            "left_rle": rle_encode(bundle.left_image),
            "right_rle": rle_encode(bundle.right_image),
        },
        "prompts": [
            {"view": p.view.value, "u": p.pixel.u, "v": p.pixel.v} for p in prompts
        ],
    }


def _parse_response(raw: dict, bundle: FrameBundle) -> list[TargetSegments]:
    if "error" in raw:
        raise ProviderUnavailable(f"bridge error: {raw['error']}")
    if raw.get("frame_id") != bundle.frame_id:
        raise ProviderUnavailable(
            f"frame id mismatch: sent {bundle.frame_id}, got {raw.get('frame_id')}"
        )
    out = []
    for entry in raw.get("targets", []):
        conf = float(entry.get("confidence", 1.0))
        left = Mask.from_rle(entry["left_mask_rle"], bundle.width, bundle.height, conf)
        right = Mask.from_rle(entry["right_mask_rle"], bundle.width, bundle.height, conf)
        out.append(
            TargetSegments(
                target_id=None,
                left_box=min_bounding_box(left),
                right_box=min_bounding_box(right),
                confidence=conf,
                left_mask=left,
                right_mask=right,
            )
        )
    return out


def send_message(stream, payload: dict) -> None:
    body = json.dumps(payload, separators=(",", ":")).encode()
    stream.write(struct.pack(">I", len(body)) + body)
    stream.flush()


def recv_message(stream) -> dict:
    header = stream.read(4)
    if len(header) != 4:
        raise ProviderUnavailable("bridge closed the stream")
    (length,) = struct.unpack(">I", header)
    body = stream.read(length)
    if len(body) != length:
        raise ProviderUnavailable("truncated bridge response")
    return json.loads(body.decode())


@dataclass
class BridgeSegmenter:
    """SegmentationProvider speaking the wire protocol.

    One request per frame; any transport or framing problem surfaces as
    ProviderUnavailable so the pipeline can fall back to extrapolation.
    """

    mode: str  # "tcp" or "stdio"
    address: tuple[str, int] | None = None
    command: str | None = None
    timeout: float = 10.0
    _proc: subprocess.Popen | None = None

    @staticmethod
    def from_spec(spec: str) -> "BridgeSegmenter":
        if spec.startswith("stdio:"):
            return BridgeSegmenter(mode="stdio", command=spec[len("stdio:"):])
        host, _, port = spec.partition(":")
        if not port:
            raise ProviderUnavailable(f"bad bridge spec {spec!r}; want host:port or stdio:cmd")
        return BridgeSegmenter(mode="tcp", address=(host, int(port)))

    def _stdio_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as exc:
                raise ProviderUnavailable(f"cannot start bridge: {exc}") from exc
        return self._proc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5.0)

    def segment(self, bundle: FrameBundle, prompts: Sequence[PromptPoint]) -> list[TargetSegments]:
        payload = _frame_payload(bundle, prompts)
        if self.mode == "stdio":
            proc = self._stdio_proc()
            try:
                send_message(proc.stdin, payload)
                raw = recv_message(proc.stdout)
            except (BrokenPipeError, OSError) as exc:
                raise ProviderUnavailable(f"bridge stdio failure: {exc}") from exc
        else:
            try:
                with socket.create_connection(self.address, timeout=self.timeout) as sock:
                    sock.settimeout(self.timeout)
                    fh = sock.makefile("rwb")
                    send_message(fh, payload)
                    raw = recv_message(fh)
            except OSError as exc:
                raise ProviderUnavailable(f"bridge tcp failure: {exc}") from exc
        return _parse_response(raw, bundle)


class LuminanceComponentSegmenter:
    """In-process reference implementation of the bridge's mock mode.

    Thresholds the (binary) luminance image, labels 4-connected
    components, and returns the component containing each prompt; a view
    that received no prompts contributes all of its components, so a
    single-view prompt still produces a stereo pair.  Left and right
    components are paired greedily: rows must align (smallest vertical
    center offset wins) and the disparity u_left - u_right must be
    non-negative, smallest first on ties.
    """

    def segment(self, bundle: FrameBundle, prompts: Sequence[PromptPoint]) -> list[TargetSegments]:
        if bundle.left_image is None or bundle.right_image is None:
            raise ProviderUnavailable("no raster images in bundle")
        views = {
            View.LEFT: self._components(bundle.left_image),
            View.RIGHT: self._components(bundle.right_image),
        }
        picked: dict[View, set[int]] = {View.LEFT: set(), View.RIGHT: set()}
        for p in prompts:
            labels, _ = views[p.view]
            u, v = int(round(p.pixel.u)), int(round(p.pixel.v))
            if 0 <= v < labels.shape[0] and 0 <= u < labels.shape[1]:
                label = int(labels[v, u])
                if label > 0:
                    picked[p.view].add(label)
        for view in views:
            if not any(p.view is view for p in prompts):
                picked[view] = set(range(1, views[view][1] + 1))

        def masks_for(view: View) -> list[Mask]:
            labels, _ = views[view]
            return [
                Mask(bundle.width, bundle.height, labels == lbl, 1.0)
                for lbl in sorted(picked[view])
            ]

        lefts = [(m, min_bounding_box(m)) for m in masks_for(View.LEFT)]
        rights = [(m, min_bounding_box(m)) for m in masks_for(View.RIGHT)]
        out = []
        used: set[int] = set()
        for lm, lbox in sorted(lefts, key=lambda x: x[1].center):
            lu, lv = lbox.center
            best_j, best_key = None, (float("inf"), float("inf"))
            for j, (rm, rbox) in enumerate(rights):
                if j in used:
                    continue
                du = lu - rbox.center[0]
                if du < 0:
                    continue
                key = (abs(rbox.center[1] - lv), du)
                if key < best_key:
                    best_j, best_key = j, key
            if best_j is None:
                continue
            used.add(best_j)
            rm, rbox = rights[best_j]
            out.append(
                TargetSegments(
                    target_id=None,
                    left_box=lbox,
                    right_box=rbox,
                    confidence=1.0,
                    left_mask=lm,
                    right_mask=rm,
                )
            )
        return out

    @staticmethod
    def _components(image: np.ndarray) -> tuple[np.ndarray, int]:
        fg = image if image.dtype == bool else image >= LUMINANCE_THRESHOLD
        labels, count = ndimage.label(fg)
        return labels, int(count)
