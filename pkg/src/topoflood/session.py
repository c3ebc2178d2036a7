"""Action logging, deterministic replay, undo/redo, and checkpoints.

The log file is JSON with a strict, versioned schema: a header object
{dataset_id, width, height, thresholds, version} plus an actions array.
Replay never reads the clock or stored pixel sets; every selection is
recomputed from action parameters, so a log plus its dataset context fully
determines the mask. Unknown fields or kinds are rejected rather than
ignored, keeping old readers honest about new writers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    HeaderMismatch,
    InvalidAction,
    OutOfBounds,
    ParseError,
)
from .raster import DRY, FLOODED, UNLABELED, AnnotationMask, NormalizedField
from .select import DOWNSTREAM, UPSTREAM, bfs_select, polygon_bfs_select
from .topology import MultiScaleSegmentation, segment_pixels

SCHEMA_VERSION = 1

BRUSH = "brush"
POINT_BFS = "point_bfs"
POLYGON_BFS = "polygon_bfs"
SEGMENT_PICK = "segment_pick"
SET_LEVEL = "set_level"
SET_LABEL_CLASS = "set_label_class"
SET_MODE = "set_mode"
UNDO = "undo"
REDO = "redo"

FILL = "fill"
ERASE = "erase"
CLASS_FLOODED = "flooded"
CLASS_DRY = "dry"

MUTATING_KINDS = (BRUSH, POINT_BFS, POLYGON_BFS, SEGMENT_PICK)

_PARAM_KEYS = {
    BRUSH: {"center", "side"},
    POINT_BFS: {"seed", "tolerance"},
    POLYGON_BFS: {"vertices", "tolerance"},
    SEGMENT_PICK: {"pixel", "level"},
    SET_LEVEL: {"level"},
    SET_LABEL_CLASS: {"label_class"},
    SET_MODE: {"mode"},
    UNDO: set(),
    REDO: set(),
}

_CLASS_CODE = {CLASS_FLOODED: FLOODED, CLASS_DRY: DRY}


@dataclass(frozen=True)
class ActionRecord:
    seq: int
    t_ms: int
    kind: str
    params: dict

    def to_dict(self) -> dict:
        # params in sorted key order so logs serialize identically no matter
        # how the record was built (live kwargs vs parsed JSON)
        out = {"seq": self.seq, "t_ms": self.t_ms, "kind": self.kind}
        for key in sorted(self.params):
            out[key] = self.params[key]
        return out


@dataclass
class SessionContext:
    """Immutable per-dataset inputs every session action is resolved against."""

    dataset_id: str
    field: NormalizedField
    multiscale: MultiScaleSegmentation
    connectivity: int = 4

    @property
    def shape(self) -> tuple[int, int]:
        return self.field.f.shape


@dataclass
class SessionState:
    mask: AnnotationMask
    label_class: str = CLASS_FLOODED
    mode: str = FILL
    level: int = 0
    undo_stack: list = dc_field(default_factory=list)
    redo_stack: list = dc_field(default_factory=list)


@dataclass
class SessionLog:
    dataset_id: str
    width: int
    height: int
    thresholds: tuple
    actions: list
    version: int = SCHEMA_VERSION

    def header(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "width": self.width,
            "height": self.height,
            "thresholds": list(self.thresholds),
            "version": self.version,
        }

    def append(self, action: ActionRecord) -> None:
        if self.actions and action.seq <= self.actions[-1].seq:
            raise InvalidAction(
                f"seq {action.seq} not greater than previous "
                f"{self.actions[-1].seq}",
                seq=action.seq,
            )
        self.actions.append(action)

    def to_json_bytes(self) -> bytes:
        doc = {
            "header": self.header(),
            "actions": [a.to_dict() for a in self.actions],
        }
        return json.dumps(doc, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json_bytes(cls, data: bytes) -> "SessionLog":
        try:
            doc = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"session log is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or set(doc) != {"header", "actions"}:
            raise ParseError(
                "session log must contain exactly 'header' and 'actions'"
            )
        header = doc["header"]
        if not isinstance(header, dict):
            raise ParseError("session log header must be an object")
        expected = {"dataset_id", "width", "height", "thresholds", "version"}
        if set(header) != expected:
            raise ParseError(
                f"header fields {sorted(set(header) ^ expected)} unexpected or missing"
            )
        if header["version"] != SCHEMA_VERSION:
            raise ParseError(
                f"unsupported log version {header['version']!r}, "
                f"expected {SCHEMA_VERSION}"
            )
        if not isinstance(header["dataset_id"], str):
            raise ParseError("dataset_id must be a string")
        width = _check_int(header["width"], "width")
        height = _check_int(header["height"], "height")
        thresholds = header["thresholds"]
        if not isinstance(thresholds, list) or not all(
            _is_number(t) for t in thresholds
        ):
            raise ParseError("thresholds must be a list of numbers")
        if not isinstance(doc["actions"], list):
            raise ParseError("actions must be an array")
        actions = [_parse_action(raw) for raw in doc["actions"]]
        last = None
        for a in actions:
            if last is not None and a.seq <= last:
                raise InvalidAction(
                    f"seq {a.seq} not greater than previous {last}", seq=a.seq
                )
            last = a.seq
        return cls(
            dataset_id=header["dataset_id"],
            width=width,
            height=height,
            thresholds=tuple(float(t) for t in thresholds),
            actions=actions,
        )


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_int(v, name: str, minimum: int | None = None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{name} must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ParseError(f"{name} must be >= {minimum}, got {v}")
    return v


def _need_int(action_seq, v, name, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidAction(f"{name} must be an integer, got {v!r}", seq=action_seq)
    if minimum is not None and v < minimum:
        raise InvalidAction(f"{name} must be >= {minimum}, got {v}", seq=action_seq)
    return v


def _need_pair(action_seq, v, name):
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or not all(_is_number(x) for x in v)
    ):
        raise InvalidAction(f"{name} must be a pair of numbers, got {v!r}", seq=action_seq)
    return v


def _parse_action(raw) -> ActionRecord:
    if not isinstance(raw, dict):
        raise ParseError(f"action must be an object, got {type(raw).__name__}")
    kind = raw.get("kind")
    if kind not in _PARAM_KEYS:
        raise InvalidAction(f"unknown action kind {kind!r}", seq=raw.get("seq"))
    seq = raw.get("seq")
    if isinstance(seq, bool) or not isinstance(seq, int):
        raise InvalidAction(f"seq must be an integer, got {seq!r}")
    t_ms = raw.get("t_ms")
    if isinstance(t_ms, bool) or not isinstance(t_ms, int) or t_ms < 0:
        raise InvalidAction(
            f"t_ms must be a non-negative integer, got {t_ms!r}", seq=seq
        )
    allowed = {"seq", "t_ms", "kind"} | _PARAM_KEYS[kind]
    extra = set(raw) - allowed
    if extra:
        raise InvalidAction(
            f"unknown fields {sorted(extra)} for kind {kind!r}", seq=seq
        )
    missing = allowed - set(raw)
    if missing:
        raise InvalidAction(
            f"missing fields {sorted(missing)} for kind {kind!r}", seq=seq
        )
    params = {k: raw[k] for k in _PARAM_KEYS[kind]}
    return ActionRecord(seq=seq, t_ms=t_ms, kind=kind, params=params)


def new_session(ctx: SessionContext) -> SessionState:
    h, w = ctx.shape
    return SessionState(mask=AnnotationMask.empty(h, w))


def new_log(ctx: SessionContext) -> SessionLog:
    h, w = ctx.shape
    return SessionLog(
        dataset_id=ctx.dataset_id,
        width=w,
        height=h,
        thresholds=tuple(ctx.multiscale.thresholds),
        actions=[],
    )


def _brush_pixels(state, ctx, action) -> np.ndarray:
    cr, cc = _need_pair(action.seq, action.params["center"], "center")
    cr = _need_int(action.seq, cr, "center row")
    cc = _need_int(action.seq, cc, "center col")
    side = _need_int(action.seq, action.params["side"], "side", minimum=1)
    h, w = ctx.shape
    if not (0 <= cr < h and 0 <= cc < w):
        raise OutOfBounds(f"brush center ({cr}, {cc}) outside {h}x{w} grid")
    r0 = max(0, cr - (side - 1) // 2)
    r1 = min(h - 1, cr + side // 2)
    c0 = max(0, cc - (side - 1) // 2)
    c1 = min(w - 1, cc + side // 2)
    rows = np.arange(r0, r1 + 1, dtype=np.int64)
    cols = np.arange(c0, c1 + 1, dtype=np.int64)
    return (rows[:, None] * w + cols[None, :]).ravel()


def _direction(state: SessionState) -> str:
    return DOWNSTREAM if state.label_class == CLASS_FLOODED else UPSTREAM


def _tolerance(action) -> float:
    tol = action.params["tolerance"]
    if not _is_number(tol) or tol < 0:
        raise InvalidAction(
            f"tolerance must be a non-negative number, got {tol!r}", seq=action.seq
        )
    return float(tol)


def _selection_pixels(state, ctx, action) -> np.ndarray:
    if action.kind == BRUSH:
        return _brush_pixels(state, ctx, action)
    if action.kind == POINT_BFS:
        seed = _need_pair(action.seq, action.params["seed"], "seed")
        r = _need_int(action.seq, seed[0], "seed row")
        c = _need_int(action.seq, seed[1], "seed col")
        return bfs_select(
            ctx.field, (r, c), _direction(state), _tolerance(action),
            ctx.connectivity,
        )
    if action.kind == POLYGON_BFS:
        verts = action.params["vertices"]
        if not isinstance(verts, (list, tuple)) or len(verts) < 3:
            raise InvalidAction(
                f"vertices must list at least 3 points, got {verts!r}",
                seq=action.seq,
            )
        pts = [_need_pair(action.seq, p, "vertex") for p in verts]
        return polygon_bfs_select(
            ctx.field, pts, _direction(state), _tolerance(action),
            ctx.connectivity,
        )
    # SEGMENT_PICK
    pixel = _need_pair(action.seq, action.params["pixel"], "pixel")
    r = _need_int(action.seq, pixel[0], "pixel row")
    c = _need_int(action.seq, pixel[1], "pixel col")
    level = _need_int(action.seq, action.params["level"], "level", minimum=0)
    return segment_pixels(ctx.multiscale.level(level), (r, c))


def _apply_pixels(state: SessionState, pixels: np.ndarray) -> None:
    labels = state.mask.labels.ravel()
    if state.mode == FILL:
        new_val = _CLASS_CODE[state.label_class]
    else:
        new_val = UNLABELED
    changed = pixels[labels[pixels] != new_val]
    patch = [(int(p), int(labels[p]), int(new_val)) for p in changed]
    labels[changed] = np.uint8(new_val)
    # a mutating action always lands a patch, even an empty one
    state.undo_stack.append(patch)
    state.redo_stack.clear()


def apply_action(
    state: SessionState, action: ActionRecord, ctx: SessionContext
) -> SessionState:
    """Apply one action to the session, mutating and returning ``state``.

    Mutating kinds (brush, BFS, polygon, segment pick) resolve their pixel
    set through the owning module, write the current class (fill) or
    Unlabeled (erase) to it, push an undo patch, and clear the redo stack.
    Setting kinds update tool state; undo/redo replay stored patches.
    """
    kind = action.kind
    if kind in MUTATING_KINDS:
        _apply_pixels(state, _selection_pixels(state, ctx, action))
        return state
    if kind == SET_LEVEL:
        level = _need_int(action.seq, action.params["level"], "level", minimum=0)
        if level >= len(ctx.multiscale.levels):
            raise InvalidAction(
                f"level {level} out of range "
                f"[0, {len(ctx.multiscale.levels)})",
                seq=action.seq,
            )
        state.level = level
        return state
    if kind == SET_LABEL_CLASS:
        value = action.params["label_class"]
        if value not in _CLASS_CODE:
            raise InvalidAction(
                f"label_class must be 'flooded' or 'dry', got {value!r}",
                seq=action.seq,
            )
        state.label_class = value
        return state
    if kind == SET_MODE:
        value = action.params["mode"]
        if value not in (FILL, ERASE):
            raise InvalidAction(
                f"mode must be 'fill' or 'erase', got {value!r}", seq=action.seq
            )
        state.mode = value
        return state
    if kind == UNDO:
        return undo(state)
    if kind == REDO:
        return redo(state)
    raise InvalidAction(f"unknown action kind {kind!r}", seq=action.seq)


def undo(state: SessionState) -> SessionState:
    """Revert the most recent patch; silent no-op on an empty stack."""
    if not state.undo_stack:
        return state
    patch = state.undo_stack.pop()
    labels = state.mask.labels.ravel()
    for pixel, prev, _ in reversed(patch):
        labels[pixel] = np.uint8(prev)
    state.redo_stack.append(patch)
    return state


def redo(state: SessionState) -> SessionState:
    """Reapply the most recently undone patch; no-op on an empty stack."""
    if not state.redo_stack:
        return state
    patch = state.redo_stack.pop()
    labels = state.mask.labels.ravel()
    for pixel, _, new in patch:
        labels[pixel] = np.uint8(new)
    state.undo_stack.append(patch)
    return state


def check_header(log: SessionLog, ctx: SessionContext) -> None:
    h, w = ctx.shape
    if log.width != w or log.height != h:
        raise HeaderMismatch(
            f"log is {log.width}x{log.height}, dataset is {w}x{h}"
        )
    if log.dataset_id != ctx.dataset_id:
        raise HeaderMismatch(
            f"log dataset {log.dataset_id!r} does not match {ctx.dataset_id!r}"
        )
    if tuple(log.thresholds) != tuple(ctx.multiscale.thresholds):
        raise HeaderMismatch(
            f"log thresholds {log.thresholds} do not match dataset "
            f"{tuple(ctx.multiscale.thresholds)}"
        )


def replay_state(log: SessionLog, ctx: SessionContext) -> SessionState:
    """Fold the whole log over a fresh session, validating as it goes."""
    check_header(log, ctx)
    state = new_session(ctx)
    last = None
    for action in log.actions:
        if last is not None and action.seq <= last:
            raise InvalidAction(
                f"seq {action.seq} not greater than previous {last}",
                seq=action.seq,
            )
        last = action.seq
        try:
            apply_action(state, action, ctx)
        except InvalidAction as exc:
            if exc.seq is None:
                raise InvalidAction(str(exc), seq=action.seq) from exc
            raise
        except (OutOfBounds, KeyError, TypeError, ValueError) as exc:
            raise InvalidAction(
                f"action {action.seq} failed: {exc}", seq=action.seq
            ) from exc
    return state


def replay(log: SessionLog, ctx: SessionContext) -> AnnotationMask:
    return replay_state(log, ctx).mask


def save_checkpoint(state: SessionState, log: SessionLog) -> bytes:
    """Serialize the session; the log alone reconstructs the state."""
    return log.to_json_bytes()


def load_checkpoint(data: bytes, ctx: SessionContext) -> tuple[SessionState, SessionLog]:
    log = SessionLog.from_json_bytes(data)
    return replay_state(log, ctx), log
