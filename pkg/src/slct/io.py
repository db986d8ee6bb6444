"""JSON file formats.

``slct-net-v1``
    ``{"format": "slct-net-v1", "widths": [H1, ..., H(L+1)], "bias": bool,
    "layers": [{"A": [[...]], "B": [...]}, ...]}`` with layers in order
    ``s = 1..L`` (output side first).  Entries are integers, ``"p/q"``
    strings (both exact) or floats.  A three-layer ReLU net uses the same
    layout with widths ``[H1, H2, H3]``: layer 1 holds ``A1`` and no bias,
    layer 2 holds ``A2`` and ``B2``.
``slct-box-v1``
    ``{"format": "slct-box-v1", "lower": [...], "upper": [...]}``.
group overrides
    ``{"groups": [[unit ids]], "h1": [...], "ranks": [...]}``, ids 0-based.
candidates
    ``{"candidates": [{"widths": [...], "bias": bool, "rank": int}]}``.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .linear import LinearArchitecture, LinearNetwork
from .relu import InputDomain, ReLUNetwork

NET_FORMAT = "slct-net-v1"
BOX_FORMAT = "slct-box-v1"


class FormatError(ValueError):
    """Input document does not follow its declared format."""


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _entry(v):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise FormatError(f"matrix entries must be numbers or 'p/q' strings, got {v!r}")
    if isinstance(v, str):
        try:
            Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad rational entry {v!r}") from None
    return v


def _matrix(rows, shape, what):
    if not isinstance(rows, list) or len(rows) != shape[0] or any(
            not isinstance(r, list) or len(r) != shape[1] for r in rows):
        raise FormatError(f"{what} must be a {shape[0]}x{shape[1]} nested list")
    return [[_entry(v) for v in r] for r in rows]


def _vector(vals, n, what):
    if not isinstance(vals, list) or len(vals) != n:
        raise FormatError(f"{what} must be a list of {n} entries")
    return [_entry(v) for v in vals]


def _header(doc, fmt):
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    if doc.get("format") != fmt:
        raise FormatError(f"expected format {fmt!r}, got {doc.get('format')!r}")


def _widths(doc):
    widths = doc.get("widths")
    if not isinstance(widths, list) or len(widths) < 2 or any(
            isinstance(h, bool) or not isinstance(h, int) or h < 1 for h in widths):
        raise FormatError(f"widths must be a list of at least two positive integers, got {widths!r}")
    return tuple(widths)


def _layers(doc, n):
    layers = doc.get("layers")
    if not isinstance(layers, list) or len(layers) != n or any(not isinstance(l, dict) for l in layers):
        raise FormatError(f"layers must be a list of {n} objects")
    return layers


def linear_network_from_json(doc) -> LinearNetwork:
    _header(doc, NET_FORMAT)
    widths = _widths(doc)
    bias = doc.get("bias", False)
    if not isinstance(bias, bool):
        raise FormatError("bias must be true or false")
    arch = LinearArchitecture(widths, bias)
    layers = _layers(doc, arch.depth)
    A, B = [], []
    for s, ((rows, cols), layer) in enumerate(zip(arch.layer_shapes, layers), start=1):
        A.append(_matrix(layer.get("A"), (rows, cols), f"layer {s} A"))
        if bias:
            B.append(_vector(layer.get("B"), rows, f"layer {s} B"))
        elif "B" in layer:
            raise FormatError(f"layer {s} has B but bias is false")
    return LinearNetwork(arch, tuple(A), tuple(B))


def relu_network_from_json(doc) -> ReLUNetwork:
    _header(doc, NET_FORMAT)
    widths = _widths(doc)
    if len(widths) != 3:
        raise FormatError(f"a ReLU network needs widths [H1, H2, H3], got {list(widths)}")
    h1, h2, h3 = widths
    first, second = _layers(doc, 2)
    if "B" in first:
        raise FormatError("layer 1 of a ReLU network takes no bias")
    if "B" not in second:
        raise FormatError("layer 2 of a ReLU network needs B")
    return ReLUNetwork(_matrix(first.get("A"), (h1, h2), "layer 1 A"),
                       _matrix(second.get("A"), (h2, h3), "layer 2 A"),
                       _vector(second.get("B"), h2, "layer 2 B"))


def domain_from_json(doc) -> InputDomain:
    _header(doc, BOX_FORMAT)
    lo, hi = doc.get("lower"), doc.get("upper")
    for v, name in ((lo, "lower"), (hi, "upper")):
        if not isinstance(v, list) or not v or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise FormatError(f"{name} must be a non-empty list of numbers")
    return InputDomain(lo, hi)


def groups_from_json(doc) -> dict:
    if not isinstance(doc, dict) or not isinstance(doc.get("groups"), list):
        raise FormatError("group override must be an object with a 'groups' list")
    for g in doc["groups"]:
        if not isinstance(g, list) or any(isinstance(u, bool) or not isinstance(u, int) for u in g):
            raise FormatError("each group must be a list of integer unit ids")
    for key in ("h1", "ranks"):
        if key in doc and doc[key] is not None and (not isinstance(doc[key], list) or any(
                isinstance(v, bool) or not isinstance(v, int) for v in doc[key])):
            raise FormatError(f"{key} must be a list of integers")
    return doc


def candidates_from_json(doc) -> list:
    if not isinstance(doc, dict) or not isinstance(doc.get("candidates"), list):
        raise FormatError("candidates file must be an object with a 'candidates' list")
    return doc["candidates"]


def _json_entry(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    if isinstance(v, int):
        return v
    return float(v)


def network_to_json(net) -> dict:
    """Inverse of the two readers, for either network type."""
    if isinstance(net, ReLUNetwork):
        return {"format": NET_FORMAT, "widths": list(net.widths), "bias": False, "layers": [
            {"A": [[_json_entry(v) for v in r] for r in net.A1]},
            {"A": [[_json_entry(v) for v in r] for r in net.A2], "B": [_json_entry(v) for v in net.B2]},
        ]}
    arch = net.architecture
    layers = []
    for s in range(arch.depth):
        layer = {"A": [[_json_entry(v) for v in r] for r in net.A[s]]}
        if arch.bias:
            layer["B"] = [_json_entry(v) for v in net.B[s]]
        layers.append(layer)
    return {"format": NET_FORMAT, "widths": list(arch.widths), "bias": arch.bias, "layers": layers}


def domain_to_json(domain: InputDomain) -> dict:
    return {"format": BOX_FORMAT, "lower": domain.lower.tolist(), "upper": domain.upper.tolist()}
