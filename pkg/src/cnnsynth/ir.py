"""Network representation: macro-layers holding parallel branches of micro-layers.

A micro-layer is a single filter bank ``(kernel_width, kernel_height, depth)``
together with the spatial size of the feature map it produces.  Branches are
sequential chains of micro-layers; a macro-layer concatenates the outputs of
its branches.  Macro-layers form a strictly sequential pipeline.

Parameter and FLOP accounting is exact integer arithmetic and excludes biases
and the final classifier.
"""

import json
from dataclasses import dataclass, replace

from .errors import DocumentError, StructuralError

__all__ = [
    "MicroLayer",
    "Branch",
    "MacroLayer",
    "Network",
    "Finding",
    "param_count_micro",
    "macro_param_count",
    "layer_param_counts",
    "param_count_network",
    "flop_count",
    "layer_flop_counts",
    "consumed_channels",
    "validate",
    "check",
    "to_document",
    "from_document",
    "dumps",
    "loads",
    "load",
    "dump",
]


@dataclass(frozen=True)
class MicroLayer:
    kernel_width: int
    kernel_height: int
    depth: int
    out_rows: int
    out_cols: int
    annotations: tuple = ()


@dataclass(frozen=True)
class Branch:
    micro_layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "micro_layers", tuple(self.micro_layers))

    @property
    def output_channels(self):
        return self.micro_layers[-1].depth if self.micro_layers else 0


@dataclass(frozen=True)
class MacroLayer:
    name: str
    branches: tuple
    annotations: tuple = ()
    # Declared number of consumed channels; None means "whatever the
    # predecessor produces".  Only used for wiring validation.
    input_channels: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    @property
    def micro_layers(self):
        return [m for b in self.branches for m in b.micro_layers]

    @property
    def depths(self):
        return [m.depth for m in self.micro_layers]

    @property
    def output_channels(self):
        """Channels after concatenating the branch outputs."""
        return sum(b.output_channels for b in self.branches)

    @property
    def channel_sum(self):
        """Sum of every micro-layer depth in the macro-layer."""
        return sum(self.depths)


@dataclass(frozen=True)
class Network:
    name: str
    input_channels: int
    macro_layers: tuple
    classifier_classes: int
    scope: dict | None = None
    metadata: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "macro_layers", tuple(self.macro_layers))

    def __len__(self):
        return len(self.macro_layers)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class Finding:
    macro_layer: str | None
    rule: str
    message: str

    def __str__(self):
        where = self.macro_layer if self.macro_layer is not None else "<network>"
        return f"{where}: [{self.rule}] {self.message}"


# ---------------------------------------------------------------------------
# accounting


def param_count_micro(m, in_channels):
    """Weights of one filter bank: ``in_channels * w * h * depth`` (no bias)."""
    return in_channels * m.kernel_width * m.kernel_height * m.depth


def _macro_counts(layer, in_channels):
    params = flops = 0
    for branch in layer.branches:
        c = in_channels
        for m in branch.micro_layers:
            p = param_count_micro(m, c)
            params += p
            flops += 2 * p * m.out_rows * m.out_cols
            c = m.depth
    return params, flops


def macro_param_count(layer, in_channels):
    return _macro_counts(layer, in_channels)[0]


def consumed_channels(n):
    """Input channel count seen by each macro-layer, propagated from the input."""
    out = []
    c = n.input_channels
    for layer in n.macro_layers:
        out.append(c)
        c = layer.output_channels
    return out


def layer_param_counts(n):
    """Per-macro-layer parameter counts.  Raises StructuralError on bad wiring."""
    check(n)
    return [_macro_counts(l, c)[0] for l, c in zip(n.macro_layers, consumed_channels(n))]


def param_count_network(n):
    return sum(layer_param_counts(n))


def layer_flop_counts(n):
    check(n)
    return [_macro_counts(l, c)[1] for l, c in zip(n.macro_layers, consumed_channels(n))]


def flop_count(n):
    """Multiply-accumulates counted as two operations each."""
    return sum(layer_flop_counts(n))


# ---------------------------------------------------------------------------
# validation

_MICRO_FIELDS = ("kernel_width", "kernel_height", "depth", "out_rows", "out_cols")


def validate(n):
    """Return a list of Findings; empty means the network is well formed."""
    findings = []
    if n.input_channels < 1:
        findings.append(Finding(None, "positive", f"input_channels must be >= 1, got {n.input_channels}"))
    if n.classifier_classes < 1:
        findings.append(
            Finding(None, "positive", f"classifier_classes must be >= 1, got {n.classifier_classes}")
        )
    if not n.macro_layers:
        findings.append(Finding(None, "non-empty", "network has no macro-layers"))

    seen = set()
    prev_out = n.input_channels
    for i, layer in enumerate(n.macro_layers):
        name = layer.name
        if name in seen:
            findings.append(Finding(name, "unique-name", f"duplicate macro-layer name {name!r}"))
        seen.add(name)
        if not layer.branches:
            findings.append(Finding(name, "non-empty", "macro-layer has no branches"))
        for bi, branch in enumerate(layer.branches):
            if not branch.micro_layers:
                findings.append(Finding(name, "non-empty", f"branch {bi} has no micro-layers"))
            for mi, m in enumerate(branch.micro_layers):
                for fname in _MICRO_FIELDS:
                    v = getattr(m, fname)
                    if v < 1:
                        findings.append(
                            Finding(name, "positive", f"branch {bi} micro-layer {mi}: {fname} must be >= 1, got {v}")
                        )
        if layer.input_channels is not None and layer.input_channels != prev_out:
            src = "network input" if i == 0 else f"macro-layer {n.macro_layers[i - 1].name!r}"
            findings.append(
                Finding(
                    name,
                    "wiring",
                    f"declares {layer.input_channels} input channels but {src} produces {prev_out}",
                )
            )
        prev_out = layer.output_channels
    return findings


def check(n):
    findings = validate(n)
    if findings:
        raise StructuralError(findings)


# ---------------------------------------------------------------------------
# documents

_TOP_FIELDS = {"name", "input_channels", "classifier_classes", "macro_layers", "scope", "metadata"}
_MACRO_FIELDS = {"name", "branches", "annotations", "input_channels"}
_MICRO_ALLOWED = set(_MICRO_FIELDS) | {"annotations"}
_SCOPE_FIELDS = {"alpha", "beta", "lambda", "scope_aware"}


def _micro_doc(m):
    d = {f: getattr(m, f) for f in _MICRO_FIELDS}
    if m.annotations:
        d["annotations"] = [dict(a) for a in m.annotations]
    return d


def to_document(n):
    """Plain JSON-ready dict with a fixed field order."""
    doc = {
        "name": n.name,
        "input_channels": n.input_channels,
        "classifier_classes": n.classifier_classes,
    }
    if n.scope is not None:
        doc["scope"] = dict(n.scope)
    if n.metadata is not None:
        doc["metadata"] = n.metadata
    layers = []
    for layer in n.macro_layers:
        ld = {"name": layer.name}
        if layer.input_channels is not None:
            ld["input_channels"] = layer.input_channels
        ld["branches"] = [[_micro_doc(m) for m in b.micro_layers] for b in layer.branches]
        if layer.annotations:
            ld["annotations"] = [dict(a) for a in layer.annotations]
        layers.append(ld)
    doc["macro_layers"] = layers
    return doc


def _require(obj, key, loc):
    if key not in obj:
        raise DocumentError(f"missing required field {key!r}", loc or "<root>")
    return obj[key]


def _int(v, loc):
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"expected integer, got {type(v).__name__}", loc)
    return v


def _str(v, loc):
    if not isinstance(v, str):
        raise DocumentError(f"expected string, got {type(v).__name__}", loc)
    return v


def _obj(v, loc):
    if not isinstance(v, dict):
        raise DocumentError(f"expected object, got {type(v).__name__}", loc or "<root>")
    return v


def _list(v, loc):
    if not isinstance(v, list):
        raise DocumentError(f"expected array, got {type(v).__name__}", loc)
    return v


def _no_unknown(obj, allowed, loc):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise DocumentError(f"unknown field(s) {', '.join(map(repr, extra))}", loc or "<root>")


def _annotations(v, loc):
    out = []
    for i, a in enumerate(_list(v, loc)):
        out.append(dict(_obj(a, f"{loc}[{i}]")))
    return tuple(out)


def from_document(doc):
    """Build a Network from a parsed document.

    Type and shape problems raise DocumentError with the offending location.
    Semantic problems (zero depths, bad wiring) are left for ``validate``.
    """
    _obj(doc, "")
    _no_unknown(doc, _TOP_FIELDS, "")
    name = _str(_require(doc, "name", ""), "name")
    input_channels = _int(_require(doc, "input_channels", ""), "input_channels")
    classes = _int(_require(doc, "classifier_classes", ""), "classifier_classes")
    scope = None
    if "scope" in doc:
        scope = dict(_obj(doc["scope"], "scope"))
        _no_unknown(scope, _SCOPE_FIELDS, "scope")
    metadata = doc.get("metadata")
    if metadata is not None:
        _obj(metadata, "metadata")

    layers = []
    for i, ld in enumerate(_list(_require(doc, "macro_layers", ""), "macro_layers")):
        loc = f"macro_layers[{i}]"
        _obj(ld, loc)
        _no_unknown(ld, _MACRO_FIELDS, loc)
        lname = _str(_require(ld, "name", loc), f"{loc}.name")
        declared = ld.get("input_channels")
        if declared is not None:
            declared = _int(declared, f"{loc}.input_channels")
        branches = []
        for bi, bd in enumerate(_list(_require(ld, "branches", loc), f"{loc}.branches")):
            bloc = f"{loc}.branches[{bi}]"
            micros = []
            for mi, md in enumerate(_list(bd, bloc)):
                mloc = f"{bloc}[{mi}]"
                _obj(md, mloc)
                _no_unknown(md, _MICRO_ALLOWED, mloc)
                vals = {f: _int(_require(md, f, mloc), f"{mloc}.{f}") for f in _MICRO_FIELDS}
                ann = _annotations(md["annotations"], f"{mloc}.annotations") if "annotations" in md else ()
                micros.append(MicroLayer(annotations=ann, **vals))
            branches.append(Branch(micros))
        ann = _annotations(ld["annotations"], f"{loc}.annotations") if "annotations" in ld else ()
        layers.append(MacroLayer(lname, branches, ann, declared))

    return Network(name, input_channels, layers, classes, scope=scope, metadata=metadata)


def dumps(n):
    return json.dumps(to_document(n), indent=2) + "\n"


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(e.msg, f"{e.lineno}:{e.colno}") from None
    return from_document(doc)


def load(path):
    with open(path, encoding="utf-8") as f:
        return loads(f.read())


def dump(n, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(n))
