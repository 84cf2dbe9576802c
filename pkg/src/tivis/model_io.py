"""Model file format: save and load.

Byte layout (all multi-byte integers little-endian):

    offset 0   4 bytes   magic b"GBXM"
    offset 4   1 byte    format version, currently 1
    offset 5   8 bytes   uint64: manifest length L in bytes
    offset 13  L bytes   manifest, UTF-8 text (described below)
    offset 13+L          weight blob: raw little-endian IEEE-754 float64

Manifest: one declaration per line, space-separated tokens.

    pixel_norm <unit_01|signed_11>
    input_shape 3 <H> <W>
    classes <name> <name> ...          names contain no whitespace
    layer conv2d out=<oc> in=<ic> kh=<kh> kw=<kw> stride=<s> pad=<p> \
          w=<byte offset>:<byte length> b=<byte offset>:<byte length>
    layer relu
    layer maxpool2x2
    layer avgpool_global
    layer flatten
    layer dense out=<o> in=<i> w=<off>:<len> b=<off>:<len>
    blob_bytes <total blob length>

Offsets index into the weight blob. Weight arrays are stored in C order:
conv2d as (out, in, kh, kw), dense as (out, in). The round trip is
bit-exact: load(save(m)) reproduces every weight and every field.
"""

from __future__ import annotations

import numpy as np

from .errors import BadMagicError, BlobLengthError, ModelFormatError, ShapeChainError
from .nn import Conv2d, Dense, Flatten, GlobalAvgPool, MaxPool2x2, Model, Relu

MAGIC = b"GBXM"
VERSION = 1


def save_model(model: Model, path) -> None:
    model.validate()
    for name in model.class_names:
        if not name or any(ch.isspace() for ch in name):
            raise ValueError(f"class name {name!r} must be a non-empty whitespace-free token")
    blobs = []
    lines = [
        f"pixel_norm {model.pixel_norm}",
        "input_shape " + " ".join(str(d) for d in model.input_shape),
        "classes " + " ".join(model.class_names),
    ]
    offset = 0

    def push(arr: np.ndarray) -> str:
        nonlocal offset
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        start = offset
        offset += len(raw)
        blobs.append(raw)
        return f"{start}:{len(raw)}"

    for layer in model.layers:
        if isinstance(layer, Conv2d):
            oc, ic, kh, kw = layer.weight.shape
            lines.append(
                f"layer conv2d out={oc} in={ic} kh={kh} kw={kw} "
                f"stride={layer.stride} pad={layer.padding} "
                f"w={push(layer.weight)} b={push(layer.bias)}"
            )
        elif isinstance(layer, Dense):
            o, i = layer.weight.shape
            lines.append(f"layer dense out={o} in={i} w={push(layer.weight)} b={push(layer.bias)}")
        else:
            lines.append(f"layer {layer.kind}")
    lines.append(f"blob_bytes {offset}")
    manifest = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([VERSION]))
        f.write(len(manifest).to_bytes(8, "little"))
        f.write(manifest)
        for raw in blobs:
            f.write(raw)


def load_model(path) -> Model:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {data[:4]!r}")
    if len(data) < 13:
        raise ModelFormatError("file too short for header")
    version = data[4]
    if version != VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    mlen = int.from_bytes(data[5:13], "little")
    if len(data) < 13 + mlen:
        raise ModelFormatError("file too short for declared manifest length")
    manifest = data[13 : 13 + mlen].decode("utf-8")
    blob = data[13 + mlen :]
    return _parse_manifest(manifest, blob).validate()


def _parse_manifest(manifest: str, blob: bytes) -> Model:
    pixel_norm = None
    input_shape = None
    class_names = None
    declared_blob = None
    layers = []
    for lineno, line in enumerate(manifest.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        key = tokens[0]
        if key == "pixel_norm":
            pixel_norm = _one_token(tokens, lineno)
        elif key == "input_shape":
            input_shape = tuple(_int_token(t, lineno) for t in tokens[1:])
        elif key == "classes":
            class_names = tuple(tokens[1:])
        elif key == "blob_bytes":
            declared_blob = _int_token(_one_token(tokens, lineno), lineno)
        elif key == "layer":
            layers.append(_parse_layer(tokens[1:], blob, len(layers), lineno))
        else:
            raise ModelFormatError(f"manifest line {lineno}: unknown declaration {key!r}")
    if pixel_norm is None or input_shape is None or class_names is None:
        raise ModelFormatError("manifest is missing pixel_norm, input_shape, or classes")
    if declared_blob is None:
        raise ModelFormatError("manifest is missing blob_bytes")
    if declared_blob != len(blob):
        raise BlobLengthError(
            f"manifest declares {declared_blob} blob bytes but file carries {len(blob)}"
        )
    return Model(
        layers=layers,
        input_shape=input_shape,
        class_names=class_names,
        pixel_norm=pixel_norm,
    )


def _one_token(tokens, lineno):
    if len(tokens) != 2:
        raise ModelFormatError(f"manifest line {lineno}: expected exactly one value")
    return tokens[1]


def _int_token(text, lineno):
    try:
        return int(text)
    except ValueError:
        raise ModelFormatError(f"manifest line {lineno}: bad integer {text!r}") from None


def _parse_layer(tokens, blob, index, lineno):
    if not tokens:
        raise ModelFormatError(f"manifest line {lineno}: empty layer declaration")
    kind = tokens[0]
    params = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ModelFormatError(f"manifest line {lineno}: bad layer parameter {tok!r}")
        k, v = tok.split("=", 1)
        params[k] = v
    if kind == "conv2d":
        oc = int(params["out"])
        ic = int(params["in"])
        kh = int(params["kh"])
        kw = int(params["kw"])
        w = _read_array(blob, params["w"], (oc, ic, kh, kw), index, kind, "weight")
        b = _read_array(blob, params["b"], (oc,), index, kind, "bias")
        return Conv2d(weight=w, bias=b, stride=int(params["stride"]), padding=int(params["pad"]))
    if kind == "dense":
        o = int(params["out"])
        i = int(params["in"])
        w = _read_array(blob, params["w"], (o, i), index, kind, "weight")
        b = _read_array(blob, params["b"], (o,), index, kind, "bias")
        return Dense(weight=w, bias=b)
    if kind == "relu":
        return Relu()
    if kind == "maxpool2x2":
        return MaxPool2x2()
    if kind == "avgpool_global":
        return GlobalAvgPool()
    if kind == "flatten":
        return Flatten()
    raise ModelFormatError(f"manifest line {lineno}: unknown layer kind {kind!r}")


def _read_array(blob, span, shape, layer_index, kind, name):
    try:
        off_text, len_text = span.split(":")
        off, nbytes = int(off_text), int(len_text)
    except ValueError:
        raise ModelFormatError(f"layer {layer_index} ({kind}): bad {name} span {span!r}") from None
    if off < 0 or nbytes < 0 or off + nbytes > len(blob):
        raise BlobLengthError(
            f"layer {layer_index} ({kind}): {name} span {off}:{nbytes} "
            f"exceeds blob of {len(blob)} bytes"
        )
    expected = int(np.prod(shape)) * 8
    if nbytes != expected:
        raise ShapeChainError(
            f"layer {layer_index} ({kind}): {name} declares shape {shape} "
            f"({expected} bytes) but stores {nbytes} bytes"
        )
    return np.frombuffer(blob[off : off + nbytes], dtype="<f8").reshape(shape).copy()
