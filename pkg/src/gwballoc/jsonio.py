"""Canonical JSON: sorted keys and every float written with ``%.17g``."""

import json
import math

import numpy as np


def _canon(obj):
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    return obj


class _Float(float):
    def __repr__(self):
        if math.isnan(self):
            return "NaN"
        if math.isinf(self):
            return "Infinity" if self > 0 else "-Infinity"
        return "%.17g" % self


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # the C encoder ignores float subclasses' repr, so force the Python path
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.encode_basestring_ascii, self.indent,
            lambda f: repr(_Float(f)), self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def dumps_canonical(obj):
    """Deterministic JSON text for ``obj`` (numpy arrays allowed)."""
    return json.dumps(_canon(obj), cls=_Encoder, sort_keys=True, indent=1, separators=(",", ": "))


def dump_canonical(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps_canonical(obj) + "\n")


def load_json(path):
    from .errors import ValidationError

    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
