"""Set and colouring literals, and the seeded generator behind them.

Randomness comes from numpy's PCG64 bit generator.  A literal that names its
own seed (``random:density=0.5,seed=42``) uses it directly; otherwise the
run seed and a per-use label are mixed through ``SeedSequence`` so that
distinct sets in one run are independent but reproducible.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .colouring import Colouring
from .errors import BadRule
from .field import Field
from .functions import FieldSubset


def rng_for(seed: int, *labels: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), *labels])))


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        if "=" not in part:
            raise BadRule(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise BadRule(f"{what} must be an integer, got {text!r}") from None


def generate_set(rule: str, F: Field, seed: int = 0, label: int = 0) -> FieldSubset:
    """Parse ``list:0,1,4 | all | star | random:density=d[,seed=s] | first:n``."""
    rule = rule.strip()
    kind, _, arg = rule.partition(":")
    if kind == "all" and not arg:
        return FieldSubset.full(F)
    if kind == "star" and not arg:
        return FieldSubset.star(F)
    if kind == "list":
        idx = [_int(t, "element") for t in filter(None, arg.split(","))]
        if any(i < 0 or i >= F.order for i in idx):
            raise BadRule(f"element index out of range for {F.literal()}")
        return FieldSubset.from_indices(F, idx)
    if kind == "first":
        n = _int(arg, "n")
        if not 0 <= n <= F.order:
            raise BadRule(f"first:n needs 0 <= n <= {F.order}")
        return FieldSubset.from_indices(F, range(n))
    if kind == "random":
        kv = _kv(arg)
        unknown = set(kv) - {"density", "seed"}
        if unknown:
            raise BadRule(f"unknown keys {sorted(unknown)} in {rule!r}")
        try:
            density = float(kv.get("density", "0.5"))
        except ValueError:
            raise BadRule(f"bad density in {rule!r}") from None
        if not 0.0 <= density <= 1.0 or math.isnan(density):
            raise BadRule("density must lie in [0, 1]")
        rng = rng_for(_int(kv["seed"], "seed")) if "seed" in kv else rng_for(seed, label)
        return FieldSubset(F, rng.random(F.order) < density)
    raise BadRule(f"unknown set rule {rule!r}")


def generate_colouring(rule: str, F: Field, seed: int = 0, label: int = 0) -> Colouring:
    """Parse ``explicit:<file> | residue:r | random:r[,seed=s]``.

    ``residue:r`` colours x != 0 by discrete log mod r (for r = 2 this is
    quadratic residuosity) and puts 0 in colour 0; r must divide |F*|.
    """
    rule = rule.strip()
    kind, _, arg = rule.partition(":")
    if kind == "explicit":
        path = Path(arg)
        if not path.is_file():
            raise BadRule(f"colouring file {arg!r} not found")
        try:
            vals = [int(t) for t in path.read_text().split()]
        except ValueError:
            raise BadRule(f"{arg}: expected one integer per line") from None
        if len(vals) != F.order or min(vals) < 0:
            raise BadRule(f"{arg}: need {F.order} nonnegative colour indices")
        return Colouring(F, vals)
    if kind == "residue":
        r = _int(arg, "r")
        if r < 1 or (F.order - 1) % r:
            raise BadRule(f"residue:r needs r dividing |F*| = {F.order - 1}")
        a = np.zeros(F.order, dtype=np.int64)
        a[1:] = F.log[1:] % r
        return Colouring(F, a, r)
    if kind == "random":
        head, _, rest = arg.partition(",")
        r = _int(head, "r")
        if r < 1:
            raise BadRule("r must be positive")
        kv = _kv(rest)
        if set(kv) - {"seed"}:
            raise BadRule(f"unknown keys in {rule!r}")
        rng = rng_for(_int(kv["seed"], "seed")) if "seed" in kv else rng_for(seed, label)
        return Colouring(F, rng.integers(0, r, size=F.order), r)
    raise BadRule(f"unknown colouring rule {rule!r}")
