"""Gate sequences and their text form.

A :class:`Circuit` keeps the preparation fiducial, the repeated germ and the
measurement fiducial apart, which is what lets probability evaluation reuse
germ powers. The text form follows the usual GST notation: gate labels
``Gx``, ``Gy``, ``Gi`` written in time order, ``(...)^n`` for repetition and
``{}`` for the empty sequence, e.g. ``GxGy(Gi)^16Gx``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

GATES = ("Gx", "Gy", "Gi")

_TOKEN = re.compile(r"\s*(Gx|Gy|Gi|\{\}|\(|\)|\^\d+)")


@dataclass(frozen=True)
class Circuit:
    prep: tuple = ()
    germ: tuple = ()
    power: int = 0
    meas: tuple = ()

    def __post_init__(self):
        for part in (self.prep, self.germ, self.meas):
            for g in part:
                if g not in GATES:
                    raise ValueError(f"unknown gate label {g!r}")
        if self.power < 0:
            raise ValueError("germ power must be >= 0")
        if self.power == 0 or not self.germ:
            object.__setattr__(self, "germ", ())
            object.__setattr__(self, "power", 0)

    @classmethod
    def from_gates(cls, gates) -> "Circuit":
        return cls(prep=tuple(gates))

    @property
    def gates(self) -> tuple:
        return self.prep + self.germ * self.power + self.meas

    @property
    def germ_length(self) -> int:
        return len(self.germ) * self.power

    def __len__(self):
        return len(self.prep) + self.germ_length + len(self.meas)

    def __str__(self):
        return format_circuit(self)


def format_circuit(c: Circuit) -> str:
    out = "".join(c.prep)
    if c.power:
        out += f"({''.join(c.germ)})^{c.power}"
    out += "".join(c.meas)
    return out or "{}"


def _parse_items(tokens, pos, depth):
    """Return (list of items, new position); an item is a label or (items, power)."""
    items = []
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in GATES:
            items.append(tok)
            pos += 1
        elif tok == "{}":
            pos += 1
        elif tok == "(":
            inner, pos = _parse_items(tokens, pos + 1, depth + 1)
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ValueError("unbalanced parenthesis")
            pos += 1
            power = 1
            if pos < len(tokens) and tokens[pos].startswith("^"):
                power = int(tokens[pos][1:])
                pos += 1
            items.append((inner, power))
        elif tok == ")":
            if depth == 0:
                raise ValueError("unbalanced parenthesis")
            return items, pos
        else:
            raise ValueError(f"unexpected token {tok!r}")
    if depth:
        raise ValueError("unbalanced parenthesis")
    return items, pos


def _flatten(items) -> tuple:
    out = []
    for it in items:
        if isinstance(it, tuple):
            inner, power = it
            out.extend(_flatten(inner) * power)
        else:
            out.append(it)
    return tuple(out)


def parse_circuit(text: str) -> Circuit:
    """Parse the text form; a single top-level ``(...)^n`` becomes the germ."""
    text = text.strip()
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse circuit {text!r} at position {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    items, _ = _parse_items(tokens, 0, 0)
    groups = [i for i, it in enumerate(items) if isinstance(it, tuple)]
    if len(groups) == 1:
        k = groups[0]
        inner, power = items[k]
        return Circuit(_flatten(items[:k]), _flatten(inner), power, _flatten(items[k + 1:]))
    return Circuit.from_gates(_flatten(items))
