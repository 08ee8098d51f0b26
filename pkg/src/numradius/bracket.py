from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Bracket:
    """Closed interval ``[lo, hi]`` known to contain a quantity.

    ``certified`` is False when one of the endpoints only holds empirically
    (e.g. a lower bound on an infimum taken over sampled candidates).
    """

    lo: float
    hi: float
    method: str
    certified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value, method, certified=True):
        value = float(value)
        return cls(value, value, method, certified)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, value, tol=0.0):
        return self.lo - tol <= value <= self.hi + tol

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "method": self.method, "certified": self.certified}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["lo"]), float(d["hi"]), d["method"], bool(d.get("certified", True)))
