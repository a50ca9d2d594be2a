"""Built-in map corpus used by ``verify-all`` and the test-suite.

Every entry is a self-map whose type and constants are known in closed form,
so invariant checks can compare against exact values where they exist.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import MapDescriptor, dilation, mobius, psi, sqrt, stack, to_ball, to_disk, var


@dataclass
class CorpusEntry:
    m: MapDescriptor
    kind: str                     # elliptic | hyperbolic | parabolic
    known: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.m.name


def _hp(name, expr):
    return MapDescriptor("halfplane", expr, name=name)


def _disk(name, expr):
    return MapDescriptor("disk", expr, name=name)


def _named(m: MapDescriptor, name: str) -> MapDescriptor:
    return MapDescriptor(m.domain, m.expr, m.N, name=name)


def siegel_claim_map(A: float, N: int = 2) -> MapDescriptor:
    """``(A w1 + sqrt(w1), sqrt(A) w')`` on H^N: a self-map because Im sqrt(w1) >= 0."""
    w1 = var(0)
    pert = stack(sqrt(w1), *([0] * (N - 1)))
    return MapDescriptor("siegel", dilation(A) + pert, N, name=f"siegel_claim_A{A:g}")


def one_variable() -> list[CorpusEntry]:
    z = var()
    lin = _hp("affine_2z_plus_i", 2 * z + 1j)
    sq = _hp("two_z_plus_sqrt", 2 * z + sqrt(z))
    return [
        CorpusEntry(_disk("mobius_a05", mobius(1, 0.5, 0.5, 1)), "hyperbolic",
                    {"alpha": 1 / 3, "dw": 1.0}),
        CorpusEntry(_disk("z_over_2_minus_z", z / (2 - z)), "elliptic",
                    {"fixed": 0.0, "lambda": 0.5}),
        CorpusEntry(_disk("rotation_i", 1j * z), "elliptic", {"fixed": 0.0, "lambda": 1j}),
        CorpusEntry(_disk("quadratic_half", 0.5 * z + 0.1 * z * z), "elliptic",
                    {"fixed": 0.0, "lambda": 0.5}),
        CorpusEntry(lin, "hyperbolic", {"A": 2.0, "b_inf": 0.0, "theta": np.pi / 2, "closed_form": True}),
        CorpusEntry(sq, "hyperbolic", {"A": 2.0}),
        CorpusEntry(_hp("affine_3z_plus_1", 3 * z + 1), "hyperbolic",
                    {"A": 3.0, "b_inf": 1.0, "closed_form": True}),
        CorpusEntry(_hp("translation_i", z + 1j), "parabolic", {"alpha": 1.0}),
        CorpusEntry(_named(to_disk(lin), "disk_affine_2z_plus_i"), "hyperbolic", {"alpha": 0.5}),
        CorpusEntry(_named(to_disk(sq), "disk_two_z_plus_sqrt"), "hyperbolic", {"alpha": 0.5}),
    ]


def several_variables() -> list[CorpusEntry]:
    a8 = siegel_claim_map(8.0)
    return [
        CorpusEntry(a8, "hyperbolic", {"c": 0.125}),
        CorpusEntry(siegel_claim_map(2.0), "hyperbolic", {"c": 0.5}),
        CorpusEntry(_named(to_ball(a8), "ball_claim_A8"), "hyperbolic", {"c": 0.125}),
        CorpusEntry(MapDescriptor("siegel", psi(4.0, [5j, 1.0]), 2, name="siegel_psi_A4"),
                    "hyperbolic", {"c": 0.25, "fixed": [1j, -1.0]}),
        CorpusEntry(MapDescriptor("ball", stack(mobius(1, 0.5, 0.5, 1, var(0))), 1,
                                  name="ball_mobius_a05"), "hyperbolic", {"c": 1 / 3}),
    ]


def default_corpus() -> list[CorpusEntry]:
    return one_variable() + several_variables()


def by_name(name: str) -> CorpusEntry:
    for e in default_corpus():
        if e.name == name:
            return e
    raise KeyError(name)
