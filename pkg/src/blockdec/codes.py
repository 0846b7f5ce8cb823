"""Per-round detector layouts for the supported code families.

A layout describes one patch for one QEC round under phenomenological
noise: how many detectors a round has, which detectors each data-qubit
error flips (one detector for boundary qubits, two otherwise), and which
data qubits support the measured logical observable.

Only the check basis that detects bit-flip errors is modeled; the logical
readout of a patch is the parity of a fixed support column, so exactly the
bit-flip graph is relevant to correcting it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import CircuitError


@dataclass(frozen=True)
class QubitColumn:
    """One data qubit's couplings within a round.

    ``detectors`` holds the layout positions (0-based within the round) of
    the checks this qubit's error flips; ``in_support`` marks membership in
    the logical-observable support.
    """

    detectors: tuple[int, ...]
    in_support: bool


@dataclass(frozen=True)
class CodeLayout:
    """Static per-round structure of a patch."""

    family: str
    distance: int
    detectors_per_round: int
    qubits: tuple[QubitColumn, ...]


@lru_cache(maxsize=None)
def layout_for(family: str, distance: int) -> CodeLayout:
    if family == "repetition":
        return _repetition_layout(distance)
    if family == "rotated-surface":
        return _rotated_surface_layout(distance)
    raise CircuitError(f"unknown code family {family!r}")


def _repetition_layout(d: int) -> CodeLayout:
    """Chain of d data qubits with d-1 adjacent-pair parity checks.

    Qubit 0 carries the logical readout; an error on qubit q flips checks
    q-1 and q (clipped at the chain ends).
    """
    qubits = []
    for q in range(d):
        dets = tuple(c for c in (q - 1, q) if 0 <= c <= d - 2)
        qubits.append(QubitColumn(dets, in_support=(q == 0)))
    return CodeLayout("repetition", d, d - 1, tuple(qubits))


def _rotated_surface_layout(d: int) -> CodeLayout:
    """Rotated surface-code patch, bit-flip check basis only.

    Data qubits sit on a d x d grid. Plaquette (pr, pc) touches data rows
    pr..pr+1 and columns pc..pc+1; checkerboard parity (pr + pc even)
    selects the modeled basis, with weight-2 checks continuing the pattern
    on the top and bottom edges. Error chains terminate on the left/right
    columns; the logical readout support is data column 0, which crosses
    every such chain once. Check count per round is (d*d - 1) / 2.
    """
    plaquettes: list[tuple[int, int]] = []
    for pr in range(-1, d):
        for pc in range(0, d - 1):
            if (pr + pc) % 2 != 0:
                continue
            if pr == -1 or pr == d - 1:  # boundary half-plaquette
                plaquettes.append((pr, pc))
            elif 0 <= pr <= d - 2:
                plaquettes.append((pr, pc))
    plaquettes.sort()
    index = {p: i for i, p in enumerate(plaquettes)}
    assert len(plaquettes) == (d * d - 1) // 2

    qubits = []
    for r in range(d):
        for c in range(d):
            dets = []
            for pr, pc in ((r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)):
                if (pr, pc) in index:
                    dets.append(index[(pr, pc)])
            if not 1 <= len(dets) <= 2:
                raise AssertionError(f"qubit ({r},{c}) touches {len(dets)} checks")
            qubits.append(QubitColumn(tuple(sorted(dets)), in_support=(c == 0)))
    return CodeLayout("rotated-surface", d, (d * d - 1) // 2, tuple(qubits))
