"""Logical circuits: patches, operations, conditionals, and their text format.

A circuit is a list of statements over declared patches. Operations are
``init``, ``idle`` and ``measure`` (plus a reserved multi-patch ``merge``
kind that the compiler rejects). Conditionals branch on the parity of a set
of measurement labels; both branches must be structurally balanced (same
rounds, same measurement count, same liveness per patch) so that every
statement has a path-independent decoding graph.

Text format (one statement per line, ``#`` comments, a leading
format-version line)::

    blockdec-circuit v1
    patch q0 repetition 3
    init q0
    idle q0 2
    measure q0 m0
    if parity(m0) {
        idle q1 1
    } else {
        idle q1 1
    }

Braces may also sit on their own lines.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .errors import CircuitError

CIRCUIT_MAGIC = "blockdec-circuit v1"
SETTING_MAGIC = "blockdec-setting v1"

CODE_FAMILIES = ("repetition", "rotated-surface")
OP_KINDS = ("init", "idle", "measure", "merge")


@dataclass(frozen=True)
class QecSetting:
    """Code family, distance and phenomenological noise rates.

    Rates of exactly 0 are accepted (noiseless runs); the corresponding
    error mechanisms are simply omitted from the decoding graphs.
    """

    code_family: str = "repetition"
    distance: int = 3
    data_error_rate: float = 0.01
    measurement_error_rate: float = 0.01
    rounds_per_op: int = 1

    def __post_init__(self) -> None:
        _check_family_distance(self.code_family, self.distance)
        for name in ("data_error_rate", "measurement_error_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 0.5:
                raise CircuitError(f"{name} must be in [0, 0.5), got {rate!r}")
        if self.rounds_per_op < 1:
            raise CircuitError(f"rounds_per_op must be positive, got {self.rounds_per_op}")


def _check_family_distance(family: str, distance: int) -> None:
    if family not in CODE_FAMILIES:
        raise CircuitError(f"unknown code family {family!r}")
    if distance < 3 or distance % 2 == 0:
        raise CircuitError(f"distance must be an odd integer >= 3, got {distance}")


@dataclass(frozen=True)
class PatchDecl:
    """A declared logical patch. Family/distance default to the QEC setting."""

    name: str
    code_family: str | None = None
    distance: int | None = None

    def resolve(self, setting: QecSetting) -> tuple[str, int]:
        family = self.code_family or setting.code_family
        distance = self.distance or setting.distance
        _check_family_distance(family, distance)
        return family, distance


@dataclass(frozen=True)
class Operation:
    """A single-patch operation statement."""

    kind: str  # one of OP_KINDS
    patch: str
    rounds: int | None = None  # idle only; None -> setting.rounds_per_op
    label: str | None = None  # measure only
    extra_patch: str | None = None  # reserved merge kind

    def __post_init__(self) -> None:
        if self.kind not in OP_KINDS:
            raise CircuitError(f"unknown operation kind {self.kind!r}")
        if self.rounds is not None and self.rounds < 1:
            raise CircuitError(f"idle rounds must be positive, got {self.rounds}")
        if self.kind == "measure" and not self.label:
            raise CircuitError("measure requires a label")


@dataclass(frozen=True)
class Conditional:
    """Two-way branch on the parity of previously measured labels."""

    labels: tuple[str, ...]
    then_body: tuple["Statement", ...]
    else_body: tuple["Statement", ...] = ()

    def __post_init__(self) -> None:
        if not self.labels:
            raise CircuitError("conditional requires at least one label")


Statement = Operation | Conditional


@dataclass(frozen=True)
class LogicalCircuit:
    """Patch declarations plus a statement body. Validate before compiling."""

    patches: tuple[PatchDecl, ...]
    body: tuple[Statement, ...]

    def patch(self, name: str) -> PatchDecl:
        for decl in self.patches:
            if decl.name == name:
                return decl
        raise CircuitError(f"unknown patch {name!r}")


# ---------------------------------------------------------------------------
# Parsing


def parse_setting(text: str) -> QecSetting:
    """Parse the key/value QEC-setting file format."""
    lines = _content_lines(text, SETTING_MAGIC, "setting")
    values: dict[str, str] = {}
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise CircuitError(f"setting line {lineno}: expected 'key value', got {line!r}")
        key, value = parts
        if key in values:
            raise CircuitError(f"setting line {lineno}: duplicate key {key!r}")
        values[key] = value
    kwargs: dict[str, object] = {}
    converters = {
        "code_family": str,
        "distance": int,
        "data_error_rate": float,
        "measurement_error_rate": float,
        "rounds_per_op": int,
    }
    for key, value in values.items():
        if key not in converters:
            raise CircuitError(f"unknown setting key {key!r}")
        try:
            kwargs[key] = converters[key](value)
        except ValueError as exc:
            raise CircuitError(f"bad value for setting {key!r}: {value!r}") from exc
    return QecSetting(**kwargs)  # type: ignore[arg-type]


def format_setting(setting: QecSetting) -> str:
    return "\n".join(
        [
            SETTING_MAGIC,
            f"code_family {setting.code_family}",
            f"distance {setting.distance}",
            f"data_error_rate {setting.data_error_rate!r}",
            f"measurement_error_rate {setting.measurement_error_rate!r}",
            f"rounds_per_op {setting.rounds_per_op}",
        ]
    ) + "\n"


def _content_lines(text: str, magic: str, what: str) -> list[tuple[int, str]]:
    raw = text.splitlines()
    if not raw or raw[0].strip() != magic:
        raise CircuitError(f"{what} file must start with {magic!r}")
    out = []
    for lineno, line in enumerate(raw[1:], start=2):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            out.append((lineno, stripped))
    return out


def _split_brace_tokens(lines: list[tuple[int, str]]) -> list[tuple[int, str]]:
    """Give `{`, `}` and `} else {` combinations their own token lines."""
    out = []
    for lineno, line in lines:
        buf = ""
        for ch in line:
            if ch in "{}":
                if buf.strip():
                    out.append((lineno, buf.strip()))
                out.append((lineno, ch))
                buf = ""
            else:
                buf += ch
        if buf.strip():
            out.append((lineno, buf.strip()))
    return out


def parse_circuit(text: str) -> LogicalCircuit:
    """Parse the line-oriented circuit format into an AST.

    Raises:
        CircuitError: naming the offending line on any syntax problem.
    """
    tokens = _split_brace_tokens(_content_lines(text, CIRCUIT_MAGIC, "circuit"))
    patches: list[PatchDecl] = []
    pos = 0

    def err(lineno: int, msg: str) -> CircuitError:
        return CircuitError(f"circuit line {lineno}: {msg}")

    def parse_body(terminator: str | None) -> tuple[Statement, ...]:
        nonlocal pos
        body: list[Statement] = []
        while pos < len(tokens):
            lineno, tok = tokens[pos]
            if terminator is not None and tok == terminator:
                return tuple(body)
            pos += 1
            words = tok.split()
            head = words[0]
            if head == "patch":
                if terminator is not None:
                    raise err(lineno, "patch declarations must be top-level")
                if len(words) not in (2, 4):
                    raise err(lineno, "expected 'patch <name> [<family> <distance>]'")
                name = words[1]
                if any(p.name == name for p in patches):
                    raise err(lineno, f"duplicate patch {name!r}")
                family = words[2] if len(words) == 4 else None
                try:
                    distance = int(words[3]) if len(words) == 4 else None
                except ValueError:
                    raise err(lineno, f"bad distance {words[3]!r}") from None
                patches.append(PatchDecl(name, family, distance))
            elif head == "init":
                if len(words) != 2:
                    raise err(lineno, "expected 'init <patch>'")
                body.append(Operation("init", words[1]))
            elif head == "idle":
                if len(words) not in (2, 3):
                    raise err(lineno, "expected 'idle <patch> [<rounds>]'")
                rounds = None
                if len(words) == 3:
                    try:
                        rounds = int(words[2])
                    except ValueError:
                        raise err(lineno, f"bad round count {words[2]!r}") from None
                try:
                    body.append(Operation("idle", words[1], rounds=rounds))
                except CircuitError as exc:
                    raise err(lineno, str(exc)) from None
            elif head == "measure":
                if len(words) != 3:
                    raise err(lineno, "expected 'measure <patch> <label>'")
                body.append(Operation("measure", words[1], label=words[2]))
            elif head == "merge":
                if len(words) != 3:
                    raise err(lineno, "expected 'merge <patch> <patch>'")
                body.append(Operation("merge", words[1], extra_patch=words[2]))
            elif head == "if":
                rest = tok[2:].strip()
                if not (rest.startswith("parity(") and rest.endswith(")")):
                    raise err(lineno, "expected 'if parity(<labels>)'")
                labels = tuple(
                    lbl.strip() for lbl in rest[len("parity(") : -1].split(",") if lbl.strip()
                )
                if not labels:
                    raise err(lineno, "conditional requires at least one label")
                if pos >= len(tokens) or tokens[pos][1] != "{":
                    raise err(lineno, "expected '{' after conditional")
                pos += 1
                then_body = parse_body("}")
                if pos >= len(tokens):
                    raise err(lineno, "unterminated conditional")
                pos += 1  # consume '}'
                else_body: tuple[Statement, ...] = ()
                if pos < len(tokens) and tokens[pos][1] == "else":
                    pos += 1
                    if pos >= len(tokens) or tokens[pos][1] != "{":
                        raise err(lineno, "expected '{' after else")
                    pos += 1
                    else_body = parse_body("}")
                    if pos >= len(tokens):
                        raise err(lineno, "unterminated else branch")
                    pos += 1
                body.append(Conditional(labels, then_body, else_body))
            elif head in ("{", "}", "else"):
                raise err(lineno, f"unexpected {head!r}")
            else:
                raise err(lineno, f"unknown statement {head!r}")
        if terminator is not None:
            raise CircuitError("circuit ended inside a conditional body")
        return tuple(body)

    body = parse_body(None)
    return LogicalCircuit(tuple(patches), body)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class _PatchState:
    alive: bool = False
    rounds: int = 0
    measures: int = 0


@dataclass
class _WalkState:
    patches: dict[str, _PatchState] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)  # label -> patch


def _op_rounds(op: Operation, setting: QecSetting) -> int:
    if op.kind == "idle":
        return op.rounds if op.rounds is not None else setting.rounds_per_op
    if op.kind == "init":
        return setting.rounds_per_op
    return 1  # measure: one perfect-readout layer


def validate_circuit(circuit: LogicalCircuit, setting: QecSetting) -> None:
    """Check structural rules that make compilation well-defined.

    Beyond reference checks this enforces branch balance: within a
    conditional, both branches must leave every patch at the same round
    count, liveness and measurement count, so ops after the join have a
    path-independent decoding graph, and a conditional may only test labels
    measured on every path reaching it.

    Raises:
        CircuitError: describing the first violation found.
    """
    for decl in circuit.patches:
        decl.resolve(setting)

    def walk(body: tuple[Statement, ...], state: _WalkState) -> _WalkState:
        for stmt in body:
            if isinstance(stmt, Operation):
                if stmt.kind == "merge":
                    circuit.patch(stmt.patch)
                    circuit.patch(stmt.extra_patch or "")
                    continue  # supportability is the compiler's concern
                circuit.patch(stmt.patch)
                pstate = state.patches.setdefault(stmt.patch, _PatchState())
                if stmt.kind == "init":
                    if pstate.alive:
                        raise CircuitError(
                            f"patch {stmt.patch!r} re-initialized while alive; "
                            "measure it first"
                        )
                    pstate.alive = True
                elif not pstate.alive:
                    raise CircuitError(
                        f"{stmt.kind} on patch {stmt.patch!r} before init"
                    )
                pstate.rounds += _op_rounds(stmt, setting)
                if stmt.kind == "measure":
                    pstate.alive = False
                    pstate.measures += 1
                    if stmt.label in state.labels:
                        raise CircuitError(
                            f"measurement label {stmt.label!r} reused on the same path"
                        )
                    state.labels[stmt.label] = stmt.patch
            else:
                for label in stmt.labels:
                    if label not in state.labels:
                        raise CircuitError(
                            f"conditional tests label {label!r} that is not measured "
                            "on every path reaching it"
                        )
                s_then = walk(stmt.then_body, copy.deepcopy(state))
                s_else = walk(stmt.else_body, copy.deepcopy(state))
                for name in set(s_then.patches) | set(s_else.patches):
                    a = s_then.patches.get(name, _PatchState())
                    b = s_else.patches.get(name, _PatchState())
                    if a.rounds != b.rounds:
                        raise CircuitError(
                            f"conditional branches are unbalanced on patch {name!r}: "
                            f"{a.rounds} vs {b.rounds} rounds; pad the shorter branch"
                        )
                    if a.alive != b.alive:
                        raise CircuitError(
                            f"conditional branches leave patch {name!r} in different "
                            "liveness states"
                        )
                    if a.measures != b.measures:
                        raise CircuitError(
                            f"conditional branches measure patch {name!r} a different "
                            f"number of times ({a.measures} vs {b.measures})"
                        )
                # Only labels present on both branches survive the join.
                state.patches = s_then.patches
                state.labels = {
                    lbl: patch
                    for lbl, patch in s_then.labels.items()
                    if s_else.labels.get(lbl) == patch
                }
        return state

    walk(circuit.body, _WalkState())
