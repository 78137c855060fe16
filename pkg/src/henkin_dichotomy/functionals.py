"""Candidate maps Φ from a model's universe into Henkin constants.

Φ_s(a) is the stage-s approximation: it converges only once a, Φ(a) < s and
never changes afterwards.  Two kinds are provided: explicit schedules and
programs for a small counter machine.

Counter machine
---------------
Registers R0, R1, ... hold naturals; the input starts in R0, everything else
is 0.  One instruction per line (``;`` also separates):

    inc R        R += 1, continue
    djz R L      if R == 0 jump to line L, else R -= 1 and continue
    halt R       stop with output R

Lines count from 0, ``#`` starts a comment.  Each executed instruction,
``halt`` included, is one step.  Running off the end of the program halts
with output R0.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class MachineError(ValueError):
    pass


@dataclass(frozen=True)
class Instr:
    op: str
    reg: int
    target: int | None = None


_LINE = re.compile(r"^(inc|halt)\s+(\d+)$|^(djz)\s+(\d+)\s+(\d+)$")


def parse_program(text: str) -> tuple[Instr, ...]:
    prog = []
    for raw in re.split(r"[;\n]", text):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise MachineError(f"bad instruction {line!r}")
        if m.group(1):
            prog.append(Instr(m.group(1), int(m.group(2))))
        else:
            prog.append(Instr("djz", int(m.group(4)), int(m.group(5))))
    for k, ins in enumerate(prog):
        if ins.op == "djz" and ins.target > len(prog):
            raise MachineError(f"line {k}: jump target {ins.target} out of range")
    return tuple(prog)


@dataclass(frozen=True)
class MachineResult:
    output: int | None
    steps: int

    @property
    def halted(self) -> bool:
        return self.output is not None


def execute(program: str | Sequence[Instr], x: int, steps: int) -> MachineResult:
    """Run for at most ``steps`` steps; ``output`` is None if still running."""
    prog = parse_program(program) if isinstance(program, str) else tuple(program)
    regs: dict[int, int] = {0: x}
    pc = 0
    used = 0
    n = len(prog)
    while used < steps:
        if pc >= n:
            return MachineResult(regs.get(0, 0), used)
        ins = prog[pc]
        used += 1
        if ins.op == "inc":
            regs[ins.reg] = regs.get(ins.reg, 0) + 1
            pc += 1
        elif ins.op == "djz":
            if regs.get(ins.reg, 0) == 0:
                pc = ins.target
            else:
                regs[ins.reg] -= 1
                pc += 1
        else:
            return MachineResult(regs.get(ins.reg, 0), used)
    if pc >= n:
        return MachineResult(regs.get(0, 0), used)
    return MachineResult(None, used)


def run_machine(program: str | Sequence[Instr], x: int, steps: int) -> int | None:
    return execute(program, x, steps).output


def halting_time(program: str | Sequence[Instr], x: int, limit: int) -> int | None:
    r = execute(program, x, limit)
    return r.steps if r.halted else None


# --------------------------------------------------------------------------
# staged functionals


class StagedFunctional:
    kind = "abstract"

    def eval(self, a: int, s: int) -> int | None:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class TableFunctional(StagedFunctional):
    """Φ(a) = c from stage ``max(stage, a+1, c+1)`` on."""

    kind = "table"

    def __init__(self, rows: Iterable[tuple[int, int, int]], name: str = ""):
        table: dict[int, tuple[int, int]] = {}
        for a, c, stage in rows:
            if a < 0 or c < 0 or stage < 0:
                raise ValueError("table entries are naturals")
            if a in table:
                raise ValueError(f"input {a} listed twice")
            table[a] = (c, max(stage, a + 1, c + 1))
        self.table = dict(sorted(table.items()))
        self.name = name or "table"

    def eval(self, a, s):
        hit = self.table.get(a)
        if hit is None or s < hit[1]:
            return None
        return hit[0]

    def describe(self):
        return {"kind": "table", "rows": [[a, c, st] for a, (c, st) in self.table.items()]}

    def __repr__(self):
        return f"TableFunctional({self.name})"


class MachineFunctional(StagedFunctional):
    """Φ_s(a) = c iff a < s and the program halts on ``a`` within ``s`` steps
    with output c < s."""

    kind = "machine"

    def __init__(self, program: str, name: str = ""):
        self.text = program
        self.program = parse_program(program)
        self.name = name or "machine"
        self._cache: dict[int, MachineResult] = {}

    def eval(self, a, s):
        if a < 0 or a >= s:
            return None
        r = self._cache.get(a)
        if r is None or (not r.halted and r.steps < s):
            r = execute(self.program, a, s)
            self._cache[a] = r
        if not r.halted or r.steps > s or r.output >= s:
            return None
        assert a < s and r.output < s
        return r.output

    def describe(self):
        return {"kind": "machine", "program": self.text}

    def __repr__(self):
        return f"MachineFunctional({self.name})"


def eval_stage(phi: StagedFunctional, a: int, s: int) -> int | None:
    return phi.eval(a, s)


def dom_tuple(phi: StagedFunctional, s: int, size: int | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(inputs, outputs) of Φ_s in ascending input order, restricted to the
    universe ``range(size)`` when the model is finite."""
    bound = s if size is None else min(s, size)
    ins, outs = [], []
    for a in range(bound):
        c = phi.eval(a, s)
        if c is not None:
            ins.append(a)
            outs.append(c)
    return tuple(ins), tuple(outs)


def functional_from_config(entry: dict) -> StagedFunctional:
    kind = entry.get("kind")
    if kind == "table":
        return TableFunctional([tuple(r) for r in entry.get("rows", [])], entry.get("name", ""))
    if kind == "machine":
        return MachineFunctional(entry["program"], entry.get("name", ""))
    raise ValueError(f"unknown functional kind {kind!r}")


# a program that never halts and one computing the identity
LOOP = "djz 1 0"
IDENTITY = "djz 0 3; inc 1; djz 2 0; halt 1"
SUCCESSOR = "inc 0; halt 0"
