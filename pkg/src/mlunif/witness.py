"""The explicit unifier for reachable targets.

For a run of length l, the i-th defect formula says the first i steps are
represented by configuration points but step i+1 is not.  The unifier maps
each counter variable to a disjunction over i of (defect_i and the tower
marker of the counter's value at step i), where the marker index shifts
down by one exactly when the step ahead decrements that counter from a
nonzero value.
"""

from __future__ import annotations

from typing import List

import functools

from .errors import NotReachable
from .formula import BOT, And, Formula, Not, Substitution, conj, disj
from .minsky import Config, Dec, MinskyProgram, Trace, Yes, reaches
from .encoding import Mode, config_exists, tower


@functools.lru_cache(maxsize=None)
def defect(i: int, trace: Trace, mode: Mode) -> Formula:
    """Run represented faithfully through step i, but not at step i + 1."""
    if not 0 <= i < len(trace):
        raise IndexError("defect index %d out of range for a %d-step trace"
                         % (i, len(trace)))
    parts: List[Formula] = [
        config_exists(trace.configs[j], mode) for j in range(i + 1)
    ]
    parts.append(Not(config_exists(trace.configs[i + 1], mode)))
    return conj(parts)


def defect_formulas(trace: Trace, mode: Mode) -> List[Formula]:
    return [defect(i, trace, mode) for i in range(len(trace))]


def shifted_counter_index(trace: Trace, i: int, counter: int) -> int:
    """Value of `counter` at step i, minus one when the instruction leaving
    step i decrements that counter from a nonzero value."""
    config = trace.configs[i]
    value = config.c1 if counter == 1 else config.c2
    ins = trace.instrs[i]
    if value != 0 and isinstance(ins, Dec) and ins.counter == counter:
        return value - 1
    return value


def shifted_counter_marker(trace: Trace, i: int, counter: int) -> Formula:
    return tower(counter, shifted_counter_index(trace, i, counter))


def witness_from_trace(trace: Trace, mode: Mode) -> Substitution:
    """Unifier built from a witnessing run; for a zero-step run both
    variables map to false (the empty disjunction)."""
    length = len(trace)
    if length == 0:
        return Substitution({1: BOT, 2: BOT})
    p1 = disj([And(defect(i, trace, mode), shifted_counter_marker(trace, i, 1))
               for i in range(length)])
    p2 = disj([And(defect(i, trace, mode), shifted_counter_marker(trace, i, 2))
               for i in range(length)])
    return Substitution({1: p1, 2: p2})


def witness_substitution(program: MinskyProgram, start: Config, target: Config,
                         bound: int, mode: Mode) -> Substitution:
    result = reaches(program, start, target, bound)
    if not isinstance(result, Yes):
        raise NotReachable("%s does not provably reach %s within %d steps"
                           % (start, target, bound))
    return witness_from_trace(result.trace, mode)
