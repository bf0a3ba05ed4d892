"""Seeded random generators shared by the test modules."""

import random

from mlunif.encoding import frame_for_configs, truncation_level
from mlunif.formula import (
    BOT, H2, L, TOP, And, Box, Diamond, Iff, Implies, Modality, Nominal, Not,
    Or, Var,
)
from mlunif.kripke import Frame, Model, Valuation, holds_everywhere

_L_MODS = [Modality.REL, Modality.UNIV]
_H2_MODS = [Modality.REL, Modality.HYB]


def random_formula(rng: random.Random, depth: int, num_vars: int = 2,
                   language: str = L, num_noms: int = 0):
    """Random formula of the given language with at most `depth` nesting."""
    mods = _L_MODS if language == L else _H2_MODS
    atoms = [TOP, BOT] + [Var(i) for i in range(1, num_vars + 1)]
    if language == H2:
        atoms += [Nominal(i) for i in range(1, num_noms + 1)]

    def go(d):
        if d <= 0 or rng.random() < 0.25:
            return rng.choice(atoms)
        kind = rng.randrange(7)
        if kind == 0:
            return Not(go(d - 1))
        if kind == 1:
            return And(go(d - 1), go(d - 1))
        if kind == 2:
            return Or(go(d - 1), go(d - 1))
        if kind == 3:
            return Implies(go(d - 1), go(d - 1))
        if kind == 4:
            return Iff(go(d - 1), go(d - 1))
        if kind == 5:
            return Box(rng.choice(mods), go(d - 1))
        return Diamond(rng.choice(mods), go(d - 1))

    return go(depth)


def prefix_defect_model(seed, program, trace, i, mode, check):
    """Random model on which `check` (a ground formula, typically defect_i)
    holds at every point.

    Starts from the skeleton frame holding configuration points only for
    steps 0..i, then adds a few fresh points with edges into it; new points
    get no incoming edges, so the truth of forward-looking formulas at the
    original points is untouched.  The perturbed model is verified against
    `check` and rejected (None) if the fresh points broke it.
    """
    rng = random.Random(seed)
    level = truncation_level(program, trace.configs)
    lf = frame_for_configs(trace.configs[:i + 1], level, mode)
    points = list(lf.frame.points)
    r = set(lf.frame.r)
    fresh = []
    for k in range(rng.randint(0, 3)):
        name = "x%d" % k
        targets = [p for p in points if rng.random() < 0.2]
        points.append(name)
        fresh.append(name)
        r.update((name, t) for t in targets)
    s = None
    nom_map = {}
    if mode.kind == "hybrid":
        s = frozenset((x, y) for x in points for y in points)
        nom_map = {mode.nominal_index: rng.choice(points)}
    frame = Frame(tuple(points), frozenset(r), s)
    model = Model(frame, Valuation({}, nom_map))
    if not holds_everywhere(model, check):
        return None
    return model
