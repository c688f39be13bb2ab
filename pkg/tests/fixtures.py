"""Chart fixtures shared across the test suite.

Each builder returns a freshly built, validated chart. The deterministic
fixtures listed in DIFFERENTIAL_FIXTURES are conflict-free and range-safe
under arbitrary event scripts, which the C differential test relies on.
"""

from __future__ import annotations

from pchart.build import ChartBuilder, cond, goto, prob
from pchart.model import Chart


def toggle() -> Chart:
    b = ChartBuilder("toggle")
    off = b.basic(b.root_id, "Off", initial=True)
    on = b.basic(b.root_id, "On")
    b.trans(off, "E", to=on)
    b.trans(on, "E", to=off)
    return b.build()


def toggle_commented() -> Chart:
    b = ChartBuilder("toggle_notes")
    off = b.basic(b.root_id, "Off", initial=True)
    on = b.basic(b.root_id, "On")
    b.var(b.root_id, "x: 0..3 = 2 // speed setting")
    b.trans(off, "E", to=on, comment="turn on")
    b.trans(on, "E", to=off)
    b.comment(on, "device is active")
    return b.build()


def coin() -> Chart:
    b = ChartBuilder("coin")
    try_ = b.basic(b.root_id, "Try", initial=True)
    goal = b.basic(b.root_id, "Goal")
    sink = b.basic(b.root_id, "Sink")
    b.trans(try_, "flip", body=prob(("1/2", goal), ("1/2", sink)))
    b.query("Pmax", goal)
    return b.build()


def retry() -> Chart:
    b = ChartBuilder("retry")
    try_ = b.basic(b.root_id, "Try", initial=True)
    goal = b.basic(b.root_id, "Goal")
    b.trans(try_, "flip", body=prob(("1/2", goto(goal, cost=1)), ("1/2", goto(try_, cost=1))))
    b.query("Pmax", goal)
    b.query("Emin", goal)
    return b.build()


def random_walk() -> Chart:
    """Fair walk on positions 0..4 starting at 2; 0 and 4 absorb."""
    b = ChartBuilder("walk")
    cells = [b.basic(b.root_id, f"P{i}", initial=(i == 2)) for i in range(5)]
    for i in (1, 2, 3):
        b.trans(cells[i], "step", body=prob(("1/2", cells[i - 1]), ("1/2", cells[i + 1])))
    b.query("Pmax", cells[4])
    return b.build()


def counter_guarded() -> Chart:
    b = ChartBuilder("counter")
    c = b.basic(b.root_id, "Counting", initial=True)
    b.var(b.root_id, "x: 0..3 = 0 // speed setting")
    b.invariant(b.root_id, "x <= 3")
    b.trans(c, "inc [x < 3] / x := x + 1", to=c)
    b.trans(c, "dec [x > 0] / x := x - 1", to=c)
    return b.build()


def counter_bad() -> Chart:
    """Seeded violation: the range outgrew the invariant."""
    b = ChartBuilder("counter_bad")
    c = b.basic(b.root_id, "Counting", initial=True)
    b.var(b.root_id, "x: 0..9 = 0")
    b.invariant(b.root_id, "x <= 3")
    b.trans(c, "inc [x < 9] / x := x + 1", to=c)
    return b.build()


def three_tick() -> Chart:
    """Goal is reached after exactly three ticks through a rate-2 state."""
    b = ChartBuilder("three_tick")
    wait = b.basic(b.root_id, "Wait", initial=True)
    goal = b.basic(b.root_id, "Goal")
    b.cost_rate(wait, 2)
    b.trans(wait, "after 2", to=goal)
    b.query("Emin", goal)
    return b.build()


def nested() -> Chart:
    """Inner and outer transition on the same event; inner wins."""
    b = ChartBuilder("nested")
    a = b.xor(b.root_id, "A", initial=True)
    a1 = b.basic(a, "A1", initial=True)
    a2 = b.basic(a, "A2")
    bb = b.basic(b.root_id, "B")
    b.trans(a1, "E", to=a2)
    b.trans(a, "E", to=bb)
    b.trans(bb, "R", to=a)
    return b.build()


def andstate() -> Chart:
    """Two concurrent regions toggled by separate events."""
    b = ChartBuilder("duo")
    m = b.and_(b.root_id, "M", initial=True)
    r1 = b.xor(m, "R1")
    p = b.basic(r1, "P", initial=True)
    q = b.basic(r1, "Q")
    r2 = b.xor(m, "R2")
    u = b.basic(r2, "U", initial=True)
    v = b.basic(r2, "V")
    b.trans(p, "a", to=q)
    b.trans(q, "a", to=p)
    b.trans(u, "bang", to=v)
    b.trans(v, "bang", to=u)
    return b.build()


def calc() -> Chart:
    """Arithmetic-heavy deterministic fixture for codegen."""
    b = ChartBuilder("calc")
    run = b.basic(b.root_id, "Run", initial=True)
    b.var(b.root_id, "x: 0..7 = 0")
    b.var(b.root_id, "odd: bool = false")
    b.trans(run, "step [x < 7] / x := x + 1, odd := x mod 2 = 0", to=run)
    b.trans(run, "spin [x > 0 and not odd] / x := (x * 3) mod 8", to=run)
    b.trans(run, "reset / x := 0, odd := false", to=run)
    return b.build()


def traffic() -> Chart:
    """Deterministic timed cycle: green -> yellow -> red -> green."""
    b = ChartBuilder("traffic")
    g = b.basic(b.root_id, "Green", initial=True)
    y = b.basic(b.root_id, "Yellow")
    r = b.basic(b.root_id, "Red")
    b.trans(g, "after 3", to=y)
    b.trans(y, "after 1", to=r)
    b.trans(r, "after 2", to=g)
    return b.build()


def conflicted() -> Chart:
    """Two unguarded transitions on one event: a genuine conflict."""
    b = ChartBuilder("conflicted")
    s = b.basic(b.root_id, "S", initial=True)
    t1 = b.basic(b.root_id, "T1")
    t2 = b.basic(b.root_id, "T2")
    b.trans(s, "E", to=t1)
    b.trans(s, "E", to=t2)
    return b.build(check=True)


def conditional() -> Chart:
    """Cond pseudo-state with an else branch."""
    b = ChartBuilder("cond_demo")
    s = b.basic(b.root_id, "S", initial=True)
    lo = b.basic(b.root_id, "Lo")
    hi = b.basic(b.root_id, "Hi")
    b.var(b.root_id, "x: 0..9 = 0")
    b.trans(s, "go", body=cond(("x < 5", lo), els=hi))
    b.trans(lo, "bump / x := x + 5", to=s)
    b.trans(hi, "back", to=s)
    return b.build()


def uniform_delay() -> Chart:
    """Uniformly distributed delay in a 2..4 window."""
    b = ChartBuilder("udelay")
    idle = b.basic(b.root_id, "Idle", initial=True)
    wait = b.basic(b.root_id, "Wait")
    done = b.basic(b.root_id, "Done")
    b.trans(idle, "arm", to=wait)
    b.trans(wait, "uniform [2,4]", to=done)
    b.query("Pmax", done)
    return b.build()


# Deterministic, conflict-free, range-safe charts for the C differential test.
DIFFERENTIAL_FIXTURES = {
    "toggle": toggle,
    "counter": counter_guarded,
    "nested": nested,
    "duo": andstate,
    "calc": calc,
    "traffic": traffic,
}

ALL_FIXTURES = {
    "toggle": toggle,
    "toggle_notes": toggle_commented,
    "coin": coin,
    "retry": retry,
    "walk": random_walk,
    "counter": counter_guarded,
    "counter_bad": counter_bad,
    "three_tick": three_tick,
    "nested": nested,
    "duo": andstate,
    "calc": calc,
    "traffic": traffic,
    "conflicted": conflicted,
    "cond_demo": conditional,
    "udelay": uniform_delay,
}
