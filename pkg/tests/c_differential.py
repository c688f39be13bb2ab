"""Compile generated C, drive it with event scripts, compare to simulate()."""

from __future__ import annotations

import random
import subprocess
from pathlib import Path

from pchart.analysis import simulate
from pchart.codegen import gen_c
from pchart.compiler import compile_chart
from pchart.model import Chart, event_names


def build_c_binary(chart: Chart, workdir: Path) -> Path:
    p = compile_chart(chart)
    unit = gen_c(p, chart)
    name = chart.name
    (workdir / f"{name}.h").write_text(unit.header)
    (workdir / f"{name}.c").write_text(unit.source)
    (workdir / f"{name}_harness.c").write_text(unit.harness)
    binary = workdir / f"{name}_bin"
    subprocess.run(
        ["cc", "-std=c99", "-O1", "-o", str(binary),
         str(workdir / f"{name}.c"), str(workdir / f"{name}_harness.c")],
        check=True, capture_output=True,
    )
    return binary


def make_scripts(chart: Chart, n_scripts: int, length: int, seed: int) -> list[list[str]]:
    rng = random.Random(seed)
    events = event_names(chart) + ["tick"]
    return [[rng.choice(events) for _ in range(length)] for _ in range(n_scripts)]


def run_differential(chart: Chart, workdir: Path, n_scripts: int = 1000,
                     length: int = 100, seed: int = 2024) -> int:
    """Run scripts through the C binary and the interpreter; return the
    number of compared steps. Raises AssertionError on the first divergence."""
    binary = build_c_binary(chart, workdir)
    p = compile_chart(chart)
    scripts = make_scripts(chart, n_scripts, length, seed)

    stdin_lines: list[str] = []
    for script in scripts:
        stdin_lines.append("!reset")
        stdin_lines.extend(script)
    feed = "\n".join(stdin_lines) + "\n"
    proc = subprocess.run([str(binary)], input=feed, capture_output=True,
                          text=True, check=True)

    blocks = []
    cur: dict[str, int] = {}
    for line in proc.stdout.splitlines():
        if line == ".":
            blocks.append(cur)
            cur = {}
        else:
            key, _, value = line.partition("=")
            cur[key] = int(value)

    expected_blocks = len(stdin_lines)
    assert len(blocks) == expected_blocks, f"{len(blocks)} dumps for {expected_blocks} inputs"

    init = {k: int(v) for k, v in p.region_map.initial.items()}
    compared = 0
    i = 0
    for script in scripts:
        assert blocks[i] == init, f"reset state diverged: {blocks[i]} != {init}"
        i += 1
        trace = simulate(p, script, seed=0)
        for step, block in zip(trace.steps, blocks[i:i + length]):
            want = {k: int(v) for k, v in step.valuation.items()}
            assert block == want, (
                f"divergence after {step.event}: C={block} interpreter={want}"
            )
            compared += 1
        i += length
    return compared
