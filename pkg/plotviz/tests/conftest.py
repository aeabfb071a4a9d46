"""Shared helpers: synthetic run CSVs in the harness schema."""

import pytest

HEADER = "algo,env,seed,eval_index,episodes_used,wall_clock_s,fitness,best_so_far"


def _write_run(path, algo, env, seed, rows):
    """rows: (eval_index, wall_clock_s, fitness, best_so_far) tuples."""
    lines = [HEADER]
    for ev, wall, fit, best in rows:
        lines.append(
            f"{algo},{env},{seed},{ev},{3 * ev},{wall:.10g},{fit:.10g},{best:.10g}"
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def write_run():
    return _write_run
