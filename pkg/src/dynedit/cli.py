"""``dynedit`` command line: generate traces, replay them, audit invariants."""

from __future__ import annotations

import sys

import click

from .audit import audit_trace
from .errors import ConfigError, TraceFormatError
from .estimator import EstimatorConfig
from .trace import PROFILES, ReplaySummary, gen_trace, read_trace, replay, write_csv


@click.group()
def main() -> None:
    """Dynamic approximate edit distance: trace tooling."""


@main.command()
@click.option("--profile", type=click.Choice(PROFILES), default="random", show_default=True)
@click.option("--n", "n", type=int, required=True, help="Initial length of X.")
@click.option("--steps", type=int, required=True, help="Number of edit operations.")
@click.option("--k", "k_target", type=int, default=4, show_default=True, help="Planted distance.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--b", "b", type=int, default=4, show_default=True, help="Branching recorded in the header.")
@click.option("--alphabet", type=int, default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default="-", show_default=True)
def gen(profile, n, steps, k_target, seed, b, alphabet, out):
    """Write a deterministic trace."""
    try:
        tr = gen_trace(profile, n, steps, k_target, seed, b=b, alphabet=alphabet)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    with click.open_file(out, "w") as fh:
        fh.write(tr.dumps())


def _load(path: str):
    try:
        return read_trace(path)
    except TraceFormatError as exc:
        click.echo(f"{path}: {exc}", err=True)
        sys.exit(2)


@main.command("replay")
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--oracle", default="off", show_default=True, help="on | off | every:M")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default="-", show_default=True)
@click.option("--timing/--no-timing", default=True, show_default=True, help="Fill micros_cumulative.")
@click.option("--lazy/--eager", default=True, show_default=True, help="Refresh levels at query time or on every due update.")
def replay_cmd(trace_path, oracle, out, timing, lazy):
    """Replay a trace and stream CSV rows."""
    tr = _load(trace_path)
    summary = ReplaySummary()
    cfg = EstimatorConfig(n=tr.n, b=tr.b, seed=tr.seed, lazy=lazy)
    try:
        rows = replay(tr, oracle, timing=timing, config=cfg, summary=summary)
        with click.open_file(out, "w") as fh:
            write_csv(rows, fh)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    if summary.checked:
        click.echo(f"oracle rows {summary.checked}, bracket violations {summary.violations}", err=True)
    for msg in summary.hard_failures[:20]:
        click.echo(f"HARD: {msg}", err=True)
    sys.exit(1 if summary.hard_failures else 0)


@main.command()
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--oracle-every", type=int, default=1, show_default=True)
@click.option("--max-soft-rate", type=float, default=0.05, show_default=True,
              help="Fraction of oracle-checked steps allowed to fall outside the bracket.")
def audit(trace_path, oracle_every, max_soft_rate):
    """Replay a trace with every invariant checked after each step."""
    tr = _load(trace_path)
    rep = audit_trace(tr, oracle_every=oracle_every)
    for msg in rep.hard[:20]:
        click.echo(f"HARD: {msg}", err=True)
    for msg in rep.soft[:20]:
        click.echo(f"soft: {msg}", err=True)
    outside = sum(1 for m in rep.soft if "outside [" in m)
    rate = outside / rep.checked if rep.checked else 0.0
    click.echo(f"steps {rep.steps}, hard {len(rep.hard)}, soft {len(rep.soft)}, bracket miss rate {rate:.3f}")
    sys.exit(0 if rep.ok and rate <= max_soft_rate else 1)


if __name__ == "__main__":
    main()
