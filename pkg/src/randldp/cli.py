"""Command-line entry point.

Grammar::

    randldp <subcommand> [--config PATH] [--out DIR] [--seed U64] [--force] [key=value ...]

Parameter precedence, lowest first: built-in defaults, the JSON config,
explicit ``--flag`` options, then ``key=value`` overrides.  The seed comes
from ``--seed``, else the config's ``master_seed``, else the ``TOOL_SEED``
environment variable, else 0.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import artifacts
from .bounds import achievable_upper, minimax_lower, randomness_table
from .errors import RandLDPError
from .multilevel import level_params, randomness_totals, run_cascade
from .recoverability import (
    audit_database_dp,
    build_xor_rec,
    hr_construct,
    optimal_key,
    storage_savings,
    t_sample_mechanism,
)
from .simulation import (
    ROW_FIELDS,
    SUMMARY_FIELDS,
    ExperimentConfig,
    build_distribution,
    estimate_hadamard,
    evaluate_loss,
    run_experiment,
    sample_inputs,
)
from . import rng

SEED_ENV = "TOOL_SEED"
PROG = "randldp"


class UsageError(Exception):
    pass


def _split(v) -> list:
    if isinstance(v, (list, tuple)):
        return list(v)
    if isinstance(v, str):
        return [s for s in v.split(",") if s.strip() != ""]
    return [v]


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


CONVERTERS: dict[str, Callable] = {
    "int": _int,
    "float": float,
    "str": str,
    "bool": _to_bool,
    "ints": lambda v: [_int(x) for x in _split(v)],
    "floats": lambda v: [float(x) for x in _split(v)],
    "strs": lambda v: [str(x).strip() for x in _split(v)],
    "dist": lambda v: v,
}


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object
    help: str


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    params: tuple[Param, ...]
    run: Callable
    needs_out: bool = False


def _resolve(cmd: Command, ns: argparse.Namespace) -> tuple[dict, int]:
    values = {p.name: p.default for p in cmd.params}
    config = {}
    if ns.config:
        try:
            config = artifacts.read_json(ns.config)
        except (OSError, ValueError) as exc:
            raise RandLDPError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise RandLDPError("config must be a JSON object")
    known = {p.name: p for p in cmd.params}
    for key, val in config.items():
        if key == "master_seed":
            continue
        if key not in known:
            raise RandLDPError(f"unknown config key {key!r} for {cmd.name}")
        values[key] = val
    for p in cmd.params:
        flag_val = getattr(ns, "opt_" + p.name)
        if flag_val is not None:
            values[p.name] = flag_val
    seed_override = None
    for item in ns.overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {item!r}")
        if key in ("seed", "master_seed"):
            seed_override = val
            continue
        if key not in known:
            raise UsageError(f"unknown parameter {key!r} for {cmd.name}")
        values[key] = val
    for p in cmd.params:
        try:
            values[p.name] = CONVERTERS[p.kind](values[p.name])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {p.name}: {exc}") from exc
    if seed_override is not None:
        seed = seed_override
    elif ns.seed is not None:
        seed = ns.seed
    elif "master_seed" in config:
        seed = config["master_seed"]
    elif os.environ.get(SEED_ENV, "").strip():
        seed = os.environ[SEED_ENV]
    else:
        seed = 0
    try:
        seed = _int(seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad seed: {exc}") from exc
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return values, seed


def fmt(v) -> str:
    return artifacts.format_value(v)


class Outputs:
    """Collects artifacts so nothing is written before every path is cleared."""

    def __init__(self, out_dir: str | None, force: bool):
        self.dir = Path(out_dir) if out_dir else None
        self.force = force
        self.files: list[tuple[Path, str]] = []

    def csv(self, name: str, header, rows) -> None:
        self.files.append((name, artifacts.csv_text(header, rows)))

    def json(self, name: str, obj) -> None:
        self.files.append((name, artifacts.json_text(obj)))

    def flush(self) -> list[Path]:
        if self.dir is None:
            return []
        paths = [self.dir / name for name, _ in self.files]
        artifacts.check_writable(paths, self.force)
        return [artifacts.write_text(p, text, force=True) for p, (_, text) in zip(paths, self.files)]


# -- pipelines ---------------------------------------------------------------


def run_simulate(v: dict, seed: int, out: Outputs) -> None:
    cfg = ExperimentConfig.from_dict(
        {
            "k": v["k"],
            "n": v["n"] if len(v["n"]) > 1 else v["n"][0],
            "epsilons": v["epsilons"],
            "randomness_bits": v["randomness_bits"],
            "distribution": v["distribution"],
            "trials": v["trials"],
            "master_seed": seed,
            "task": v["task"],
        }
    )
    result = run_experiment(cfg, clip=v["clip"])
    suffix = "_clipped" if v["clip"] else ""
    out.csv(f"simulate{suffix}.csv", ROW_FIELDS, result.rows)
    summary = result.summary()
    out.csv(f"simulate{suffix}_summary.csv", SUMMARY_FIELDS, summary)
    doc = cfg.to_dict()
    doc["estimator"] = "clipped" if v["clip"] else "raw"
    out.json("config.json", doc)
    print(f"estimator={doc['estimator']} rows={len(result.rows)}")
    for row in summary:
        print(
            f"epsilon={fmt(row['epsilon'])} R={fmt(row['R'])} n={row['n']} "
            f"mean_l1={fmt(row['mean_loss_l1'])} mean_l2sq={fmt(row['mean_loss_l2sq'])} "
            f"mean_linf={fmt(row['mean_loss_linf'])}"
        )


BOUNDS_HEADER = ("epsilon", "R", "n", "k", "loss", "kind", "regime", "value")


def run_bounds(v: dict, seed: int, out: Outputs) -> None:
    rows = []
    for eps, R, n, k, loss in itertools.product(v["epsilon"], v["R"], v["n"], v["k"], v["loss"]):
        bounds = []
        if k % 2 == 0:
            bounds.append(minimax_lower(loss, eps, R, n, k))
        bounds.append(achievable_upper(loss, eps, R, n, k))
        for b in bounds:
            rows.append({"epsilon": eps, "R": R, "n": n, "k": k, "loss": loss, "kind": b.kind, "regime": b.regime, "value": b.value})
            name = {"lower": "minimax_lower", "upper": "achievable_upper"}[b.kind]
            print(
                f"epsilon={fmt(eps)} R={fmt(R)} n={n} k={k} loss={loss} {name}={fmt(b.value)} regime={b.regime}"
            )
        if k % 2:
            print(f"epsilon={fmt(eps)} R={fmt(R)} n={n} k={k} loss={loss} minimax_lower skipped (odd k)")
    out.csv("bounds.csv", BOUNDS_HEADER, rows)


TABLE_HEADER = ("epsilon", "k", "RAPPOR", "RR", "HR", "BH")


def run_table(v: dict, seed: int, out: Outputs) -> None:
    rows = []
    for eps, k in itertools.product(v["epsilon"], v["k"]):
        t = randomness_table(eps, k)
        rows.append({"epsilon": eps, "k": k, **t})
        print(" ".join([f"epsilon={fmt(eps)}", f"k={k}"] + [f"{name}={fmt(val)}" for name, val in t.items()]))
    out.csv("randomness_table.csv", TABLE_HEADER, rows)


def run_keygen(v: dict, seed: int, out: Outputs) -> None:
    spec = optimal_key(v["epsilon"], v["k"])
    doc = spec.to_dict()
    out.json("key.json", doc)
    print(f"k={spec.k} epsilon={fmt(spec.epsilon)} s_star={spec.s_star} entropy_bits={fmt(spec.entropy_bits)}")
    print("dist=" + ",".join(fmt(p) for p in spec.dist.probs))


TRANSCRIPT_HEADER = ("x", "u", "y", "recovered_x")


def run_recover_audit(v: dict, seed: int, out: Outputs) -> None:
    k, eps = v["k"], v["epsilon"]
    rows = []
    if v["mechanism"] == "xor":
        mech = build_xor_rec(optimal_key(eps, k).dist, eps)
        for x in range(1, k + 1):
            for u in range(1, k + 1):
                y = mech.privatize(x, u)
                rows.append({"x": x, "u": u, "y": y, "recovered_x": mech.recover(y, u)})
    elif v["mechanism"] == "hr":
        _, km = hr_construct(eps, k)
        for x in range(k):
            for u in range(km.key_size):
                y = km.apply(x, u)
                owners = np.flatnonzero(km.table[:, u] == y)
                rec = int(owners[0]) + 1 if owners.size == 1 else 0
                rows.append({"x": x + 1, "u": u + 1, "y": y + 1, "recovered_x": rec})
    else:
        raise UsageError(f"mechanism must be 'xor' or 'hr', got {v['mechanism']!r}")
    failures = sum(1 for r in rows if r["x"] != r["recovered_x"])
    out.csv("recover_transcript.csv", TRANSCRIPT_HEADER, rows)
    print(f"mechanism={v['mechanism']} k={k} epsilon={fmt(eps)} pairs={len(rows)} failures={failures}")
    if failures:
        raise RandLDPError(f"{failures} key/output pairs failed to recover their input")


def run_multilevel(v: dict, seed: int, out: Outputs) -> None:
    schedule = level_params(v["epsilons"])
    k, n = v["k"], v["n"]
    p = build_distribution(v["distribution"], k)
    xs = sample_inputs(p, n, seed, 0)
    run = run_cascade(xs, k, schedule, seed, 0)
    users = np.arange(1, n + 1)
    out.csv(
        "multilevel_outputs.csv",
        ("user_index", "group", "Y_d"),
        ({"user_index": i, "group": g + 1, "Y_d": y} for i, g, y in zip(users, run.groups, run.published)),
    )
    summary = []
    for j, eps in enumerate(schedule.epsilons, start=1):
        col = f"L_{j}"
        keys = run.keys[:, j - 1]
        out.csv(f"multilevel_keys_{j}.csv", ("user_index", col), ({"user_index": i, col: b} for i, b in zip(users, keys)))
        view = np.bitwise_xor(run.published, keys)
        est = estimate_hadamard(view, run.groups, eps, 1.0, k)
        summary.append(
            {
                "level": j,
                "epsilon": eps,
                "z": schedule.z[j - 1],
                "q": schedule.q[j - 1],
                "loss_l1": evaluate_loss("l1", est, p.probs),
                "loss_l2sq": evaluate_loss("l2sq", est, p.probs),
            }
        )
    proposed, trivial = randomness_totals(schedule)
    out.csv("multilevel_summary.csv", ("level", "epsilon", "z", "q", "loss_l1", "loss_l2sq"), summary)
    out.json(
        "multilevel_randomness.json",
        {"epsilons": list(schedule.epsilons), "q": list(schedule.q), "proposed_bits": proposed, "trivial_bits": trivial},
    )
    print(f"levels={schedule.depth} users={n} proposed_bits={fmt(proposed)} trivial_bits={fmt(trivial)}")
    for row in summary:
        print(f"level={row['level']} epsilon={fmt(row['epsilon'])} q={fmt(row['q'])} l1={fmt(row['loss_l1'])}")


def run_tsample(v: dict, seed: int, out: Outputs) -> None:
    eps, k, T = v["epsilon"], v["k"], v["T"]
    mech = t_sample_mechanism(eps, k, T)
    audit = audit_database_dp(mech)
    single = optimal_key(eps, k).entropy_bits
    doc = {"k": k, "T": T, "epsilon": eps, "audit_epsilon": audit, "key_entropy_bits": mech.key_entropy(), "single_key_entropy_bits": single}
    rows = []
    cdf = np.cumsum(mech.factors[0].key_dist.probs)
    draws = rng.uniforms(seed, v["records"] * T * 2, rng.KEYS).reshape(v["records"], T, 2)
    for r in range(v["records"]):
        xs = tuple(int(d * k) + 1 for d in draws[r, :, 0])
        us = tuple(int(min(np.searchsorted(cdf, d, side="right"), k - 1)) + 1 for d in draws[r, :, 1])
        ys = mech.privatize(xs, us)
        rec = mech.recover(ys, us)
        for t in range(T):
            rows.append({"record": r + 1, "t": t + 1, "x": xs[t], "u": us[t], "y": ys[t], "recovered_x": rec[t]})
    out.json("tsample.json", doc)
    out.csv("tsample_transcript.csv", ("record", "t", "x", "u", "y", "recovered_x"), rows)
    print(
        f"k={k} T={T} epsilon={fmt(eps)} audit_epsilon={fmt(audit)} key_entropy_bits={fmt(mech.key_entropy())} "
        f"T_times_single={fmt(T * single)}"
    )


def run_storage(v: dict, seed: int, out: Outputs) -> None:
    rows = []
    for eps, k in itertools.product(v["epsilon"], v["k"]):
        key_bits, input_bits, gain = storage_savings(eps, k)
        rows.append({"epsilon": eps, "k": k, "key_bits": key_bits, "input_bits": input_bits, "gain": gain})
        print(
            f"epsilon={fmt(eps)} k={k} key_bits={fmt(key_bits)} input_bits={fmt(input_bits)} "
            f"gain={fmt(gain)} ({100 * gain:.1f}%)"
        )
    out.csv("storage.csv", ("epsilon", "k", "key_bits", "input_bits", "gain"), rows)


COMMANDS = {
    c.name: c
    for c in [
        Command(
            "simulate",
            "Monte-Carlo distribution estimation with the binary Hadamard scheme.",
            (
                Param("k", "int", 100, "input alphabet size"),
                Param("n", "ints", [10000], "number of users (comma list for a sweep)"),
                Param("epsilons", "floats", [1.0], "privacy levels"),
                Param("randomness_bits", "floats", [1.0], "randomness budgets R in bits"),
                Param("distribution", "dist", "geometric(0.8)", "uniform | geometric(L) | point_mass(J)"),
                Param("trials", "int", 20, "repetitions per grid cell"),
                Param("task", "str", "distribution", "distribution | heavy_hitter"),
                Param("clip", "bool", False, "clip estimates to the simplex (labelled in output)"),
            ),
            run_simulate,
            needs_out=True,
        ),
        Command(
            "bounds",
            "Minimax lower and achievable upper risk bounds.",
            (
                Param("epsilon", "floats", [1.0], "privacy levels"),
                Param("R", "floats", [1.0], "randomness budgets in bits"),
                Param("n", "ints", [1000], "number of users"),
                Param("k", "ints", [10], "alphabet sizes"),
                Param("loss", "strs", ["l2sq", "l1"], "losses: l2sq, l1"),
            ),
            run_bounds,
        ),
        Command(
            "table",
            "Randomness per user for RAPPOR, RR, HR and binary Hadamard.",
            (
                Param("epsilon", "floats", [1.0], "privacy levels"),
                Param("k", "ints", [1000], "alphabet sizes"),
            ),
            run_table,
        ),
        Command(
            "keygen",
            "Minimum-entropy recoverable key distribution.",
            (Param("epsilon", "float", 1.0, "privacy level"), Param("k", "int", 10, "alphabet size")),
            run_keygen,
        ),
        Command(
            "recover-audit",
            "Exhaustive recoverability transcript for a keyed mechanism.",
            (
                Param("epsilon", "float", 1.0, "privacy level"),
                Param("k", "int", 4, "alphabet size"),
                Param("mechanism", "str", "xor", "xor | hr"),
            ),
            run_recover_audit,
        ),
        Command(
            "multilevel",
            "Cascaded mechanism for several analysts with per-analyst keys.",
            (
                Param("epsilons", "floats", [1.0, 0.5], "strictly decreasing privacy levels"),
                Param("k", "int", 16, "alphabet size"),
                Param("n", "int", 1000, "number of users"),
                Param("distribution", "dist", "geometric(0.8)", "input distribution"),
            ),
            run_multilevel,
            needs_out=True,
        ),
        Command(
            "tsample",
            "Recoverable mechanism for databases of T samples, with a DP audit.",
            (
                Param("epsilon", "float", 1.0, "privacy level"),
                Param("k", "int", 3, "alphabet size"),
                Param("T", "int", 2, "samples per database"),
                Param("records", "int", 5, "random databases to privatize in the transcript"),
            ),
            run_tsample,
        ),
        Command(
            "storage",
            "Storage saved by keeping the key instead of the input.",
            (Param("epsilon", "floats", [5.0], "privacy levels"), Param("k", "ints", [2, 4, 10], "alphabet sizes")),
            run_storage,
        ),
    ]
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Randomness-constrained local differential privacy toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")
    sub.required = True
    for cmd in COMMANDS.values():
        sp = sub.add_parser(cmd.name, help=cmd.help, description=cmd.help)
        sp.add_argument("--config", metavar="PATH", help="JSON file with parameter values")
        sp.add_argument("--out", metavar="DIR", help="directory for artifacts" + (" (required)" if cmd.needs_out else ""))
        sp.add_argument("--seed", metavar="U64", help=f"master seed (default: config, then ${SEED_ENV}, then 0)")
        sp.add_argument("--force", action="store_true", help="overwrite existing artifacts")
        for p in cmd.params:
            default = ",".join(map(str, p.default)) if isinstance(p.default, list) else p.default
            sp.add_argument(f"--{p.name}", dest="opt_" + p.name, metavar=p.kind.upper(), help=f"{p.help} (default: {default})")
        sp.add_argument("overrides", nargs="*", metavar="key=value", help="parameter overrides")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cmd = COMMANDS[ns.command]
    try:
        values, seed = _resolve(cmd, ns)
        if cmd.needs_out and not ns.out:
            raise UsageError(f"{cmd.name} writes artifacts and needs --out DIR")
    except UsageError as exc:
        print(f"{PROG} {cmd.name}: error: {exc}", file=sys.stderr)
        return 2
    except RandLDPError as exc:
        print(f"{PROG} {cmd.name}: error: {exc}", file=sys.stderr)
        return 1
    out = Outputs(ns.out, ns.force)
    try:
        cmd.run(values, seed, out)
        for path in out.flush():
            print(f"wrote {path}")
    except UsageError as exc:
        print(f"{PROG} {cmd.name}: error: {exc}", file=sys.stderr)
        return 2
    except (RandLDPError, OSError, np.linalg.LinAlgError) as exc:
        print(f"{PROG} {cmd.name}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
