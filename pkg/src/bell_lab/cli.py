"""Command-line surface: config-driven batch runs with frozen output schemas.

Config files are flat ``key = value`` text with dotted sections, angles in
degrees, and a strict schema: unknown or duplicate keys fail loudly with the
key and line named, because a silently ignored misspelling in a
correctness-critical tool is worse than an error.

Exit codes are fixed and scriptable:

* 0 — success (a bound VIOLATION verdict is a result, not an error)
* 2 — config parse/validation error
* 3 — model error or failed premise (e.g. anticorrelation pilot)
* 4 — table precondition (lambda-keyed reordering of a continuous source)
* 5 — enumeration size guard
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

from . import __version__, rng
from .core import Setting, SettingQuad, chsh_pairs
from .errors import (
    AnticorrelationViolated,
    BellLabError,
    ConfigError,
    ContinuousLambdaUnorderable,
    InsufficientData,
    InvalidSpec,
    TooLarge,
    UnknownSetting,
)
from .models import (
    DiscreteSource,
    ModelKind,
    ModelSpec,
    UniformAngleSource,
)
from .oracle import (
    enumerate_deterministic_strategies,
    exact_chsh,
    finite_model_from_json_obj,
    singlet_chsh,
    singlet_correlation,
)
from .simulate import (
    TrialLog,
    bell_statistic,
    chsh_statistic,
    estimate_correlations,
    resolve_threads,
    run_experiment,
    run_pairs,
)
from .tables import (
    KeyMode,
    Sum,
    build_reordered_table,
    lln_balance_check,
    render_table,
    row_sums,
    table_to_json_obj,
)

CHSH_LOCAL_BOUND = 2.0
SIGMA_BAND = 4.0

_KIND_BY_NAME = {k.value: k for k in ModelKind}

_CONFIG_KEYS = frozenset(
    {
        "model.kind",
        "model.source.kind",
        "model.source.size",
        "model.source.weights",
        "model.epsilon",
        "quad.a_deg",
        "quad.b_deg",
        "quad.c_deg",
        "quad.d_deg",
        "n_trials",
        "seed",
        "outputs.trial_log",
        "outputs.report",
        "outputs.table",
    }
)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    quad_deg: tuple[float, float, float, float]
    n_trials: int
    seed: int
    outputs: dict[str, str] = field(default_factory=dict)

    @property
    def quad(self) -> SettingQuad:
        return SettingQuad.from_degrees(*self.quad_deg)


# --- Config parsing -----------------------------------------------------------


def _split_entries(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key not in _CONFIG_KEYS:
            raise ConfigError("unknown config key", key=key, line=lineno)
        if key in entries:
            raise ConfigError("duplicate config key", key=key, line=lineno)
        if not value:
            raise ConfigError("empty value", key=key, line=lineno)
        entries[key] = (value, lineno)
    return entries


class _Entries:
    def __init__(self, entries: dict[str, tuple[str, int]]):
        self._entries = dict(entries)
        self._consumed: set[str] = set()

    def take(self, key: str) -> tuple[str, int] | None:
        self._consumed.add(key)
        return self._entries.get(key)

    def require(self, key: str) -> tuple[str, int]:
        got = self.take(key)
        if got is None:
            raise ConfigError("missing required key", key=key)
        return got

    def forbid(self, key: str, why: str) -> None:
        got = self._entries.get(key)
        self._consumed.add(key)
        if got is not None:
            raise ConfigError(why, key=key, line=got[1])


def _as_int(key: str, raw: tuple[str, int]) -> int:
    value, lineno = raw
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", key=key, line=lineno) from None


def _as_float(key: str, raw: tuple[str, int]) -> float:
    value, lineno = raw
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", key=key, line=lineno) from None
    if not math.isfinite(out):
        raise ConfigError(f"expected a finite number, got {value!r}", key=key, line=lineno)
    return out


def _as_float_list(key: str, raw: tuple[str, int]) -> tuple[float, ...]:
    value, lineno = raw
    parts = value.replace(",", " ").split()
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {value!r}", key=key, line=lineno) from None


def parse_config_text(text: str) -> ExperimentConfig:
    entries = _Entries(_split_entries(text))

    kind_raw = entries.require("model.kind")
    kind = _KIND_BY_NAME.get(kind_raw[0])
    if kind is None:
        raise ConfigError(
            f"unknown model kind {kind_raw[0]!r}; expected one of {sorted(_KIND_BY_NAME)}",
            key="model.kind",
            line=kind_raw[1],
        )

    source_kind_raw = entries.take("model.source.kind")
    source_kind = source_kind_raw[0] if source_kind_raw else "uniform_angle"
    if source_kind == "uniform_angle":
        entries.forbid("model.source.size", "only valid for a discrete source")
        entries.forbid("model.source.weights", "only valid for a discrete source")
        source = UniformAngleSource()
    elif source_kind == "discrete":
        size_raw = entries.take("model.source.size")
        weights_raw = entries.take("model.source.weights")
        if (size_raw is None) == (weights_raw is None):
            raise ConfigError(
                "a discrete source needs exactly one of model.source.size or model.source.weights",
                key="model.source.kind",
            )
        try:
            if size_raw is not None:
                source = DiscreteSource.uniform(_as_int("model.source.size", size_raw))
            else:
                source = DiscreteSource(_as_float_list("model.source.weights", weights_raw))
        except InvalidSpec as exc:
            key = "model.source.size" if size_raw is not None else "model.source.weights"
            raise ConfigError(str(exc), key=key) from None
    else:
        raise ConfigError(
            f"unknown source kind {source_kind!r}; expected 'uniform_angle' or 'discrete'",
            key="model.source.kind",
            line=source_kind_raw[1] if source_kind_raw else None,
        )

    epsilon_raw = entries.take("model.epsilon")
    if kind is ModelKind.FACTORIZABLE_INSTRUMENT:
        epsilon = _as_float("model.epsilon", epsilon_raw) if epsilon_raw else 0.0
    else:
        if epsilon_raw is not None:
            raise ConfigError(
                "only valid for model.kind = factorizable_instrument",
                key="model.epsilon",
                line=epsilon_raw[1],
            )
        epsilon = 0.0

    try:
        model = ModelSpec(kind, source, epsilon=epsilon)
    except InvalidSpec as exc:
        raise ConfigError(str(exc), key="model.kind") from None

    quad_deg = tuple(_as_float(k, entries.require(k)) for k in ("quad.a_deg", "quad.b_deg", "quad.c_deg", "quad.d_deg"))

    n_raw = entries.require("n_trials")
    n_trials = _as_int("n_trials", n_raw)
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}", key="n_trials", line=n_raw[1])

    seed_raw = entries.require("seed")
    seed = _as_int("seed", seed_raw)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits", key="seed", line=seed_raw[1])

    outputs = {}
    for name in ("trial_log", "report", "table"):
        got = entries.take(f"outputs.{name}")
        if got is not None:
            outputs[name] = got[0]

    return ExperimentConfig(
        model=model, quad_deg=quad_deg, n_trials=n_trials, seed=seed, outputs=outputs
    )


def parse_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config_text(text)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical config text; parse(serialize(parse(x))) is a fixed point."""
    lines = [f"model.kind = {cfg.model.kind.value}"]
    if isinstance(cfg.model.source, DiscreteSource):
        lines.append("model.source.kind = discrete")
        lines.append("model.source.weights = " + " ".join(repr(w) for w in cfg.model.source.weights))
    else:
        lines.append("model.source.kind = uniform_angle")
    if cfg.model.kind is ModelKind.FACTORIZABLE_INSTRUMENT:
        lines.append(f"model.epsilon = {cfg.model.epsilon!r}")
    for name, value in zip(("a", "b", "c", "d"), cfg.quad_deg):
        lines.append(f"quad.{name}_deg = {value!r}")
    lines.append(f"n_trials = {cfg.n_trials}")
    lines.append(f"seed = {cfg.seed}")
    for name in sorted(cfg.outputs):
        lines.append(f"outputs.{name} = {cfg.outputs[name]}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: ExperimentConfig) -> str:
    return "sha256:" + hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


# --- Shared report plumbing ---------------------------------------------------


def _model_json(model: ModelSpec) -> dict:
    source: dict = {"kind": "uniform_angle"}
    if isinstance(model.source, DiscreteSource):
        source = {"kind": "discrete", "weights": list(model.source.weights)}
    out = {"kind": model.kind.value, "source": source}
    if model.kind is ModelKind.FACTORIZABLE_INSTRUMENT:
        out["epsilon"] = model.epsilon
    return out


def _report_header(cfg: ExperimentConfig) -> dict:
    return {
        "tool": "bell-lab",
        "version": __version__,
        "config_digest": config_digest(cfg),
        "seed": cfg.seed,
        "n_trials": cfg.n_trials,
        "model": _model_json(cfg.model),
        "quad_deg": list(cfg.quad_deg),
    }


def _estimates_json(cfg: ExperimentConfig, estimates) -> list[dict]:
    pairs = chsh_pairs(cfg.quad)
    out = []
    for est, (s1, s2, sign) in zip(estimates, pairs):
        out.append(
            {
                "pair_id": est.pair_id,
                "sign": sign,
                "setting_1_deg": s1.degrees,
                "setting_2_deg": s2.degrees,
                "mean": est.mean,
                "std_error": est.std_error,
                "count": est.count,
            }
        )
    return out


def _write_json(path: str, obj: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_output(cfg: ExperimentConfig, out_dir: str | None, name: str, default: str | None) -> str | None:
    """Config path wins (joined under --out if relative); --out alone uses defaults."""
    configured = cfg.outputs.get(name)
    if configured is not None:
        if out_dir is not None and not os.path.isabs(configured):
            return os.path.join(out_dir, configured)
        return configured
    if out_dir is not None and default is not None:
        return os.path.join(out_dir, default)
    return None


# --- simulate ------------------------------------------------------------------


def _sweep_rows(cfg: ExperimentConfig, threads: int) -> list[tuple[float, float, float, float, float]]:
    """Angle-vs-correlation plot data: MC estimate plus both references."""
    n = min(cfg.n_trials, 50_000)
    rows = []
    for k, angle_deg in enumerate(range(0, 181, 5)):
        theta = math.radians(angle_deg)
        pair = (Setting(0.0), Setting(theta))
        sweep_seed = int(rng.hash_words(cfg.seed, "sweep", k))
        log = run_pairs(cfg.model, [pair], n, sweep_seed, threads=threads)
        est = estimate_correlations(log)[0]
        classical = -1.0 + 2.0 * theta / math.pi
        rows.append((float(angle_deg), est.mean, est.std_error, classical, -math.cos(theta)))
    return rows


def _write_sweep_csv(path: str, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("angle_deg,mc_mean,mc_std_error,classical_closed_form,singlet_reference\n")
        for r in rows:
            fh.write(",".join(repr(v) for v in r) + "\n")


def _write_convergence_csv(path: str, log: TrialLog, flags: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    ns = []
    n = 16
    while n < len(log):
        ns.append(n)
        n *= 2
    ns.append(len(log))
    with open(path, "w", newline="") as fh:
        fh.write("n_trials,chsh_value,chsh_std_error\n")
        for n in ns:
            head = _prefix_log(log, n)
            try:
                stat = chsh_statistic(estimate_correlations(head), flags)
            except InsufficientData:
                continue
            fh.write(f"{n},{stat.value!r},{stat.std_error!r}\n")


def _prefix_log(log: TrialLog, n: int) -> TrialLog:
    return TrialLog(
        t=log.t[:n],
        pair_id=log.pair_id[:n],
        setting_1=log.setting_1[:n],
        setting_2=log.setting_2[:n],
        lam=log.lam[:n],
        ip_1=log.ip_1[:n],
        ip_2=log.ip_2[:n],
        a=log.a[:n],
        b=log.b[:n],
        lambda_kind=log.lambda_kind,
        n_pairs=log.n_pairs,
        source_size=log.source_size,
        meta=log.meta,
    )


def cmd_simulate(args) -> int:
    cfg = parse_config_file(args.config)
    threads = resolve_threads(args.threads)
    log = run_experiment(cfg.model, cfg.quad, cfg.n_trials, cfg.seed, threads=threads)
    estimates = estimate_correlations(log)
    stat = chsh_statistic(estimates, cfg.model.flags)

    report = _report_header(cfg)
    report["schema"] = "bell-lab.report.v1"
    report["estimates"] = _estimates_json(cfg, estimates)
    report["chsh"] = {"value": stat.value, "std_error": stat.std_error, "flags": stat.flags}

    print(f"bell-lab simulate: {cfg.model.kind.value}, n_trials={cfg.n_trials}, seed={cfg.seed}")
    for e in report["estimates"]:
        print(
            f"  pair {e['pair_id']} ({e['setting_1_deg']:g}, {e['setting_2_deg']:g}) deg, sign {e['sign']:+d}: "
            f"E = {e['mean']:+.6f} +/- {e['std_error']:.6f}  (n={e['count']})"
        )
    print(f"  four-term statistic = {stat.value:+.6f} +/- {stat.std_error:.6f}")
    if stat.flags.get("setting_dependent_distribution"):
        print("  flag: setting_dependent_distribution = true")

    report_path = _resolve_output(cfg, args.out, "report", "report.json")
    if report_path:
        _write_json(report_path, report)
        print(f"  report -> {report_path}")
    log_path = _resolve_output(cfg, args.out, "trial_log", None)
    if log_path:
        os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
        log.to_csv(log_path)
        print(f"  trial log -> {log_path}")
    if args.sweep:
        _write_sweep_csv(args.sweep, _sweep_rows(cfg, threads))
        print(f"  correlation sweep -> {args.sweep}")
    if args.convergence:
        _write_convergence_csv(args.convergence, log, cfg.model.flags)
        print(f"  convergence data -> {args.convergence}")
    return 0


# --- check ----------------------------------------------------------------------


def _verdict_line(name: str, ok: bool, detail: str) -> str:
    return f"  {name}: {'PASS' if ok else 'VIOLATION'} ({detail})"


def cmd_check(args) -> int:
    cfg = parse_config_file(args.config)
    threads = resolve_threads(args.threads)
    report = _report_header(cfg)
    report["schema"] = "bell-lab.check.v1"
    quad = cfg.quad

    print(f"bell-lab check: {'quantum reference' if args.quantum_reference else cfg.model.kind.value}")

    if args.quantum_reference:
        # Exact singlet reference: no sampling, zero standard error.
        pairs = chsh_pairs(quad)
        chsh_value = singlet_chsh(quad)
        chsh_se = 0.0
        report["estimates"] = [
            {
                "pair_id": i,
                "sign": sign,
                "setting_1_deg": s1.degrees,
                "setting_2_deg": s2.degrees,
                "mean": singlet_correlation(s1, s2),
                "std_error": 0.0,
                "count": 0,
            }
            for i, (s1, s2, sign) in enumerate(pairs)
        ]
        e_ab = singlet_correlation(quad.a, quad.b)
        e_ac = singlet_correlation(quad.a, quad.c)
        e_bc = singlet_correlation(quad.b, quad.c)
        lhs, rhs, bell_se = abs(e_ab - e_ac), 1.0 + e_bc, 0.0
        flags = {"setting_dependent_distribution": False}
    else:
        log = run_experiment(cfg.model, quad, cfg.n_trials, cfg.seed, threads=threads)
        estimates = estimate_correlations(log)
        stat = chsh_statistic(estimates, cfg.model.flags)
        chsh_value, chsh_se, flags = stat.value, stat.std_error, stat.flags
        report["estimates"] = _estimates_json(cfg, estimates)
        bell = bell_statistic(cfg.model, quad.a, quad.b, quad.c, cfg.n_trials, cfg.seed, threads=threads)
        lhs, rhs, bell_se = bell.lhs, bell.rhs, bell.std_error

    margin = rhs - lhs
    bell_ok = margin >= -SIGMA_BAND * bell_se
    chsh_excess = chsh_value - CHSH_LOCAL_BOUND
    chsh_ok = chsh_excess <= SIGMA_BAND * chsh_se

    def sigmas(x: float, se: float) -> str:
        if se == 0.0:
            return "exact"
        return f"{x / se:+.2f} sigma"

    print(
        _verdict_line(
            "three-setting inequality",
            bell_ok,
            f"lhs={lhs:.6f} rhs={rhs:.6f} margin={margin:+.6f}, {sigmas(margin, bell_se)}",
        )
    )
    print(
        _verdict_line(
            "four-term bound <= 2",
            chsh_ok,
            f"value={chsh_value:+.6f} excess={chsh_excess:+.6f}, {sigmas(chsh_excess, chsh_se)}",
        )
    )

    report["bell"] = {
        "settings_deg": [quad.a.degrees, quad.b.degrees, quad.c.degrees],
        "lhs": lhs,
        "rhs": rhs,
        "margin": margin,
        "std_error": bell_se,
        "verdict": "PASS" if bell_ok else "VIOLATION",
    }
    report["chsh"] = {
        "value": chsh_value,
        "std_error": chsh_se,
        "bound": CHSH_LOCAL_BOUND,
        "flags": flags,
        "verdict": "PASS" if chsh_ok else "VIOLATION",
    }
    report_path = _resolve_output(cfg, args.out, "report", "check.json")
    if report_path:
        _write_json(report_path, report)
        print(f"  report -> {report_path}")
    return 0


# --- tables ----------------------------------------------------------------------


def cmd_tables(args) -> int:
    cfg = parse_config_file(args.config)
    threads = resolve_threads(args.threads)
    key_mode = KeyMode(args.key_mode)
    log = run_experiment(cfg.model, cfg.quad, cfg.n_trials, cfg.seed, threads=threads)
    table = build_reordered_table(log, key_mode)
    sums = row_sums(table)

    histogram: dict[int, int] = {}
    undefined = 0
    for s in sums:
        if isinstance(s, Sum):
            histogram[s.value] = histogram.get(s.value, 0) + 1
        else:
            undefined += 1

    leftover_fraction = table.leftover_trials / table.n_trials if table.n_trials else 0.0
    print(f"bell-lab tables: key mode {key_mode.value}")
    print(render_table(table, max_rows=args.max_rows))
    print(f"  leftover fraction: {leftover_fraction:.4f}")
    if undefined:
        print(f"  undefined row sums: {undefined} (rows with counterfactual cells)")
    if histogram:
        hist_txt = ", ".join(f"{k:+d}: {v}" for k, v in sorted(histogram.items()))
        print(f"  row-sum histogram: {hist_txt}")

    lln_json = None
    if log.lambda_kind == "discrete":
        balance = lln_balance_check(log)
        print(f"  balance check: max |z| = {balance.max_abs_z:.3f} over {len(balance.per_key_pair_counts)} lambda values")
        lln_json = {
            "max_abs_z": balance.max_abs_z,
            "per_key_pair_counts": {str(k): list(v) for k, v in balance.per_key_pair_counts.items()},
        }
    else:
        print("  balance check: skipped (continuous lambda never repeats)")

    table_path = _resolve_output(cfg, args.out, "table", "table.json")
    if table_path:
        obj = _report_header(cfg)
        obj["schema"] = "bell-lab.table-report.v1"
        obj["table"] = table_to_json_obj(table)
        obj["row_sum_histogram"] = {str(k): v for k, v in sorted(histogram.items())}
        obj["undefined_row_sums"] = undefined
        obj["leftover_fraction"] = leftover_fraction
        obj["lln_balance"] = lln_json
        _write_json(table_path, obj)
        print(f"  table -> {table_path}")
    return 0


# --- oracle ----------------------------------------------------------------------


def _digest_inputs(obj) -> str:
    return "sha256:" + hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()


def _emit_certificate(args, record: dict) -> None:
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text)
    if args.out:
        path = os.path.join(args.out, f"oracle-{record['operation']}.json")
        _write_json(path, record)


def cmd_oracle(args) -> int:
    if args.oracle_op == "enumerate":
        result = enumerate_deterministic_strategies(args.settings1, args.settings2, args.m)
        record = {
            "operation": "enumerate",
            "inputs_digest": _digest_inputs(
                {"n_settings_1": args.settings1, "n_settings_2": args.settings2, "m": args.m}
            ),
            "value": result.max_abs_chsh,
            "certificate": {
                "total_strategies": result.total_strategies,
                "per_lambda_max": list(result.per_lambda_max),
                "argmax_a": result.a_table.tolist(),
                "argmax_b": result.b_table.tolist(),
            },
        }
        _emit_certificate(args, record)
        return 0

    quad_deg = args.quad_deg
    quad = SettingQuad.from_degrees(*quad_deg)
    if args.oracle_op == "quantum":
        value = singlet_chsh(quad)
        record = {
            "operation": "quantum",
            "inputs_digest": _digest_inputs({"quad_deg": quad_deg}),
            "value": value,
            "certificate": {
                "per_pair": [
                    {"setting_1_deg": s1.degrees, "setting_2_deg": s2.degrees, "sign": sign,
                     "correlation": singlet_correlation(s1, s2)}
                    for s1, s2, sign in chsh_pairs(quad)
                ],
            },
        }
        _emit_certificate(args, record)
        return 0

    # exact
    with open(args.model) as fh:
        fm = finite_model_from_json_obj(json.load(fh))
    overrides = None
    if args.per_pair:
        overrides = []
        for path in args.per_pair:
            with open(path) as fh:
                overrides.append(finite_model_from_json_obj(json.load(fh)))
    value = exact_chsh(fm, quad, per_pair_distributions=overrides)
    record = {
        "operation": "exact",
        "inputs_digest": _digest_inputs({"model": args.model, "per_pair": args.per_pair, "quad_deg": quad_deg}),
        "value": value,
        "certificate": {"m": fm.m, "per_pair_overrides": bool(overrides)},
    }
    _emit_certificate(args, record)
    return 0


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bell-lab",
        description="Simulation and verification laboratory for two-station correlation experiments",
    )
    parser.add_argument("--version", action="version", version=f"bell-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=None, help="directory for output files")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: BELL_LAB_THREADS or 1)")

    p_sim = sub.add_parser("simulate", help="run an experiment and report per-pair correlations")
    add_common(p_sim)
    p_sim.add_argument("--sweep", default=None, help="write angle-vs-correlation CSV plot data here")
    p_sim.add_argument("--convergence", default=None, help="write statistic-vs-N CSV plot data here")
    p_sim.set_defaults(func=cmd_simulate)

    p_check = sub.add_parser("check", help="evaluate the inequality verdicts")
    add_common(p_check)
    p_check.add_argument(
        "--quantum-reference",
        action="store_true",
        help="use the exact singlet reference correlation instead of simulating",
    )
    p_check.set_defaults(func=cmd_check)

    p_tab = sub.add_parser("tables", help="build the reordered outcome table")
    add_common(p_tab)
    p_tab.add_argument(
        "--key-mode",
        choices=[m.value for m in KeyMode],
        default=KeyMode.LAMBDA_ONLY.value,
        help="row key: lambda (reordering) or lambda-time (the obstruction)",
    )
    p_tab.add_argument("--max-rows", type=int, default=24, help="rows to print in the text view")
    p_tab.set_defaults(func=cmd_tables)

    p_orc = sub.add_parser("oracle", help="exact finite-space computations")
    add_common(p_orc, needs_config=False)
    orc_sub = p_orc.add_subparsers(dest="oracle_op", required=True)

    p_enum = orc_sub.add_parser("enumerate", help="exhaustive deterministic-strategy maximum")
    p_enum.add_argument("--m", type=int, required=True, help="lambda space size")
    p_enum.add_argument("--settings1", type=int, default=2)
    p_enum.add_argument("--settings2", type=int, default=2)
    add_common(p_enum, needs_config=False)
    p_enum.set_defaults(func=cmd_oracle)

    p_exact = orc_sub.add_parser("exact", help="exact statistic of a finite model")
    p_exact.add_argument("--model", required=True, help="finite-model JSON file")
    p_exact.add_argument("--quad-deg", type=float, nargs=4, required=True, metavar=("A", "B", "C", "D"))
    p_exact.add_argument("--per-pair", nargs=4, default=None, metavar=("M0", "M1", "M2", "M3"),
                         help="per-column finite-model JSON overrides")
    add_common(p_exact, needs_config=False)
    p_exact.set_defaults(func=cmd_oracle)

    p_quant = orc_sub.add_parser("quantum", help="singlet reference statistic")
    p_quant.add_argument("--quad-deg", type=float, nargs=4, required=True, metavar=("A", "B", "C", "D"))
    add_common(p_quant, needs_config=False)
    p_quant.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AnticorrelationViolated as exc:
        print(
            f"model error: {exc}\n"
            "(the three-setting inequality is derived assuming perfect anticorrelation; "
            "a model that violates it at equal settings has no such statistic)",
            file=sys.stderr,
        )
        return 3
    except (InvalidSpec, InsufficientData, UnknownSetting) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except ContinuousLambdaUnorderable as exc:
        print(f"table precondition failed: {exc}", file=sys.stderr)
        return 4
    except TooLarge as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return 5
    except BellLabError as exc:  # any future subtype: treat as model error
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
