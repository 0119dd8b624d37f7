"""Command-line sweeps over average SNR per hop, written as CSV.

Config files are INI-style: one ``[sweep]`` section and one ``[scenario:NAME]``
section per curve.  All SNR-like values at this boundary are in dB.

Example::

    [sweep]
    snr_db_start = 0
    snr_db_stop = 30
    snr_db_step = 5
    engines = closed_form, quadrature

    [scenario:moderate]
    k1 = 3
    alpha = 2.50
    beta = 2.06
    metric = ser
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import re
import sys
import warnings
from dataclasses import dataclass, replace

from . import montecarlo, relay
from .channels import GammaGammaParams, RicianParams, RngStream
from .relay import Modulation, RelaySystem, SeriesControl, db_to_linear
from .specfun import DomainError, EvaluationError

__all__ = ["Scenario", "SweepSpec", "ConfigError", "Diagnostic", "validate_config", "run_sweep", "PRESETS", "main"]

HEADER = ("scenario", "snr_db", "engine", "metric", "value", "std_err", "n_samples", "seed")
ENGINES = ("closed_form", "quadrature", "montecarlo")

EXIT_OK, EXIT_CONFIG, EXIT_EVAL, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class Scenario:
    name: str
    k1: float
    alpha: float
    beta: float
    metric: str = "ser"
    gamma_th_db: float = 0.0
    a_coef: float = 1.0
    b_coef: float = 1.0


@dataclass(frozen=True)
class SweepSpec:
    snr_db_start: float = 0.0
    snr_db_stop: float = 30.0
    snr_db_step: float = 5.0
    balanced: bool = True
    fso_snr_db: float | None = None
    engines: tuple = ENGINES
    scenarios: tuple = ()
    c_const: float = 1.0
    samples: int = 10_000_000
    seed: int = 1
    max_terms: int = 35

    def snr_grid(self):
        count = int(math.floor((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9)) + 1
        return [round(self.snr_db_start + i * self.snr_db_step, 12) for i in range(count)]


@dataclass(frozen=True)
class Diagnostic:
    line: int | None
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}" if self.line else self.message


class ConfigError(Exception):
    def __init__(self, diagnostics, source="<config>"):
        self.diagnostics = list(diagnostics)
        self.source = source
        super().__init__("\n".join(f"{source}: {d}" for d in self.diagnostics))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

_FIG_SWEEP = dict(snr_db_start=0.0, snr_db_stop=30.0, snr_db_step=2.0)

# the fig2 second group (K1=0, 2.04, 1.10) is an assumed default; use a config file to change it
PRESETS = {
    "fig2": SweepSpec(
        **_FIG_SWEEP,
        scenarios=tuple(
            Scenario(f"{grp}_th{th}", k1, al, be, "outage", float(th))
            for grp, k1, al, be in (("g1", 3.0, 2.50, 2.06), ("g2", 0.0, 2.04, 1.10))
            for th in (0, 5)
        ),
    ),
    "fig3": SweepSpec(
        **_FIG_SWEEP,
        scenarios=(
            Scenario("k3_weaker", 3.0, 6.92, 6.52),
            Scenario("k3_weak", 3.0, 4.43, 4.39),
            Scenario("k3_moderate", 3.0, 2.50, 2.06),
            Scenario("k3_strong", 3.0, 2.04, 1.10),
            Scenario("rayleigh_strong", 0.0, 2.04, 1.10),
        ),
    ),
    "fig4": SweepSpec(
        **_FIG_SWEEP,
        scenarios=tuple(Scenario(f"k{k}", float(k), 2.50, 2.06) for k in (0, 2, 4, 6, 8)),
    ),
}


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text):
    """Map section -> header line and (section, key) -> line."""
    sections, keys = {}, {}
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, no)
            continue
        m = _KEY_RE.match(line)
        if m and current is not None and not line[:1].isspace():
            keys.setdefault((current, m.group(1).strip().lower()), no)
    return sections, keys


_SWEEP_KEYS = {
    "snr_db_start": float,
    "snr_db_stop": float,
    "snr_db_step": float,
    "balanced": "bool",
    "fso_snr_db": float,
    "engines": "engines",
    "c_const": float,
    "samples": int,
    "seed": int,
    "max_terms": int,
}
_SCENARIO_KEYS = {
    "k1": float,
    "alpha": float,
    "beta": float,
    "metric": str,
    "gamma_th_db": float,
    "a": float,
    "b": float,
}


def _parse_config_text(text, source="<config>"):
    diags = []
    parser = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.ParsingError as exc:
        raise ConfigError([Diagnostic(no, f"cannot parse {line.strip()!r}") for no, line in exc.errors], source)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([Diagnostic(exc.lineno, f"duplicate section [{exc.section}]")], source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([Diagnostic(exc.lineno, f"duplicate key {exc.option!r} in [{exc.section}]")], source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([Diagnostic(exc.lineno, "key outside of any section")], source)
    sections, keys = _line_index(text)

    def convert(section, key, raw, kind):
        line = keys.get((section, key))
        try:
            if kind == "bool":
                return parser.BOOLEAN_STATES[raw.strip().lower()]
            if kind == "engines":
                names = tuple(e.strip() for e in raw.split(",") if e.strip())
                bad = [e for e in names if e not in ENGINES]
                if bad:
                    diags.append(Diagnostic(line, f"unknown engine(s) {', '.join(bad)}; choose from {', '.join(ENGINES)}"))
                    return None
                if not names:
                    diags.append(Diagnostic(line, "engines must not be empty"))
                    return None
                return names
            if kind is int:
                val = float(raw)
                if val != int(val):
                    raise ValueError
                return int(val)
            return kind(raw.strip())
        except (KeyError, ValueError):
            diags.append(Diagnostic(line, f"{key} = {raw!r} is not a valid {getattr(kind, '__name__', kind)}"))
            return None

    sweep_args = {}
    if parser.has_section("sweep"):
        for key, raw in parser.items("sweep"):
            if key not in _SWEEP_KEYS:
                diags.append(Diagnostic(keys.get(("sweep", key)), f"unknown key {key!r} in [sweep]"))
                continue
            val = convert("sweep", key, raw, _SWEEP_KEYS[key])
            if val is not None:
                sweep_args[key] = val

    scenarios = []
    for section in parser.sections():
        if section == "sweep":
            continue
        line = sections.get(section)
        if not section.startswith("scenario:") or not section[len("scenario:") :].strip():
            diags.append(Diagnostic(line, f"unknown section [{section}]; expected [sweep] or [scenario:NAME]"))
            continue
        name = section[len("scenario:") :].strip()
        vals = {}
        for key, raw in parser.items(section):
            if key not in _SCENARIO_KEYS:
                diags.append(Diagnostic(keys.get((section, key)), f"unknown key {key!r} in [{section}]"))
                continue
            v = convert(section, key, raw, _SCENARIO_KEYS[key])
            if v is not None:
                vals[key] = v
        missing = [k for k in ("k1", "alpha", "beta") if k not in vals and (section, k) not in keys]
        if missing:
            diags.append(Diagnostic(line, f"[{section}] is missing {', '.join(missing)}"))
            continue
        if any(k not in vals for k in ("k1", "alpha", "beta")):
            continue
        sc_line = lambda k: keys.get((section, k), line)  # noqa: E731
        if not vals["alpha"] > vals["beta"]:
            diags.append(Diagnostic(sc_line("beta"), f"[{section}] alpha must exceed beta"))
        if not vals["beta"] > 0:
            diags.append(Diagnostic(sc_line("beta"), f"[{section}] beta must be positive"))
        if not vals["k1"] >= 0:
            diags.append(Diagnostic(sc_line("k1"), f"[{section}] k1 must be non-negative"))
        metric = vals.get("metric", "ser").lower()
        if metric not in ("ser", "outage"):
            diags.append(Diagnostic(sc_line("metric"), f"[{section}] metric must be 'ser' or 'outage'"))
        if metric == "outage" and "gamma_th_db" not in vals:
            diags.append(Diagnostic(line, f"[{section}] outage scenarios need gamma_th_db"))
        for coef in ("a", "b"):
            if coef in vals and not vals[coef] > 0:
                diags.append(Diagnostic(sc_line(coef), f"[{section}] {coef} must be positive"))
        scenarios.append(
            Scenario(
                name,
                vals["k1"],
                vals["alpha"],
                vals["beta"],
                metric,
                vals.get("gamma_th_db", 0.0),
                vals.get("a", 1.0),
                vals.get("b", 1.0),
            )
        )

    spec = SweepSpec(**sweep_args, scenarios=tuple(scenarios))
    sl = lambda k: keys.get(("sweep", k), sections.get("sweep"))  # noqa: E731
    if not spec.snr_db_step > 0:
        diags.append(Diagnostic(sl("snr_db_step"), "snr_db_step must be positive"))
    if not spec.snr_db_start <= spec.snr_db_stop:
        diags.append(Diagnostic(sl("snr_db_stop"), "snr_db_start must not exceed snr_db_stop"))
    if not spec.c_const > 0:
        diags.append(Diagnostic(sl("c_const"), "c_const must be positive"))
    if spec.samples < 1:
        diags.append(Diagnostic(sl("samples"), "samples must be >= 1"))
    if not 0 <= spec.seed < 2**64:
        diags.append(Diagnostic(sl("seed"), "seed must be a 64-bit non-negative integer"))
    if spec.max_terms < 1:
        diags.append(Diagnostic(sl("max_terms"), "max_terms must be >= 1"))
    if not spec.balanced and spec.fso_snr_db is None:
        diags.append(Diagnostic(sl("balanced"), "balanced = no requires fso_snr_db"))
    if not scenarios and not diags:
        diags.append(Diagnostic(None, "no [scenario:NAME] sections"))
    if len({s.name for s in scenarios}) != len(scenarios):
        diags.append(Diagnostic(None, "scenario names must be unique"))
    if diags:
        raise ConfigError(sorted(diags, key=lambda d: (d.line or 0)), source)
    return spec


def validate_config(path):
    """Parse and fully validate a sweep config file.

    Returns a :class:`SweepSpec`; raises :class:`ConfigError` carrying every
    diagnostic found (nothing is applied partially).
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return _parse_config_text(text, source=str(path))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _system(spec, sc, snr_db):
    g1 = db_to_linear(snr_db)
    g2 = g1 if spec.balanced else db_to_linear(spec.fso_snr_db)
    return RelaySystem(RicianParams(sc.k1, g1), GammaGammaParams(sc.alpha, sc.beta, g2), spec.c_const)


def _evaluate(spec, sc, snr_db, engine, stream_id):
    """Returns ``(value, std_err, n_samples, seed)`` for one cell."""
    sys_ = _system(spec, sc, snr_db)
    ctl = SeriesControl(max_outer_terms=spec.max_terms)
    mod = Modulation(sc.a_coef, sc.b_coef)
    th = db_to_linear(sc.gamma_th_db)
    if engine == "closed_form":
        if sc.metric == "outage":
            return relay.outage_closed_form(th, sys_, ctl).value, None, None, None
        return relay.aser_closed_form(mod, sys_, ctl).value, None, None, None
    if engine == "quadrature":
        if sc.metric == "outage":
            return relay.outage_quadrature(th, sys_), None, None, None
        return relay.aser_quadrature(mod, sys_), None, None, None
    rng = RngStream(spec.seed, stream_id)
    if sc.metric == "outage":
        est = montecarlo.simulate_outage(sys_, th, spec.samples, rng)
    else:
        est = montecarlo.simulate_ser(sys_, mod, spec.samples, rng)
    return est.value, est.std_err, est.n_samples, est.seed


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(int(x))


def run_sweep(spec, out, err=None):
    """Evaluate every (scenario, SNR, engine) cell and write CSV rows to
    ``out`` (a path, ``"-"`` for stdout, or a text stream).

    Rows are sorted by scenario, SNR and engine.  Returns the exit status:
    0 when every cell succeeded, 2 if any cell failed (its ``value`` is left
    empty and the reason goes to ``err``), 3 if ``out`` cannot be written.
    """
    err = sys.stderr if err is None else err
    close = False
    if isinstance(out, str):
        if out == "-":
            stream = sys.stdout
        else:
            try:
                stream = open(out, "w", newline="", encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot write {out}: {exc}", file=err)
                return EXIT_IO
            close = True
    else:
        stream = out

    rows = []
    failed = False
    grid = spec.snr_grid()
    for si, sc in enumerate(spec.scenarios):
        for gi, snr_db in enumerate(grid):
            for engine in spec.engines:
                stream_id = si * 100_000 + gi
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    try:
                        value, se, n, seed = _evaluate(spec, sc, snr_db, engine, stream_id)
                    except (EvaluationError, DomainError, ArithmeticError, ValueError) as exc:
                        failed = True
                        value = se = n = seed = None
                        print(f"error: {sc.name} @ {snr_db} dB [{engine}]: {exc}", file=err)
                for w in caught:
                    if issubclass(w.category, relay.TruncationWarning):
                        print(f"warning: {sc.name} @ {snr_db} dB [{engine}]: {w.message}", file=err)
                rows.append((sc.name, float(snr_db), engine, sc.metric, value, se, n, seed))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(HEADER)
        for r in rows:
            writer.writerow([r[0], repr(r[1]), r[2], r[3]] + [_fmt(x) for x in r[4:]])
        stream.flush()
    except OSError as exc:
        print(f"error: writing output failed: {exc}", file=err)
        return EXIT_IO
    finally:
        if close:
            stream.close()
    return EXIT_EVAL if failed else EXIT_OK


def read_csv(text_or_stream):
    """Parse sweep CSV back into dicts with numeric fields converted."""
    stream = io.StringIO(text_or_stream) if isinstance(text_or_stream, str) else text_or_stream
    reader = csv.DictReader(stream)
    out = []
    for row in reader:
        row = dict(row)
        row["snr_db"] = float(row["snr_db"])
        for key in ("value", "std_err"):
            row[key] = float(row[key]) if row[key] else None
        for key in ("n_samples", "seed"):
            row[key] = int(row[key]) if row[key] else None
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser():
    p = argparse.ArgumentParser(
        prog="rffso",
        description="Outage probability and average SER of a fixed-gain AF relay over mixed Rician RF / Gamma-Gamma FSO links.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in sweep reproducing a figure")
    src.add_argument("--config", metavar="PATH", help="sweep config file (INI style)")
    p.add_argument("--out", default="-", metavar="PATH", help="CSV destination (default: stdout)")
    p.add_argument("--engines", metavar="LIST", help="comma-separated subset of " + ",".join(ENGINES))
    p.add_argument("--samples", type=int, metavar="N", help="Monte Carlo samples per cell")
    p.add_argument("--seed", type=int, metavar="S", help="Monte Carlo seed")
    p.add_argument("--max-terms", type=int, metavar="M", help="series cap per summation index")
    p.add_argument("--check", action="store_true", help="validate the configuration and exit")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        spec = PRESETS[args.preset] if args.preset else validate_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    overrides = {}
    diags = []
    if args.engines is not None:
        names = tuple(e.strip() for e in args.engines.split(",") if e.strip())
        bad = [e for e in names if e not in ENGINES]
        if bad or not names:
            diags.append(f"--engines: choose a non-empty subset of {','.join(ENGINES)}")
        overrides["engines"] = names
    if args.samples is not None:
        if args.samples < 1:
            diags.append("--samples must be >= 1")
        overrides["samples"] = args.samples
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            diags.append("--seed must be a 64-bit non-negative integer")
        overrides["seed"] = args.seed
    if args.max_terms is not None:
        if args.max_terms < 1:
            diags.append("--max-terms must be >= 1")
        overrides["max_terms"] = args.max_terms
    if diags:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    spec = replace(spec, **overrides)
    if args.check:
        print(f"ok: {len(spec.scenarios)} scenario(s), {len(spec.snr_grid())} SNR point(s), engines {','.join(spec.engines)}")
        return EXIT_OK
    return run_sweep(spec, args.out)


if __name__ == "__main__":
    sys.exit(main())
