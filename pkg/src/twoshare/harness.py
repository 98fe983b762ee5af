"""Experiment driver: sweep blocklengths, check every claimed bound.

A run takes a config (source, scheme, slack schedule, blocklengths, mode,
seed), evaluates one record per blocklength, and attaches a tri-state
verdict (holds / violated / not_applicable) to each of five bound checks:

  rate      share rates inside the claimed window around H(S) + ell
  exp       attack exponents above the direct guarantee and below the
            converse ceiling
  logsum    I(X;Y) >= -h(alpha) - (1-alpha) log2 beta
  fano      (1/n) H(S^n|XY) <= (1/n) h(P_e) + P_e log2 |S|
  sandwich  per-symbol I(X;Y) inside the blockwise window, or equal to
            log2(M) - H(S) for the symbolwise scheme

Exact mode computes error and attack probabilities exhaustively; Monte
Carlo mode estimates them by sampling while alpha and beta stay exact.
Verdicts that lean on an estimate widen it by its 95% half-width so that
sampling noise cannot manufacture a violation.  Records
are deterministic given the seed: every sampling task draws from a
substream keyed by (blocklength index, task), independent of execution
order, so reports are byte-identical across runs.

Report formats: CSV with a fixed column set (floats at 12 significant
digits) and JSON lines carrying every field plus metadata.  See
docs/config-schema.md for the config file format.
"""
from __future__ import annotations

import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

from . import attack as atk
from . import block, symbol
from .prob import PMF, RandomStream, entropy
from .typical import EmptyTypicalSetError, GammaSchedule, build_index
from .prob import CapExceededError

HOLDS = "holds"
VIOLATED = "violated"
NOT_APPLICABLE = "not_applicable"

VERDICT_KEYS = ("rate", "exp", "logsum", "fano", "sandwich")

CSV_COLUMNS = ("n", "gamma_n", "rate_x", "rate_y", "rate_u", "p_e", "p_x",
               "p_y", "i_sx", "i_sy", "i_xy_per_symbol", "exp_x", "exp_y",
               "v_rate", "v_exp", "v_logsum", "v_fano", "v_sandwich")

BOUND_TOL = 1e-9


class ConfigError(Exception):
    """The experiment configuration is malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    source: tuple[float, ...]
    scheme_kind: str                 # "blockwise" | "symbolwise"
    n_values: tuple[int, ...]
    seed: int
    mode: str = "exact"              # "exact" | "mc"
    trials: int = 100_000
    ell: float | None = None         # blockwise only
    share_size: int | None = None    # symbolwise only
    schedule_kind: str = "power_law"
    schedule_param: float = 1.0 / 3.0

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            raw_source = raw["source"]
            if isinstance(raw_source, str):
                source = tuple(float(p) for p in
                               PMF.from_text(raw_source).probs)
            else:
                source = tuple(float(p) for p in raw_source)
            scheme = raw["scheme"]
            kind = scheme["kind"]
            sched = raw.get("schedule", {"kind": "power_law", "a": 1.0 / 3.0})
            n_values = tuple(int(n) for n in raw["n_values"])
            seed = int(raw.get("seed", 0))
            mode = raw.get("mode", "exact")
            trials = int(raw.get("trials", 100_000))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc!r}") from exc
        if kind == "blockwise":
            if "ell" not in scheme:
                raise ConfigError("blockwise scheme needs 'ell'")
            ell, share_size = float(scheme["ell"]), None
        elif kind == "symbolwise":
            if "m" not in scheme:
                raise ConfigError("symbolwise scheme needs 'm'")
            ell, share_size = None, int(scheme["m"])
        else:
            raise ConfigError(f"unknown scheme kind {kind!r}")
        if sched.get("kind") == "power_law":
            sk, sp = "power_law", float(sched.get("a", 1.0 / 3.0))
        elif sched.get("kind") == "constant":
            if "gamma" not in sched:
                raise ConfigError("constant schedule needs 'gamma'")
            sk, sp = "constant", float(sched["gamma"])
        else:
            raise ConfigError(f"unknown schedule kind {sched.get('kind')!r}")
        cfg = cls(source=source, scheme_kind=kind, n_values=n_values,
                  seed=seed, mode=mode, trials=trials, ell=ell,
                  share_size=share_size, schedule_kind=sk, schedule_param=sp)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            PMF.from_probs(self.source)
        except ValueError as exc:
            raise ConfigError(f"bad source: {exc}") from exc
        if self.mode not in ("exact", "mc"):
            raise ConfigError(f"mode must be 'exact' or 'mc', not {self.mode!r}")
        if self.mode == "mc" and self.trials < 1:
            raise ConfigError("mc mode needs a positive trial count")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError("n_values must be positive integers")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError("n_values must be increasing")
        if self.scheme_kind == "blockwise" and (self.ell is None or self.ell < 0):
            raise ConfigError("blockwise 'ell' must be non-negative")
        if self.scheme_kind == "symbolwise" and (
                self.share_size is None or self.share_size < len(self.source)):
            raise ConfigError("symbolwise 'm' must cover the secret alphabet")
        try:
            GammaSchedule(self.schedule_kind, self.schedule_param)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def schedule(self) -> GammaSchedule:
        return GammaSchedule(self.schedule_kind, self.schedule_param)

    def to_dict(self) -> dict:
        scheme = ({"kind": "blockwise", "ell": self.ell}
                  if self.scheme_kind == "blockwise"
                  else {"kind": "symbolwise", "m": self.share_size})
        sched = ({"kind": "power_law", "a": self.schedule_param}
                 if self.schedule_kind == "power_law"
                 else {"kind": "constant", "gamma": self.schedule_param})
        return {"source": list(self.source), "scheme": scheme,
                "schedule": sched, "n_values": list(self.n_values),
                "mode": self.mode, "trials": self.trials, "seed": self.seed}


@dataclass
class RunRecord:
    """One blocklength's results.  Estimated fields carry a 95% half-width
    in the matching *_ci slot; exact fields leave it None."""

    n: int
    gamma_n: float
    rate_x: float = math.nan
    rate_y: float = math.nan
    rate_u: float = math.nan
    p_e: float = math.nan
    p_x: float = math.nan
    p_y: float = math.nan
    i_sx: float = math.nan
    i_sy: float = math.nan
    i_xy_per_symbol: float = math.nan
    exp_x: float = math.nan
    exp_y: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan
    p_e_ci: float | None = None
    p_x_ci: float | None = None
    p_y_ci: float | None = None
    verdicts: dict = field(default_factory=dict)
    skipped: str | None = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[RunRecord]
    version: str = "0.1.0"
    wall_time_s: float = 0.0

    @property
    def any_violated(self) -> bool:
        return any(v == VIOLATED for r in self.records
                   for v in r.verdicts.values())


def _verdict(ok: bool | None) -> str:
    if ok is None:
        return NOT_APPLICABLE
    return HOLDS if ok else VIOLATED


def _exponent(p: float) -> float:
    return math.inf if p <= 0.0 else -math.log2(p)


def _blockwise_record(cfg: ExperimentConfig, n: int, gamma: float,
                      source: PMF, rng: RandomStream, rec_idx: int) -> RunRecord:
    rec = RunRecord(n=n, gamma_n=gamma)
    try:
        index = build_index(source, n, gamma)
        params = block.BlockwiseParams(cfg.ell, index)
        q = block.exact_quantities(params)
        tq = atk.blockwise_test_quantities(params)
    except (CapExceededError, EmptyTypicalSetError, ValueError) as exc:
        rec.skipped = str(exc)
        rec.verdicts = {k: NOT_APPLICABLE for k in VERDICT_KEYS}
        return rec
    rec.rate_x, rec.rate_y, rec.rate_u = q.rate_x, q.rate_y, q.rate_u
    rec.i_sx, rec.i_sy = q.i_sx, q.i_sy
    rec.i_xy_per_symbol = q.i_xy / n
    rec.alpha, rec.beta = tq.alpha, tq.beta

    if cfg.mode == "exact":
        rec.p_e = q.p_e
        ax = atk.blockwise_attack(params, "x")
        ay = atk.blockwise_attack(params, "y")
        rec.p_x, rec.p_y = ax.success_prob, ay.success_prob
    else:
        base = rng.substream(rec_idx)
        rec.p_e, rec.p_e_ci = block.monte_carlo_error(
            params, cfg.trials, base.substream(0))
        forged_x = atk.blockwise_attack(params, "x").optimal_forgery
        forged_y = atk.blockwise_attack(params, "y").optimal_forgery
        mx = atk.monte_carlo_attack(params, "x", forged_x, cfg.trials,
                                    base.substream(1))
        my = atk.monte_carlo_attack(params, "y", forged_y, cfg.trials,
                                    base.substream(2))
        rec.p_x, rec.p_x_ci = mx.success_prob, mx.ci_halfwidth
        rec.p_y, rec.p_y_ci = my.success_prob, my.ci_halfwidth
    rec.exp_x = _exponent(rec.p_x) / n
    rec.exp_y = _exponent(rec.p_y) / n

    h_s = q.h_s
    ell = cfg.ell
    # rate window around H(S) + ell, with the floor/sentinel slack 1/n
    rate_ok = (q.rate_x <= h_s + ell + gamma + 1.0 / n + BOUND_TOL
               and q.rate_x >= h_s + ell - gamma - 1.0 / n - BOUND_TOL)
    # typical-set cardinality floor backing the rate lower bound
    m_floor = (1.0 - q.delta) * 2.0 ** (n * (h_s - gamma))
    rate_ok = rate_ok and (q.m_count >= m_floor * (1.0 - 1e-9))

    # direct guarantee: success at most 1/L; converse ceiling uses the
    # upper interval end so sampling noise cannot fake a violation
    exp_direct = (rec.p_x <= 1.0 / params.l_count + _ci(rec.p_x_ci)
                  and rec.p_y <= 1.0 / params.l_count + _ci(rec.p_y_ci))
    conv = atk.converse_exponent_check(
        q.i_xy, rec.alpha,
        min(rec.p_x + (rec.p_x_ci or 0.0), 1.0),
        min(rec.p_y + (rec.p_y_ci or 0.0), 1.0), n)
    exp_ok = exp_direct and (conv.vacuous or conv.holds)

    ls = atk.logsum_bound_check(q.i_xy, tq)
    fano = atk.fano_check(tq.alpha, q.h_s_given_xy, n, source.support_size)
    sandwich_ok = (q.sandwich_lo - BOUND_TOL <= rec.i_xy_per_symbol
                   <= q.sandwich_hi + BOUND_TOL)
    rec.verdicts = {
        "rate": _verdict(rate_ok),
        "exp": _verdict(exp_ok),
        "logsum": _verdict(ls.holds),
        "fano": _verdict(fano.holds),
        "sandwich": _verdict(sandwich_ok),
    }
    return rec


def _ci(half: float | None) -> float:
    return BOUND_TOL + (half if half is not None else 0.0)


def _symbolwise_record(cfg: ExperimentConfig, n: int, gamma: float,
                       source: PMF, rng: RandomStream, rec_idx: int) -> RunRecord:
    rec = RunRecord(n=n, gamma_n=gamma)
    scheme = symbol.modular_scheme(cfg.share_size, source.support_size)
    try:
        codec = symbol.make_codec(scheme, source, n, gamma)
        q = symbol.exact_symbolwise_quantities(codec)
        tq = atk.symbolwise_test_quantities(codec)
    except (symbol.SchemeValidationError, CapExceededError, ValueError) as exc:
        rec.skipped = str(exc)
        rec.verdicts = {k: NOT_APPLICABLE for k in VERDICT_KEYS}
        return rec
    rec.rate_x = rec.rate_y = rec.rate_u = q.rate
    rec.i_sx, rec.i_sy = n * q.i_sx_per_symbol, n * q.i_sy_per_symbol
    rec.i_xy_per_symbol = q.i_xy_per_symbol
    rec.alpha, rec.beta = tq.alpha, tq.beta

    if cfg.mode == "exact":
        rec.p_e = q.p_e
        rec.p_x = atk.symbolwise_attack(codec, "x").success_prob
        rec.p_y = atk.symbolwise_attack(codec, "y").success_prob
    else:
        base = rng.substream(rec_idx)
        rec.p_e, rec.p_e_ci = symbol.monte_carlo_error(codec, cfg.trials,
                                                       base.substream(0))
        fx = atk.symbolwise_attack(codec, "x").optimal_forgery
        fy = atk.symbolwise_attack(codec, "y").optimal_forgery
        mx = atk.monte_carlo_attack(codec, "x", fx, cfg.trials, base.substream(1))
        my = atk.monte_carlo_attack(codec, "y", fy, cfg.trials, base.substream(2))
        rec.p_x, rec.p_x_ci = mx.success_prob, mx.ci_halfwidth
        rec.p_y, rec.p_y_ci = my.success_prob, my.ci_halfwidth
    rec.exp_x = _exponent(rec.p_x) / n
    rec.exp_y = _exponent(rec.p_y) / n

    h_s = entropy(source)
    ell = symbol.modular_correlation_level(cfg.share_size, source)
    rate_ok = abs(q.rate - (h_s + ell)) <= BOUND_TOL
    # direct guarantee: success at most 2**(-n (ell - gamma))
    cap = 2.0 ** (-n * (ell - gamma))
    exp_direct = (rec.p_x <= cap + _ci(rec.p_x_ci)
                  and rec.p_y <= cap + _ci(rec.p_y_ci))
    i_xy_total = n * q.i_xy_per_symbol
    conv = atk.converse_exponent_check(
        i_xy_total, rec.alpha,
        min(rec.p_x + (rec.p_x_ci or 0.0), 1.0),
        min(rec.p_y + (rec.p_y_ci or 0.0), 1.0), n)
    exp_ok = exp_direct and (conv.vacuous or conv.holds)

    ls = atk.logsum_bound_check(i_xy_total, tq)
    fano = atk.fano_check(tq.alpha, n * q.h_s_given_xy, n, source.support_size)
    sandwich_ok = abs(q.i_xy_per_symbol - ell) <= BOUND_TOL
    rec.verdicts = {
        "rate": _verdict(rate_ok),
        "exp": _verdict(exp_ok),
        "logsum": _verdict(ls.holds),
        "fano": _verdict(fano.holds),
        "sandwich": _verdict(sandwich_ok),
    }
    return rec


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Evaluate every blocklength; records are assembled in n order."""
    cfg.validate()
    start = time.monotonic()
    source = PMF.from_probs(cfg.source)
    sched = cfg.schedule()
    rng = RandomStream(cfg.seed)
    records = []
    for i, n in enumerate(cfg.n_values):
        gamma = sched.gamma_at(n)
        builder = (_blockwise_record if cfg.scheme_kind == "blockwise"
                   else _symbolwise_record)
        try:
            rec = builder(cfg, n, gamma, source, rng, i)
        except CapExceededError as exc:
            # tractability cap hit past the record's own guards
            rec = RunRecord(n=n, gamma_n=gamma, skipped=str(exc),
                            verdicts={k: NOT_APPLICABLE for k in VERDICT_KEYS})
        records.append(rec)
    report = ExperimentReport(config=cfg, records=records)
    report.wall_time_s = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------
# Emission


def _fmt(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.12g}"


def emit_csv(report: ExperimentReport) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in report.records:
        row = [str(r.n), _fmt(r.gamma_n), _fmt(r.rate_x), _fmt(r.rate_y),
               _fmt(r.rate_u), _fmt(r.p_e), _fmt(r.p_x), _fmt(r.p_y),
               _fmt(r.i_sx), _fmt(r.i_sy), _fmt(r.i_xy_per_symbol),
               _fmt(r.exp_x), _fmt(r.exp_y)]
        row += [r.verdicts.get(k, NOT_APPLICABLE) for k in VERDICT_KEYS]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def emit_jsonl(report: ExperimentReport) -> str:
    lines = [json.dumps({"type": "metadata", "config": report.config.to_dict(),
                         "version": report.version,
                         "wall_time_s": report.wall_time_s},
                        sort_keys=True)]
    for r in report.records:
        d = asdict(r)
        d["type"] = "record"
        lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        return emit_csv(report)
    if fmt == "jsonl":
        return emit_jsonl(report)
    raise ConfigError(f"unknown report format {fmt!r}")


def read_report_jsonl(text: str) -> ExperimentReport:
    """Rebuild a report from its JSON-lines emission."""
    config = None
    version = "?"
    wall = 0.0
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        kind = d.pop("type")
        if kind == "metadata":
            config = ExperimentConfig.from_dict(d["config"])
            version = d["version"]
            wall = d["wall_time_s"]
        else:
            records.append(RunRecord(**d))
    if config is None:
        raise ConfigError("jsonl report lacks a metadata line")
    return ExperimentReport(config=config, records=records, version=version,
                            wall_time_s=wall)


def read_report_csv(text: str) -> list[dict]:
    """Parse the CSV emission into one dict per record."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ConfigError("unexpected CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row: dict = {}
        for key, val in zip(header, parts):
            if key == "n":
                row[key] = int(val)
            elif key.startswith("v_"):
                row[key] = val
            else:
                row[key] = float(val)
        rows.append(row)
    return rows
