"""Seeded Monte-Carlo scenarios, flat ``key = value`` configs and CSV output."""
from dataclasses import dataclass, field
from functools import lru_cache
import math
import os

import numpy as np

from .params import SystemParams
from .sysmodel import draw_channels, gain_matrix, mrt_beamformers
from .solver import SolverError, dinkelbach_solve
from . import multicell as mcm

SCENARIOS = ("convergence", "ee_vs_m", "ee_vs_k", "power_vs_m", "multicell_vs_m")
HEADER = ("sweep", "mean", "stderr", "trials", "failures", "seed")

# config key -> SystemParams field
PARAM_KEYS = {
    "M": "M", "K": "K",
    "bandwidth": "B",
    "noise_density_dbm": "noise_density",
    "shadowing_db": "sigma_sh_db",
    "p_max": "p_max", "p_ant": "p_ant", "p_fix": "p_fix", "p_ue": "p_ue",
    "r_min": "r_min",
    "ber_target": "ber_target",
    "cell_radius": "cell_radius",
    "d0": "d0",
    "path_loss_exponent": "v",
    "eps": "eps", "tol_p": "tol_p", "tol_sca": "tol_sca", "tol_d": "tol_d",
    "gamma_phi": "gamma_phi", "gamma_lambda": "gamma_lambda",
    "extrapolation": "extrapolation", "step_schedule": "step_schedule", "newton": "newton",
    "max_t1": "max_t1", "max_t2": "max_t2", "max_t3": "max_t3",
    "p_floor": "p_floor", "s_min": "s_min", "lambda_cap": "lambda_cap",
}
INT_KEYS = {"M", "K", "max_t1", "max_t2", "max_t3", "trials", "cells", "pilot_length"}
STR_KEYS = {"scenario", "sweep", "out", "step_schedule", "newton"}
OTHER_KEYS = {"scenario", "sweep", "trials", "seed", "out", "cells", "pilot_power",
              "pilot_length", "multicell_r_min"}

DEFAULT_SWEEP = {
    "convergence": None,
    "ee_vs_m": "10:10:200",
    "ee_vs_k": "1:1:20",
    "power_vs_m": "10:10:200",
    "multicell_vs_m": "50:50:200",
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    sweep: list
    trials: int = 200
    seed: int = 0
    out: str = "results.csv"
    overrides: dict = field(default_factory=dict)
    cells: int = 7
    pilot_power: float = 0.1
    pilot_length: int = None
    multicell_r_min: float = 0.0

    def params(self, **extra) -> SystemParams:
        kw = {PARAM_KEYS[k]: v for k, v in self.overrides.items()}
        kw.update(extra)
        return SystemParams(**kw)

    def mc_params(self, params) -> "mcm.MultiCellParams":
        return mcm.MultiCellParams(base=params, L=self.cells, p_u=self.pilot_power, tau=self.pilot_length)


@dataclass
class ExperimentResult:
    scenario: str
    seed: int
    rows: list  # (sweep, mean, stderr, trials, failures, seed)
    per_trial: dict = field(default_factory=dict)  # sweep -> list of values (None = failed)
    trace: list = None  # (t1, eta, residual) for the convergence scenario
    detail: list = None  # extra multi-cell columns


def parse_sweep(text):
    text = text.strip()
    try:
        if ":" in text:
            a, s, b = (int(x) for x in text.split(":"))
            if s <= 0:
                raise ConfigError("sweep: step must be positive")
            vals = list(range(a, b + 1, s))
        else:
            vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"sweep: cannot parse {text!r}") from None
    if not vals:
        raise ConfigError("sweep: empty range")
    if min(vals) < 1:
        raise ConfigError("sweep: values must be >= 1")
    return vals


def _convert(key, raw):
    if key in STR_KEYS:
        return raw
    try:
        if key in INT_KEYS or key == "seed":
            v = int(raw)
        else:
            v = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def parse_config(text) -> ExperimentConfig:
    """Parse a flat ``key = value`` config.  ``#`` starts a comment."""
    vals = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in PARAM_KEYS and key not in OTHER_KEYS:
            raise ConfigError(f"{key}: unknown key")
        if key in vals:
            raise ConfigError(f"{key}: given twice")
        vals[key] = _convert(key, raw)

    scenario = vals.pop("scenario", None)
    if scenario is None:
        raise ConfigError("scenario: missing")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {scenario!r}")
    sweep_txt = vals.pop("sweep", DEFAULT_SWEEP[scenario])
    if scenario == "convergence":
        if sweep_txt is not None:
            raise ConfigError("sweep: not used by the convergence scenario")
        sweep = [vals.get("M", 100)]
    else:
        sweep = parse_sweep(sweep_txt)
    cfg = ExperimentConfig(scenario=scenario, sweep=sweep)
    for key in ("trials", "seed", "out", "cells", "pilot_power", "pilot_length", "multicell_r_min"):
        if key in vals:
            setattr(cfg, key, vals.pop(key))
    cfg.overrides = vals
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if cfg.trials < 1:
        raise ConfigError("trials: must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed: must fit in an unsigned 64-bit integer")
    if cfg.cells < 1:
        raise ConfigError("cells: must be >= 1")
    if not cfg.pilot_power > 0:
        raise ConfigError("pilot_power: must be positive")
    if cfg.multicell_r_min < 0:
        raise ConfigError("multicell_r_min: must be non-negative")
    try:
        p = cfg.params()
    except ValueError as e:
        # name the offending config key, not the internal field
        msg = str(e)
        for k, f in PARAM_KEYS.items():
            if msg.startswith(f + " "):
                msg = k + ": " + msg[len(f) + 1:]
                break
        raise ConfigError(msg) from None
    if cfg.pilot_length is not None and cfg.pilot_length < p.K:
        raise ConfigError("pilot_length: must be >= K")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)


# --- trials -----------------------------------------------------------------

@lru_cache(maxsize=20000)
def _single_trial(params: SystemParams, seed: int):
    """Solve one seeded single-cell drop.  Returns (eta, mean power) or None."""
    rng = np.random.default_rng(seed)
    ch = draw_channels(params, rng)
    G = gain_matrix(ch.g, mrt_beamformers(ch.g))
    try:
        sol = dinkelbach_solve(params, G)
    except SolverError:
        return None
    return sol.eta, float(sol.p.mean())


def _multicell_trial(mc, seed, single_params):
    """Realized and designed network EE plus the isolated-cell references."""
    rng = np.random.default_rng(seed)
    ch = mcm.layout_and_draw(mc, rng)
    mcm.ls_estimate(ch, mc, rng)
    w = mcm.beams(ch)
    g0 = ch.g[0, 0]
    G0 = gain_matrix(g0, mrt_beamformers(g0))
    out = {}
    for name, par in (("single", single_params), ("single_nofloor", mc.base)):
        try:
            out[name] = dinkelbach_solve(par, G0).eta
        except SolverError:
            out[name] = None
    try:
        alloc = mcm.multicell_solve(mc, ch, w)
    except SolverError:
        out["realized"] = out["designed"] = None
    else:
        out["designed"] = alloc.eta
        out["realized"] = mcm.evaluate_on_true(mc, alloc, ch, w)
    return out


def _summary(values):
    ok = [v for v in values if v is not None]
    n = len(ok)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(ok) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in ok) / (n - 1)
    return mean, math.sqrt(var / n)


def _row(x, values, cfg):
    mean, se = _summary(values)
    return (x, mean, se, cfg.trials, sum(v is None for v in values), cfg.seed)


def run_scenario(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    sc = cfg.scenario
    res = ExperimentResult(sc, cfg.seed, [])
    seeds = [cfg.seed + t for t in range(cfg.trials)]

    if sc == "convergence":
        par = cfg.params(**_defaults(cfg, M=100, K=5))
        rng = np.random.default_rng(cfg.seed)
        ch = draw_channels(par, rng)
        G = gain_matrix(ch.g, mrt_beamformers(ch.g))
        sol = dinkelbach_solve(par, G)  # a failure here is a runtime error
        res.trace = [(r.t1, r.ee, r.residual) for r in sol.trace.rows]
        res.per_trial[par.M] = [sol.eta]
        res.rows.append((par.M, sol.eta, 0.0, 1, 0, cfg.seed))
        return res

    if sc in ("ee_vs_m", "power_vs_m", "ee_vs_k"):
        metric = 1 if sc == "power_vs_m" else 0
        for x in cfg.sweep:
            if sc == "ee_vs_k":
                par = cfg.params(**_defaults(cfg, M=82), K=x)
            else:
                par = cfg.params(**_defaults(cfg, K=5), M=x)
            vals = []
            for s in seeds:
                r = _single_trial(par, s)
                vals.append(None if r is None else r[metric])
            res.per_trial[x] = vals
            res.rows.append(_row(x, vals, cfg))
            if progress:
                progress(x)
        return res

    # multicell_vs_m
    res.detail = []
    for x in cfg.sweep:
        single = cfg.params(**_defaults(cfg, K=5), M=x)
        mc = cfg.mc_params(single.with_(r_min=cfg.multicell_r_min))
        recs = [_multicell_trial(mc, s, single) for s in seeds]
        vals = [r["realized"] for r in recs]
        res.per_trial[x] = vals
        res.rows.append(_row(x, vals, cfg))
        means = {k: _summary([r[k] for r in recs])[0] for k in ("realized", "designed", "single", "single_nofloor")}
        res.detail.append((x, means["realized"], means["designed"], means["single"],
                           means["realized"] / means["single"], means["single_nofloor"],
                           means["realized"] / means["single_nofloor"]))
        if progress:
            progress(x)
    return res


def _defaults(cfg, **kw):
    # scenario defaults that an explicit config value overrides
    return {k: v for k, v in kw.items() if k not in cfg.overrides}


# --- output -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


def _write(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(",".join(header) + "\n")
            for r in rows:
                f.write(",".join(_fmt(v) for v in r) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror}") from None


def emit_csv(result: ExperimentResult, path):
    """Write the result table, plus ``trace.csv`` or the multi-cell detail file beside it."""
    if not result.rows:
        raise ValueError("empty result")
    _write(path, HEADER, result.rows)
    written = [path]
    folder = os.path.dirname(os.path.abspath(path))
    if result.trace is not None:
        p = os.path.join(folder, "trace.csv")
        _write(p, ("t1", "eta", "residual"), result.trace)
        written.append(p)
    if result.detail is not None:
        stem, ext = os.path.splitext(path)
        p = stem + "_detail" + (ext or ".csv")
        _write(p, ("sweep", "realized", "designed", "single", "ratio", "single_nofloor", "ratio_nofloor"),
               result.detail)
        written.append(p)
    return written
