"""Verification suites behind the command-line subcommands.

Each suite returns a :class:`Report`: a list of named checks (asserted or
only recorded) plus plot-ready rows. A report passes when every asserted
check passes. Reports serialize deterministically; the timestamp is the only
field excluded from comparisons between runs.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels as kern
from . import lemmas
from . import maximal_ops as mx
from . import volumes as vol
from .errors import ConfigError
from .geometry import Point, invariants_arrays, triangle_probe
from .mu import d_CC_arrays, mu, mu_inverse
from .numerics import QuadratureSpec, spawn_rng

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "grushin.report/1"
COMMANDS = ("distances", "lemmas", "volumes", "kernels", "maximal")

# recorded constants, pinned from desk runs (see README)
RATIO_STABILITY = 3.0      # max/min of a per-n constant across dimensions
GREEN_A1 = 6.3             # Green / comparison ratio lies in [1/A1, A1]
Y_BRACKET_C = 1.6          # Y sqrt(n) DK/dK lies in [1/c, c]
CC_K_FRACTION = 0.25       # |B_CC| >= fraction * |B_K|
HDS_BOUND = 100.0          # HDS ratio ceiling at U = 10


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    return v


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    threshold: object = None
    asserted: bool = True
    criterion: int | None = None
    detail: dict = field(default_factory=dict)


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    timestamp: str = ""

    def add(self, name, passed, value=None, threshold=None, asserted=True, criterion=None, **detail):
        c = Check(name, bool(passed), value, threshold, asserted, criterion, detail)
        self.checks.append(c)
        logger.info("%s %s: %s (threshold %s)", "PASS" if c.passed else "FAIL", name, value, threshold)
        return c

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.asserted)

    def criterion_status(self):
        out = {}
        for c in self.checks:
            if c.asserted and c.criterion is not None:
                out[c.criterion] = out.get(c.criterion, True) and c.passed
        return out

    def to_dict(self, with_timestamp=True):
        d = {"schema": SCHEMA_VERSION, "command": self.command, "config": self.config,
             "passed": self.passed, "checks": [asdict(c) for c in self.checks], "rows": self.rows}
        if with_timestamp:
            d["timestamp"] = self.timestamp
        return _plain(d)

    def to_json(self, with_timestamp=True):
        return json.dumps(self.to_dict(with_timestamp), indent=2, sort_keys=True)

    def comparable(self):
        return self.to_json(with_timestamp=False)

    def rows_csv(self):
        if not self.rows:
            return ""
        fields = list(self.rows[0].keys())
        for r in self.rows[1:]:
            fields += [k for k in r if k not in fields]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(_plain(r))
        return buf.getvalue()

    def checks_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema", "command", "name", "criterion", "asserted", "passed", "value", "threshold"])
        for c in self.checks:
            w.writerow([SCHEMA_VERSION, self.command, c.name, c.criterion, c.asserted, c.passed,
                        json.dumps(_plain(c.value)), json.dumps(_plain(c.threshold))])
        return buf.getvalue()

    def write(self, out_dir, fmt="json"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            paths = [out / f"{self.command}.json"]
            paths[0].write_text(self.to_json() + "\n")
        elif fmt == "csv":
            paths = [out / f"{self.command}.csv", out / f"{self.command}.checks.csv"]
            paths[0].write_text(self.rows_csv())
            paths[1].write_text(self.checks_csv())
        else:
            raise ConfigError(f"unknown format {fmt!r}")
        return paths

    def summary_lines(self):
        lines = []
        for c in self.checks:
            tag = ("PASS" if c.passed else "FAIL") if c.asserted else "INFO"
            lines.append(f"{tag} [{self.command}] {c.name}: {_short(c.value)}"
                         + (f" (threshold {_short(c.threshold)})" if c.threshold is not None else ""))
        return lines


def _short(v):
    v = _plain(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and len(v) > 6:
        return f"[{len(v)} values]"
    return json.dumps(v) if isinstance(v, (list, dict)) else str(v)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "distances": {"dims": [1, 2, 3, 5, 10], "pairs": 100_000, "mu_pairs": 10_000, "triangle_trials": 20_000},
    "lemmas": {"n_grid": "default"},
    "volumes": {"dims": [1, 2, 3, 5], "x": [0.0, 0.5, 2.0, 10.0], "r": [0.5, 0.7, 1.0, 2.0, 3.1],
                "samples": 1_000_000, "mc_dims": [1, 2, 3], "mc_x": [0.0, 1.0], "theta_samples": 20_000},
    "kernels": {"heat_h": [0.25, 1.0, 4.0], "pairs": 10, "green_dims": list(range(2, 41)),
                "asym_U": [5.0, 10.0, 20.0], "asym_n": 40, "asym_pairs": 20},
    "maximal": {"composition_functions": 20, "weak_dims": [1, 2, 3], "hds_dims": [5, 10, 20],
                "hds_U": 10.0, "hds_samples": 200, "hds_trend_U": [5.0, 10.0, 20.0]},
}


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    jobs: int = 0
    out: str = "reports"
    format: str = "json"
    rel_tol: float | None = None
    truncation: float | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS + ("all",):
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.jobs <= 0:
            self.jobs = os.cpu_count() or 1
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ConfigError("rel_tol must be positive")
        if self.truncation is not None and not (math.isfinite(self.truncation) and self.truncation > 0):
            raise ConfigError("truncation must be finite and positive")
        for cmd in (COMMANDS if self.command == "all" else (self.command,)):
            unknown = set(self.options.get(cmd, {})) - set(_DEFAULTS[cmd])
            if unknown:
                raise ConfigError(f"unknown options for {cmd}: {sorted(unknown)}")
        for cmd, opts in self.options.items():
            if cmd not in COMMANDS:
                raise ConfigError(f"options given for unknown command {cmd!r}")
            for key, val in opts.items():
                if "dims" in key and any(int(d) != d or d < 1 for d in val):
                    raise ConfigError(f"{cmd}.{key}: dimensions must be integers >= 1")

    def opts(self, cmd):
        merged = dict(_DEFAULTS[cmd])
        merged.update(self.options.get(cmd, {}))
        return merged

    def quad(self, base: QuadratureSpec = None):
        base = base or QuadratureSpec()
        kw = asdict(base)
        if self.rel_tol is not None:
            kw["rel_tol"] = self.rel_tol
        if self.truncation is not None:
            kw["truncation"] = self.truncation
        return QuadratureSpec(**kw)

    def describe(self, cmd):
        # jobs and output location do not change results, so they stay out of reports
        return {"command": cmd, "seed": self.seed, "rel_tol": self.rel_tol,
                "truncation": self.truncation, "options": self.opts(cmd) if cmd in _DEFAULTS else {}}

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        allowed = {"command", "seed", "jobs", "out", "format", "rel_tol", "truncation", "options"}
        extra = set(data) - allowed
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _new_report(cfg, cmd):
    return Report(cmd, cfg.describe(cmd), timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))


# ---------------------------------------------------------------------------
# distances: metric equivalence and mu inversion
# ---------------------------------------------------------------------------

def _mixed_pairs(rng, size, n):
    """Random pairs across several orders of magnitude, with some antipodal and u = u' cases."""
    xs1 = rng.normal(size=(size, n)) * 10.0 ** rng.uniform(-2, 1, (size, 1))
    xs2 = rng.normal(size=(size, n)) * 10.0 ** rng.uniform(-2, 1, (size, 1))
    us1 = rng.normal(size=size) * 10.0 ** rng.uniform(-3, 2, size)
    us2 = rng.normal(size=size) * 10.0 ** rng.uniform(-3, 2, size)
    k = size // 20
    xs2[:k] = -xs1[:k]
    return xs1, us1, xs2, us2


def suite_distances(cfg: ExperimentConfig):
    o = cfg.opts("distances")
    rep = _new_report(cfg, "distances")
    sups = {}
    for n in o["dims"]:
        rng = spawn_rng(cfg.seed, 100 + n)
        x1, u1, x2, u2 = _mixed_pairs(rng, int(o["pairs"]), n)
        dc = d_CC_arrays(x1, u1, x2, u2)
        dk = invariants_arrays(x1, u1, x2, u2)["dK"]
        excess = float(np.max(dk - dc))
        rep.add(f"dK<=dCC+1e-9 (n={n})", excess <= 1e-9, excess, 1e-9, criterion=2, pairs=int(o["pairs"]))
        pos = dk > 0
        sups[n] = float(np.max(dc[pos] / dk[pos]))
        rep.rows.append({"n": n, "pairs": int(o["pairs"]), "max_dK_minus_dCC": excess,
                         "sup_dCC_over_dK": sups[n]})
        # u = u' reduces to the Euclidean distance in x
        dcu = d_CC_arrays(x1, u1, x2, u1)
        eu = np.linalg.norm(x1 - x2, axis=-1)
        err = float(np.max(np.abs(dcu - eu) / np.maximum(1.0, eu)))
        rep.add(f"u=u' gives |x-x'| (n={n})", err <= 1e-9, err, 1e-9, criterion=2)
        # seam between the antipodal special case and the general formula
        xs = rng.normal(size=(200, n))
        xn2 = np.sum(xs * xs, axis=-1)
        s = 0.5 * math.pi * xn2 * rng.uniform(1.0, 3.0, 200)
        special = d_CC_arrays(xs, 0.0, -xs, s)
        near = d_CC_arrays(xs, 0.0, -xs * (1.0 + 1e-7), s)
        below = d_CC_arrays(xs, 0.0, -xs, 0.5 * math.pi * xn2 * (1.0 - 1e-9))
        at = d_CC_arrays(xs, 0.0, -xs, 0.5 * math.pi * xn2)
        seam = float(max(np.max(np.abs(near / special - 1.0)), np.max(np.abs(below / at - 1.0))))
        rep.add(f"case seam continuity (n={n})", seam <= 1e-3, seam, 1e-3, criterion=2)
        tri = triangle_probe(spawn_rng(cfg.seed, 200 + n), n, int(o["triangle_trials"]))
        rep.add(f"triangle probe worst ratio (n={n})", True, tri["worst_ratio"], asserted=False, criterion=2)
    vals = list(sups.values())
    spread = max(vals) / min(vals)
    rep.add("sup dCC/dK finite and stable across n", all(map(math.isfinite, vals)) and spread <= RATIO_STABILITY,
            {str(k): v for k, v in sups.items()}, RATIO_STABILITY, criterion=2, spread=spread)

    # mu inversion
    rng = spawn_rng(cfg.seed, 1)
    N = int(o["mu_pairs"])
    a = rng.uniform(-1.0, 1.0, N)
    m = rng.uniform(-6.0, 6.0, N)
    a = np.where((np.abs(m) >= 0.5 * math.pi) & (a < -0.999), -0.999, a)
    phi = mu_inverse(a, m)
    rt = float(np.max(np.abs(mu(a, phi) - m) / np.maximum(1.0, np.abs(m))))
    rep.add("mu round trip", rt < 1e-9, rt, 1e-9, criterion=3, pairs=N)
    from .errors import OutOfRange
    edge = [0.5 * math.pi, -0.5 * math.pi, 2.0]
    rejected = 0
    for mm in edge:
        try:
            mu_inverse(-1.0, mm)
        except OutOfRange:
            rejected += 1
    inside = math.pi / 2 * (1.0 - 1e-12)
    accepted = abs(mu(-1.0, mu_inverse(-1.0, inside)) - inside) < 1e-9
    rep.add("a=-1 rejects |m| >= pi/2 exactly", rejected == len(edge) and accepted,
            {"rejected": rejected, "tested": len(edge), "accepts_just_inside": bool(accepted)}, criterion=3)
    return rep


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------

def suite_lemmas(cfg: ExperimentConfig):
    o = cfg.opts("lemmas")
    rep = _new_report(cfg, "lemmas")
    if o["n_grid"] not in ("default", "coarse"):
        raise ConfigError("lemmas.n_grid must be 'default' or 'coarse'")
    for name in lemmas.DEFAULT_SWEEPS:
        axes = None
        if o["n_grid"] == "coarse":
            axes = [lemmas.Axis(a.lo, a.hi, max(a.count // 10, 10), a.open_lo, a.open_hi)
                    for a in lemmas.SWEEPS[name].axes]
        r = lemmas.sweep(name, axes=axes, jobs=cfg.jobs)
        rep.add(f"sweep {name}", r.passed, r.violations, 0, criterion=1, min_value=r.min_value,
                argmin=r.argmin, grid=r.grid_sizes, domain=r.domain)
        rep.rows.append({"sweep": name, "grid": "x".join(map(str, r.grid_sizes)), "min": r.min_value,
                         "threshold": r.threshold, "violations": r.violations})
    conc = lemmas.concavity_check()
    rep.add("G concavity in r", conc.passed, conc.violations, 0, criterion=1)
    xi_half = float(lemmas.Xi(0.5 * math.pi))
    rep.add("Xi(pi/2) = 2/pi", abs(xi_half - 2.0 / math.pi) <= 1e-14, abs(xi_half - 2.0 / math.pi), 1e-14,
            criterion=1)
    cub = lemmas.cubic_remainder_bounds()
    rep.add("c1 <= 1/6 <= C1", cub["c1"] <= 1.0 / 6.0 <= cub["C1"] + 1e-9, [cub["c1"], cub["C1"]],
            asserted=True, criterion=1)
    ident = lemmas.identity_checks()
    worst = max(ident.values())
    rep.add("identities (G product vs direct, Z1/Z2 vs G)", worst <= 1e-9, worst, 1e-9, criterion=1)
    return rep


# ---------------------------------------------------------------------------
# volumes
# ---------------------------------------------------------------------------

def suite_volumes(cfg: ExperimentConfig):
    o = cfg.opts("volumes")
    rep = _new_report(cfg, "volumes")
    spec = cfg.quad(vol.VOLUME_QUAD)
    bad_bracket, worst_dil, min_frac, cc_over = [], 0.0, math.inf, []
    for n in o["dims"]:
        for xn in o["x"]:
            for r in o["r"]:
                bk = vol.volume_BK_exact(xn, n, r, spec)
                lo, hi = vol.volume_bounds(xn, n, r)
                if not lo <= bk.value <= hi:
                    bad_bracket.append([n, xn, r, bk.value, lo, hi])
                direct = vol.volume_BK_exact(xn, n, r, spec, method="direct")
                worst_dil = max(worst_dil, abs(direct.value / bk.value - 1.0))
                rep.rows.append(vol.volume_row("K", n, xn, r, bk))
            bcc = vol.volume_BCC_exact(xn, n, cfg.quad(vol.CC_QUAD))
            bk1 = vol.volume_BK_exact(xn, n, 1.0, spec)
            frac = bcc.value / bk1.value
            min_frac = min(min_frac, frac)
            if frac > 1.0 + 1e-8:
                cc_over.append([n, xn, frac])
            rep.rows.append(vol.volume_row("CC", n, xn, 1.0, bcc))
    rep.add("|B_K| within [UB/8, UB]", not bad_bracket, len(bad_bracket), 0, criterion=4, cases=bad_bracket)
    rep.add("dilation identity", worst_dil <= 1e-8, worst_dil, 1e-8, criterion=4)
    rep.add("|B_CC| <= |B_K|", not cc_over, len(cc_over), 0, criterion=4, cases=cc_over)
    rep.add("|B_CC| >= fraction * |B_K|", min_frac >= CC_K_FRACTION, min_frac, CC_K_FRACTION, criterion=4)

    worst_z = 0.0
    for i, n in enumerate(o["mc_dims"]):
        for j, xn in enumerate(o["mc_x"]):
            x = np.zeros(n)
            x[0] = xn
            g = Point(x, 0.0)
            mc = vol.volume_monte_carlo(vol.BallSpec("K", g, 1.0), o["samples"], cfg.seed + 17 * i + j,
                                        jobs=cfg.jobs, also_cc=True)
            bk = vol.volume_BK_exact(xn, n, 1.0, spec)
            bcc = vol.volume_BCC_exact(xn, n, cfg.quad(vol.CC_QUAD))
            env = mc.extra["envelope_volume"]
            N = mc.samples
            f_cc = mc.extra["hits_CC"] / N
            cc_val = f_cc * env
            cc_err = env * math.sqrt(f_cc * (1 - f_cc) / N)
            zk = abs(mc.value - bk.value) / mc.error
            zc = abs(cc_val - bcc.value) / cc_err
            worst_z = max(worst_z, zk, zc)
            rep.rows.append(vol.volume_row("K", n, xn, 1.0, mc))
            rep.rows.append({**vol.volume_row("CC", n, xn, 1.0, mc), "value": cc_val, "error": cc_err})
            rep.add(f"MC agreement n={n} |x|={xn}", zk <= 3 and zc <= 3, [zk, zc], 3.0, criterion=4,
                    outside=mc.extra["cc_outside_k"])
    rng = spawn_rng(cfg.seed, 5)
    M = int(o["theta_samples"])
    xn = 10.0 ** rng.uniform(-2, 1, M)
    zn = rng.uniform(0, 1, M) ** 0.5 * 0.999999
    cosang = rng.uniform(-1, 1, M)
    zx = xn * zn * cosang
    th = vol.theta0(xn, zx, zn)
    res = float(np.max(np.abs(vol.theta0_residual(xn, zx, zn, th))))
    rep.add("theta0 residual", res < 1e-10, res, 1e-10, criterion=4)
    return rep


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def _pairs_at_distance(rng, size, n, target):
    x1 = rng.normal(size=(size, n))
    x2 = rng.normal(size=(size, n))
    u1 = rng.normal(size=size)
    u2 = rng.normal(size=size)
    r = target / invariants_arrays(x1, u1, x2, u2)["dK"]
    return (x1 * r[:, None], u1 * r * r), (x2 * r[:, None], u2 * r * r)


def suite_kernels(cfg: ExperimentConfig):
    o = cfg.opts("kernels")
    rep = _new_report(cfg, "kernels")
    quad = cfg.quad()
    rng = spawn_rng(cfg.seed, 7)

    k1 = kern.KernelConfig(1, quad)
    worst = 0.0
    for x0 in (0.0, 1.5):
        for h in o["heat_h"]:
            m = kern.heat_mass(x0, h, k1)
            worst = max(worst, abs(m - 1.0))
            rep.rows.append({"kernel": "heat-mass", "n": 1, "|x|": x0, "h": h, "value": m})
    rep.add("heat mass 1 +- 1e-3 (n=1)", worst <= 1e-3, worst, 1e-3, criterion=5)

    k3 = kern.KernelConfig(3, quad)
    P = int(o["pairs"])
    g = (rng.normal(size=(P, 3)), rng.normal(size=P))
    gp = (rng.normal(size=(P, 3)), rng.normal(size=P))
    gr = kern.green_function(g, gp, k3)
    gh = kern.green_from_heat(g, gp, k3)
    err = float(np.max(np.abs(gh / gr - 1.0)))
    rep.add("Green = time-integrated heat (n=3)", err <= 0.01, err, 0.01, criterion=5)

    lo_r, hi_r = math.inf, 0.0
    for n in o["green_dims"]:
        x1, u1 = rng.normal(size=(50, n)) * 2.0, rng.normal(size=50) * 3.0
        x2, u2 = rng.normal(size=(50, n)) * 2.0, rng.normal(size=50) * 3.0
        inv = invariants_arrays(x1, u1, x2, u2)
        b = np.concatenate([2.0 * (inv["DK"] / inv["dK"]) ** 2, [1.0, 1e6]])
        ratio = kern.green_comparison_ratio(n, b)
        lo_r, hi_r = min(lo_r, float(ratio.min())), max(hi_r, float(ratio.max()))
    rep.add("Green/comparison ratio in [1/A1, A1]", 1.0 / GREEN_A1 <= lo_r and hi_r <= GREEN_A1,
            [lo_r, hi_r], [1.0 / GREEN_A1, GREEN_A1], criterion=5)
    ys = [kern.green_Y_scaled(n, b) for n in (2, 10, 50) for b in (1.0, 10.0, 1e3)]
    rep.add("Y sqrt(n) DK/dK in [1/c, c]", 1.0 / Y_BRACKET_C <= min(ys) and max(ys) <= Y_BRACKET_C,
            [min(ys), max(ys)], [1.0 / Y_BRACKET_C, Y_BRACKET_C], criterion=5)

    g = (rng.normal(size=(50, 3)), rng.normal(size=50))
    gp = (rng.normal(size=(50, 3)), rng.normal(size=50))
    d = kern.poisson_kernel(g, gp, k3, full=True)
    s = kern.poisson_kernel_shifted(g, gp, k3, full=True)
    err = float(np.max(np.abs(d.value / s.value - 1.0)))
    rep.add("Poisson direct = shifted (n=3)", err <= 1e-6, err, 1e-6, criterion=5)
    imag = float(max(np.max(np.abs(d.extra["imag"]) / d.value), np.max(np.abs(s.extra["imag"]) / s.value)))
    rep.add("imaginary residue", imag <= 1e-8, imag, 1e-8, criterion=5)
    g10 = (g[0][:P], g[1][:P])
    gp10 = (gp[0][:P], gp[1][:P])
    sub = kern.poisson_subordinated(g10, gp10, k3)
    err = float(np.max(np.abs(sub / s.value[:P] - 1.0)))
    rep.add("Poisson = subordinated heat", err <= 0.01, err, 0.01, criterion=5)

    n = int(o["asym_n"])
    kn = kern.KernelConfig(n, quad)
    errs = []
    for U in o["asym_U"]:
        a, b = _pairs_at_distance(spawn_rng(cfg.seed, 11), int(o["asym_pairs"]), n, U * math.sqrt(n))
        num = kern.poisson_kernel_shifted(a, b, kn, full=True)
        asy = kern.poisson_asymptotic(a, b, kn, full=True)
        rel = kern.log_ratio(num, asy) - 1.0
        errs.append(float(np.max(np.abs(rel))))
        rep.rows.append({"kernel": "poisson-asymptotic", "n": n, "U": U, "max_rel_error": errs[-1],
                         "mean_signed_error": float(np.mean(rel))})
    u_list = list(o["asym_U"])
    at10 = errs[u_list.index(10.0)] if 10.0 in u_list else errs[0]
    rep.add(f"asymptotic error <= 0.2 (n={n}, U=10)", at10 <= 0.2, at10, 0.2, criterion=5)
    rep.add("asymptotic error decreasing in U", all(b < a for a, b in zip(errs, errs[1:])),
            dict(zip(map(str, u_list), errs)), criterion=5)
    return rep


# ---------------------------------------------------------------------------
# maximal
# ---------------------------------------------------------------------------

GRIDS = {
    1: (((-2.0, 2.0, 48),), (-3.0, 3.0, 48)),
    2: (((-1.5, 1.5, 12), (-1.5, 1.5, 12)), (-2.0, 2.0, 16)),
    3: (((-1.2, 1.2, 8),) * 3, (-1.5, 1.5, 10)),
}


def suite_maximal(cfg: ExperimentConfig):
    o = cfg.opts("maximal")
    rep = _new_report(cfg, "maximal")
    for n in (1, 2):
        box, ur = GRIDS[n]
        worst = 0.0
        for k in range(int(o["composition_functions"])):
            f = mx.random_sparse(n, box, ur, seed=cfg.seed * 1000 + 10 * n + k, density=0.02)
            _, _, ratio = mx.composition_check(f, jobs=cfg.jobs)
            worst = max(worst, ratio)
        rep.add(f"composition max_ratio (n={n})", worst <= 1.05, worst, 1.05, criterion=6)
        rep.rows.append({"experiment": "composition", "n": n, "functions": int(o["composition_functions"]),
                         "max_ratio": worst})
    weak = {}
    for n in o["weak_dims"]:
        box, ur = GRIDS[n]
        shape = tuple(c for _, _, c in box)
        best = 0.0
        for frac in (0.5, 0.7, 0.9):
            idx = tuple([int(frac * shape[0])] + [shape[i] // 2 for i in range(1, n)])
            f = mx.spike(n, box, ur, idx, ur[2] // 2)
            Mf = mx.maximal(f, "K", jobs=cfg.jobs)
            best = max(best, mx.weak_type_ratio(Mf, f))
        weak[n] = best
        rep.rows.append({"experiment": "weak-type", "n": n, "ratio": best})
    rep.add("weak-type ratio finite for spikes", all(math.isfinite(v) and v > 0 for v in weak.values()),
            {str(k): v for k, v in weak.items()}, criterion=6)
    lin = [weak[n] / n for n in o["weak_dims"]]
    rep.add("weak-type ratio / n trend", True, lin, asserted=False, criterion=6)

    hds = {}
    for n in o["hds_dims"]:
        x = np.zeros(n)
        x[0] = 0.5
        r = mx.hds_comparison(Point(x, 0.0), n, o["hds_U"], o["hds_samples"], seed=cfg.seed + n)
        hds[n] = r
        rep.rows.append({"experiment": "hds", **r.to_dict()})
    maxes = [r.max_ratio for r in hds.values()]
    ok = all(r.min_efin > 0 for r in hds.values())
    rep.add("EFIN min > 0", ok, {str(k): r.min_efin for k, r in hds.items()}, 0.0, criterion=6)
    spread = max(maxes) / min(maxes)
    rep.add("HDS ratio bounded and stable across n",
            max(maxes) <= HDS_BOUND and spread <= RATIO_STABILITY and
            all(r.boundary_max_ratio <= HDS_BOUND for r in hds.values()),
            {str(k): r.max_ratio for k, r in hds.items()}, [HDS_BOUND, RATIO_STABILITY], criterion=6,
            boundary={str(k): r.boundary_max_ratio for k, r in hds.items()}, spread=spread)
    n0 = o["hds_dims"][0]
    x = np.zeros(n0)
    x[0] = 0.5
    trend = [mx.hds_comparison(Point(x, 0.0), n0, U, o["hds_samples"], seed=cfg.seed + n0,
                               boundary=False).max_ratio for U in o["hds_trend_U"]]
    rep.add(f"HDS ratio versus U (n={n0})", True, dict(zip(map(str, o["hds_trend_U"]), trend)),
            asserted=False)
    return rep


SUITES = {"distances": suite_distances, "lemmas": suite_lemmas, "volumes": suite_volumes,
          "kernels": suite_kernels, "maximal": suite_maximal}


def reproducibility(cfg: ExperimentConfig):
    """Run the distances suite twice (reduced size) and compare the reports."""
    small = ExperimentConfig("distances", seed=cfg.seed, jobs=cfg.jobs,
                             options={"distances": {"pairs": 5000, "mu_pairs": 2000, "triangle_trials": 2000}})
    a = suite_distances(small).comparable()
    b = suite_distances(small).comparable()
    rep = _new_report(cfg, "reproducibility")
    rep.add("identical reports on re-run", a == b, a == b, criterion=7)
    return rep


def run(cfg: ExperimentConfig, write=True):
    """Run the configured command; returns ``(exit_code, reports)``."""
    cmds = COMMANDS if cfg.command == "all" else (cfg.command,)
    reports = []
    for c in cmds:
        logger.info("running suite %s", c)
        reports.append(SUITES[c](cfg))
    if cfg.command == "all":
        reports.append(reproducibility(cfg))
    if write:
        for r in reports:
            r.write(cfg.out, cfg.format)
    code = 0 if all(r.passed for r in reports) else 1
    return code, reports
