"""Study configuration, convergence runs, rate fitting and result emission.

Config files are flat ``key = value`` text with ``#`` comments.  Values are
parsed by key (see ``KEYS``); ladders accept ``2^-k`` tokens, and complex
numbers accept either ``j`` or ``i`` as the imaginary unit.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import __version__
from .dirac import dirac_rep
from .layer import profile as make_profile
from .matfun import family_matrix

KINDS = ("renormalize", "kernel-eval", "bie-solve", "eigs", "layer-transfer", "fiber-gap", "converge", "norms")
OUT_ENV = "DSHELL_OUT"


def _number(tok):
    tok = tok.strip()
    if "^" in tok:
        base, exp = tok.split("^", 1)
        return float(base) ** float(exp)
    return float(tok)


def _complex(tok):
    tok = tok.strip().replace(" ", "")
    if tok.endswith("i") and not tok.endswith("inf"):
        tok = tok[:-1] + "j"
    return complex(tok)


def _floats(tok):
    tok = tok.strip()
    if tok.startswith("dyadic(") and tok.endswith(")"):
        lo, hi = (int(x) for x in tok[7:-1].split(","))
        return tuple(2.0 ** -k for k in range(lo, hi + 1))
    if tok.startswith("linspace(") and tok.endswith(")"):
        a, b, n = tok[9:-1].split(",")
        return tuple(float(x) for x in np.linspace(_number(a), _number(b), int(n)))
    return tuple(_number(x) for x in tok.split(",") if x.strip())


def _bool(tok):
    t = tok.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {tok!r}")


def _matrix(tok):
    rows = [r for r in tok.split(";") if r.strip()]
    return tuple(tuple(_complex(x) for x in r.split(",")) for r in rows)


KEYS = {
    "kind": str,
    "curve.kind": str,
    "curve.radius": float,
    "curve.a": float,
    "curve.b": float,
    "curve.window": float,
    "curve.coefficients": _floats,
    "curve.flip": _bool,
    "eta": float,
    "tau": float,
    "lambda": float,
    "V": _matrix,
    "profile": str,
    "z": _complex,
    "m": float,
    "theta": int,
    "eps": _floats,
    "xi": _floats,
    "n": int,
    "nt": int,
    "n_scan": int,
    "p": int,
    "tol": float,
    "mode": str,
    "control": _bool,
    "seed": int,
    "samples": int,
    "points": _floats,
    "out": str,
}


def parse_config_text(text):
    """Raw ``{key: string}`` mapping of a flat key-value config."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        k, v = (x.strip() for x in line.split("=", 1))
        if k not in KEYS:
            raise ValueError(f"config line {lineno}: unknown key {k!r}")
        out[k] = v
    return out


@dataclass(frozen=True)
class StudyConfig:
    kind: str = "converge"
    curve_kind: str = "line"
    curve_radius: float = 1.0
    curve_a: float = 1.5
    curve_b: float = 1.0
    curve_window: float = 10.0
    curve_coefficients: tuple = (0.0,)
    curve_flip: bool = False
    eta: float = 0.5
    tau: float = 0.0
    lam: float = 0.0
    V: tuple = None
    profile: str = "indicator"
    z: complex = 0.2j
    m: float = 1.0
    theta: int = 2
    eps: tuple = tuple(2.0 ** -k for k in range(8, 21))
    xi: tuple = tuple(float(x) for x in np.linspace(-8, 8, 33))
    n: int = 128
    nt: int = 16
    n_scan: int = 128
    p: int = 16
    tol: float = 1e-8
    mode: str = "renormalized"
    control: bool = True
    seed: int = 0
    samples: int = 20
    points: tuple = (0.3, -0.2)
    out: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.mode not in ("renormalized", "naive"):
            raise ValueError("mode must be 'renormalized' or 'naive'")
        eps = np.asarray(self.eps, dtype=float)
        if eps.size and (np.any(eps <= 0) or np.any(np.diff(eps) >= 0)):
            raise ValueError("eps ladder must be positive and strictly decreasing")
        make_profile(self.profile)
        if eps.size and self.curve_kind in ("circle", "ellipse"):
            from .geometry import validate_tubular

            # the ladder must stay inside the validated tubular half-width
            validate_tubular(self.build_curve(), float(eps[0]))

    def to_dict(self):
        d = asdict(self)
        d["z"] = [self.z.real, self.z.imag]
        if self.V is not None:
            d["V"] = [[[c.real, c.imag] for c in row] for row in self.V]
        return d

    def digest(self):
        payload = {k: v for k, v in self.to_dict().items() if k != "out"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def build_curve(self):
        from .geometry import curve_from_config

        return curve_from_config({
            "curve.kind": self.curve_kind, "curve.radius": self.curve_radius, "curve.a": self.curve_a,
            "curve.b": self.curve_b, "curve.window": self.curve_window,
            "curve.coefficients": list(self.curve_coefficients), "curve.flip": self.curve_flip,
        })

    def potential(self, nu):
        """Constant coefficient matrix: explicit V or eta I + tau beta + lambda i(alpha.nu) beta."""
        rep = dirac_rep(self.theta)
        if self.V is not None:
            V = np.array(self.V, dtype=complex)
            if V.shape != (rep.n, rep.n):
                raise ValueError(f"V must be {rep.n}x{rep.n}")
            return V
        return family_matrix(self.eta, self.tau, self.lam, nu, rep)


def load_config(path=None, overrides=(), kind=None):
    """StudyConfig from an optional file plus ``key=value`` overrides."""
    raw = {}
    if path:
        with open(path) as fh:
            raw.update(parse_config_text(fh.read()))
    for item in overrides:
        raw.update(parse_config_text(item))
    if kind is not None:
        raw.setdefault("kind", kind)
        if raw["kind"] != kind:
            raise ValueError(f"config kind {raw['kind']!r} does not match subcommand {kind!r}")
    kw = {}
    for k, v in raw.items():
        name = {"lambda": "lam"}.get(k, k.replace(".", "_"))
        kw[name] = KEYS[k](v)
    return StudyConfig(**kw)


def output_dir(cli_value=None, cfg=None):
    d = cli_value or (cfg.out if cfg is not None else None) or os.environ.get(OUT_ENV) or "out"
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# rate fitting and convergence study
# ---------------------------------------------------------------------------
def rate_fit(samples):
    """OLS fit of log gap = slope log eps + intercept; returns (slope, intercept, r2)."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 3:
        raise ValueError("rate_fit needs at least 3 (eps, gap) samples")
    if np.any(s[:, 0] <= 0) or np.any(s[:, 1] <= 0):
        raise ValueError("rate_fit needs positive eps and gap values")
    x, y = np.log(s[:, 0]), np.log(s[:, 1])
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    sst = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / sst if sst > 0 else 1.0
    return float(slope), float(intercept), float(r2)


@dataclass
class ConvergenceReport:
    samples: list
    slope: float = None
    intercept: float = None
    r2: float = None
    degenerate: bool = False
    control: list = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "samples": [[float(e), float(g)] for e, g in self.samples],
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "degenerate": self.degenerate,
            "control": None if self.control is None else [[float(e), float(g)] for e, g in self.control],
            "metadata": self.metadata,
        }


# the HS norm comes from a sum of squares, so its noise floor is ~ sqrt(machine eps)
DEGENERATE_GAP = 1e-6


def run_converge(cfg):
    """Max-over-xi fiber gap for every eps of the ladder, plus the rate fit."""
    from .fiber import NU, fiber_resolvent_gap, line_b0_norm

    if cfg.curve_kind != "line":
        raise ValueError("the convergence study uses the straight-line fiber path (curve.kind = line)")
    if len(cfg.eps) < 1:
        raise ValueError("empty eps ladder")
    V = cfg.potential(NU)
    prof = make_profile(cfg.profile)

    def sweep(mode):
        out = []
        for e in cfg.eps:
            gaps = [fiber_resolvent_gap(x, e, cfg.z, cfg.m, V, p=cfg.p, prof=prof, mode=mode) for x in cfg.xi]
            out.append((e, max(gaps)))
        return out

    samples = sweep(cfg.mode)
    rep = ConvergenceReport(samples)
    gaps = np.array([g for _, g in samples])
    if not np.any(V) or np.all(gaps < DEGENERATE_GAP) or len(samples) < 3:
        rep.degenerate = True
    else:
        rep.slope, rep.intercept, rep.r2 = rate_fit(samples)
    if cfg.control and cfg.mode == "renormalized" and not rep.degenerate:
        rep.control = sweep("naive")
    vnorm = float(np.linalg.norm(V, 2))
    b0 = line_b0_norm(cfg.z, cfg.m, cfg.xi, cfg.nt)
    rep.metadata = {
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "versions": {"deltashell": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "quantity": "max over the xi-grid of the fiber Hilbert-Schmidt resolvent gap",
        "admissibility": {
            "V_norm_times_q_sup": vnorm * prof.q_sup,
            "inverse_B0_l2_fiber_proxy": 1.0 / b0,
            "below_proxy": bool(vnorm * prof.q_sup < 1.0 / b0),
        },
    }
    if rep.control is not None:
        rep.metadata["control_floor"] = float(rep.control[-1][1])
        rep.metadata["floor_ratio"] = float(rep.control[-1][1] / samples[-1][1])
    return rep


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------
def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def format_csv(report):
    lines = ["# deltashell convergence report"]
    d = report.to_dict() if isinstance(report, ConvergenceReport) else report
    for key in ("slope", "intercept", "r2", "degenerate"):
        v = d.get(key)
        lines.append(f"# {key}: {'none' if v is None else (format(v, '.16e') if isinstance(v, float) else v)}")
    sha = d.get("metadata", {}).get("config_sha256")
    if sha:
        lines.append(f"# config_sha256: {sha}")
    lines.append("epsilon,gap")
    for e, g in d["samples"]:
        lines.append(f"{e:.16e},{g:.16e}")
    return "\n".join(lines) + "\n"


def emit(report, fmt, path):
    """Write ``report`` as CSV (epsilon,gap) or JSON to ``path``."""
    if fmt == "csv":
        text = format_csv(report)
    elif fmt == "json":
        text = dumps_json(report.to_dict() if isinstance(report, ConvergenceReport) else report)
    else:
        raise ValueError("fmt must be 'csv' or 'json'")
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
