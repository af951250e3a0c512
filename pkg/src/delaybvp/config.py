"""Flat ``key = value`` problem configuration files.

Example::

    # u'' + lambda a(t) f(t, u(t - tau)) = 0
    alpha = 0.5
    beta = 0.5
    eta = 0.5
    tau = 0.25
    lambda = 1
    a = "1"
    f = "u/(1+u)+1"

Blank lines and ``#`` comments are ignored; string values may be quoted.
Relative output paths are resolved against the directory of the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import BvpError
from .expr import ExprError, Expression
from .fixedpoint import SolverConfig
from .greens import BvpParams

OUTPUT_KEYS = ("solution_csv", "report", "check_report", "sweep_csv")
DEFAULT_OUTPUTS = {
    "solution_csv": "solution.csv",
    "report": "solve_report.txt",
    "check_report": "check_report.txt",
    "sweep_csv": "sweep.csv",
}
FLOAT_KEYS = ("alpha", "beta", "eta", "tau", "lambda", "theta", "tol",
              "relaxation", "f0", "finf", "N")
INT_KEYS = ("n", "oracle_n", "max_iter")
KNOWN_KEYS = set(FLOAT_KEYS) | set(INT_KEYS) | set(OUTPUT_KEYS) | {"a", "f", "initial"}
REQUIRED_KEYS = ("alpha", "beta", "eta", "tau", "lambda", "a", "f")


class ConfigError(BvpError, ValueError):
    pass


@dataclass
class ProblemConfig:
    params: BvpParams
    a: Expression
    f: Expression
    theta: float = 0.25
    n: int = 512
    oracle_n: int = 1024
    solver: SolverConfig = None
    outputs: dict = None
    f0: Optional[float] = None
    finf: Optional[float] = None
    N: Optional[float] = None
    raw: dict = None

    def output(self, key: str) -> Path:
        return self.outputs[key]


def read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _number(key, text, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return value


def parse_config(pairs: dict, base_dir: Path = Path(".")) -> ProblemConfig:
    unknown = sorted(set(pairs) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED_KEYS if k not in pairs]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    num = {k: _number(k, pairs[k]) for k in FLOAT_KEYS if k in pairs}
    ints = {k: _number(k, pairs[k], int) for k in INT_KEYS if k in pairs}

    if not num["lambda"] > 0:
        raise ConfigError(f"lambda must be positive, got {pairs['lambda']!r}")
    try:
        params = BvpParams(alpha=num["alpha"], beta=num["beta"], eta=num["eta"],
                           tau=num["tau"], lam=num["lambda"])
    except BvpError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None
    theta = num.get("theta", 0.25)
    if not 0.0 < theta < 0.5:
        raise ConfigError(f"theta must satisfy 0 < theta < 1/2, got {theta!r}")
    n = ints.get("n", 512)
    oracle_n = ints.get("oracle_n", 1024)
    for key, value in (("n", n), ("oracle_n", oracle_n)):
        if value < 4 or value % 2:
            raise ConfigError(f"{key} must be an even integer >= 4, got {value!r}")

    try:
        a = Expression(pairs["a"], allowed_vars={"t"})
        f = Expression(pairs["f"], allowed_vars={"t", "u"})
    except ExprError as exc:
        raise ConfigError(f"expression error: {exc}") from None

    initial = pairs.get("initial", "zero")
    if initial != "zero":
        initial = _number("initial", initial)
    try:
        solver = SolverConfig(tol=num.get("tol", 1e-10),
                              max_iter=ints.get("max_iter", 500),
                              relaxation=num.get("relaxation", 1.0),
                              initial=initial)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    for key in ("f0", "finf", "N"):
        if key in num and num[key] < 0:
            raise ConfigError(f"{key} must be nonnegative, got {num[key]!r}")
    outputs = {k: base_dir / pairs.get(k, DEFAULT_OUTPUTS[k]) for k in OUTPUT_KEYS}
    return ProblemConfig(params=params, a=a, f=f, theta=theta, n=n,
                         oracle_n=oracle_n, solver=solver, outputs=outputs,
                         f0=num.get("f0"), finf=num.get("finf"), N=num.get("N"),
                         raw=dict(pairs))


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_config(read_pairs(text), path.parent)
