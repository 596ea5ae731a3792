"""Plain-text ``key = value`` run configuration.

One key per line; blank lines and lines starting with ``#`` are ignored.
Lists are comma separated.  Tabulated functions (gronwall ``a_i``, ``b``,
``g``) are written as ``t:v, t:v, ...``; ``a_i`` holds one entry per kernel,
separated by ``;``.  Unknown or duplicated keys are errors, and every
problem found is reported together before anything runs.

Schema (``*`` = required)::

    solve       problem*, alpha*, alpha_i, beta1*, beta2*, seed*, n_steps*,
                paths=1, quad_order=16, compensated=false, workers=1,
                output_dir=out, [linear_test: coef_f, coef_g0, coef_g1,
                coef_g2, z0=1, horizon=1]
    converge    as solve without n_steps, plus levels=32,64,128,256,512,
                paths=1000, shared_paths=false
    gronwall    alpha*, alpha_i, a_i, b*, g*, horizon*, times*, k_max=120,
                tail_tol=1e-12, quad_order=32, workers=1, output_dir=out
    quadrature  exponent_a*, exponent_b*, quad_order=16, workers=1,
                output_dir=out
"""

from dataclasses import dataclass, fields, replace
import math

from .errors import ConfigError
from .model import _order_problems, example1, linear_test
from .quadrature import MAX_NODES

__all__ = ["RunConfig", "parse_config", "parse_text", "emit", "build_problem",
           "SUBCOMMANDS", "PROBLEMS"]

SUBCOMMANDS = ("solve", "converge", "gronwall", "quadrature")
PROBLEMS = ("example1", "linear_test")
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    problem: str = None
    alpha: float = None
    alpha_i: tuple = None
    beta1: float = None
    beta2: float = None
    coef_f: tuple = None
    coef_g0: float = None
    coef_g1: float = None
    coef_g2: float = None
    z0: float = None
    horizon: float = None
    n_steps: int = None
    levels: tuple = None
    paths: int = None
    shared_paths: bool = None
    seed: int = None
    quad_order: int = None
    compensated: bool = None
    a_i: tuple = None
    b: object = None
    g: object = None
    times: tuple = None
    k_max: int = None
    tail_tol: float = None
    exponent_a: float = None
    exponent_b: float = None
    workers: int = 1
    output_dir: str = "out"


_LINEAR_KEYS = {"coef_f", "coef_g0", "coef_g1", "coef_g2", "z0", "horizon"}
_PROBLEM_KEYS = {"problem", "alpha", "alpha_i", "beta1", "beta2", "seed",
                 "quad_order", "compensated"} | _LINEAR_KEYS
_COMMON = {"subcommand", "workers", "output_dir"}
_ALLOWED = {
    "solve": _COMMON | _PROBLEM_KEYS | {"n_steps", "paths"},
    "converge": _COMMON | _PROBLEM_KEYS | {"levels", "paths", "shared_paths"},
    "gronwall": _COMMON | {"alpha", "alpha_i", "a_i", "b", "g", "horizon", "times",
                           "k_max", "tail_tol", "quad_order"},
    "quadrature": _COMMON | {"exponent_a", "exponent_b", "quad_order"},
}
_REQUIRED = {
    "solve": ("problem", "alpha", "beta1", "beta2", "seed", "n_steps"),
    "converge": ("problem", "alpha", "beta1", "beta2", "seed"),
    "gronwall": ("alpha", "b", "g", "horizon", "times"),
    "quadrature": ("exponent_a", "exponent_b"),
}
_DEFAULTS = {
    "solve": {"alpha_i": (), "paths": 1, "quad_order": 16, "compensated": False},
    "converge": {"alpha_i": (), "paths": 1000, "quad_order": 16, "compensated": False,
                 "levels": (32, 64, 128, 256, 512), "shared_paths": False},
    "gronwall": {"alpha_i": (), "a_i": (), "k_max": 120, "tail_tol": 1e-12,
                 "quad_order": 32},
    "quadrature": {"quad_order": 16},
}
_LINEAR_DEFAULTS = {"coef_g0": 0.0, "coef_g1": 0.0, "coef_g2": 0.0, "z0": 1.0,
                    "horizon": 1.0}

_INT_KEYS = {"seed", "n_steps", "paths", "quad_order", "k_max", "workers"}
_FLOAT_KEYS = {"alpha", "beta1", "beta2", "coef_g0", "coef_g1", "coef_g2", "z0",
               "horizon", "tail_tol", "exponent_a", "exponent_b"}
_FLOAT_LIST_KEYS = {"alpha_i", "coef_f", "times"}
_BOOL_KEYS = {"compensated", "shared_paths"}
_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _parse_int(text):
    value = int(text, 0)
    return value


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not a finite number")
    return value


def _parse_function(text):
    """Number, or a table ``t:v, t:v`` returned as a tuple of pairs."""
    text = text.strip()
    if ":" not in text:
        return _parse_float(text)
    pairs = []
    for item in text.split(","):
        t, v = item.split(":")
        pairs.append((_parse_float(t), _parse_float(v)))
    return tuple(sorted(pairs))


def _parse_value(key, text):
    if key in _INT_KEYS:
        return _parse_int(text)
    if key in _FLOAT_KEYS:
        return _parse_float(text)
    if key in _FLOAT_LIST_KEYS:
        return tuple(_parse_float(x) for x in text.split(",") if x.strip())
    if key == "levels":
        return tuple(_parse_int(x) for x in text.split(",") if x.strip())
    if key in _BOOL_KEYS:
        low = text.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError("expected true or false")
    if key in ("b", "g"):
        return _parse_function(text)
    if key == "a_i":
        return tuple(_parse_function(x) for x in text.split(";") if x.strip())
    return text.strip()


def _read_pairs(text, problems):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            problems.append((f"line {lineno}", f"expected key = value, got {raw!r}"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in pairs:
            problems.append((key, f"duplicate key on line {lineno}"))
            continue
        pairs[key] = value
    return pairs


def parse_text(text, subcommand, overrides=None):
    """Parse and validate configuration text for ``subcommand``.

    ``overrides`` (seed, output_dir, workers from the command line) replace
    file values before validation.

    Raises:
        ConfigError: listing every invalid, missing or unknown field.
    """
    problems = []
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([("subcommand", f"unknown subcommand {subcommand!r}")])
    raw = _read_pairs(text, problems)
    allowed = _ALLOWED[subcommand]
    values = {}
    for key, text_value in raw.items():
        if key not in allowed:
            problems.append((key, f"unknown key for {subcommand}"))
            continue
        try:
            values[key] = _parse_value(key, text_value)
        except ValueError:
            problems.append((key, f"cannot parse value {text_value!r}"))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    if values.get("subcommand", subcommand) != subcommand:
        problems.append(("subcommand", f"config is for {values['subcommand']!r}, "
                                       f"not {subcommand!r}"))
    values["subcommand"] = subcommand
    for key in _REQUIRED[subcommand]:
        if key not in values and not any(f == key for f, _ in problems):
            problems.append((key, "required field is missing"))
    for key, value in _DEFAULTS[subcommand].items():
        values.setdefault(key, value)
    if values.get("problem") == "linear_test":
        for key, value in _LINEAR_DEFAULTS.items():
            values.setdefault(key, value)
        values.setdefault("coef_f", (0.0,) * len(values.get("alpha_i", ())))

    # fields that are missing or unparsable are skipped by the value checks
    problems.extend(_validate(subcommand, values))
    if problems:
        raise ConfigError(problems)
    return RunConfig(**values)


def parse_config(path, subcommand, overrides=None):
    """Read ``path`` and validate it; see ``parse_text``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([("config", f"cannot read {path}: {exc.strerror or exc}")]) from None
    return parse_text(text, subcommand, overrides)


def _positive_int(values, key, problems, upper=None):
    v = values.get(key)
    if v is None:
        return
    if v < 1 or (upper is not None and v > upper):
        bound = f"[1, {upper}]" if upper is not None else "a positive integer"
        problems.append((key, f"{key} must be {bound}, got {v!r}"))


def _validate(subcommand, v):
    problems = []

    def has(*keys):
        return all(k in v for k in keys)

    _positive_int(v, "workers", problems)
    if subcommand in ("solve", "converge"):
        if has("problem") and v["problem"] not in PROBLEMS:
            problems.append(("problem", f"problem must be one of {', '.join(PROBLEMS)}, "
                                        f"got {v['problem']!r}"))
        if has("alpha", "alpha_i", "beta1", "beta2"):
            problems.extend(_order_problems(v["alpha"], v["alpha_i"], v["beta1"], v["beta2"]))
        if v.get("problem") == "example1":
            for k in sorted(k for k in _LINEAR_KEYS if k in v):
                problems.append((k, "only valid for problem linear_test"))
            if has("alpha_i") and len(v["alpha_i"]) != 1:
                problems.append(("alpha_i", "example1 needs exactly one alpha_i"))
        elif v.get("problem") == "linear_test":
            if has("coef_f", "alpha_i") and len(v["coef_f"]) != len(v["alpha_i"]):
                problems.append(("coef_f", "coef_f needs one value per alpha_i"))
            if has("horizon") and not v["horizon"] > 0:
                problems.append(("horizon", f"horizon must be positive, got {v['horizon']!r}"))
        if has("seed") and not (0 <= v["seed"] <= _U64):
            problems.append(("seed", f"seed must be an unsigned 64-bit integer, got {v['seed']!r}"))
        _positive_int(v, "quad_order", problems, MAX_NODES)
        _positive_int(v, "paths", problems)
    if subcommand == "solve":
        _positive_int(v, "n_steps", problems)
    if subcommand == "converge" and has("levels"):
        levels = v["levels"]
        if len(levels) < 3:
            problems.append(("levels", "at least three levels are needed"))
        elif levels[0] < 1 or any(b != 2 * a for a, b in zip(levels, levels[1:])):
            problems.append(("levels", f"levels must be positive and doubling, got {levels!r}"))
    if subcommand == "gronwall":
        if has("alpha") and not (0 < v["alpha"] <= 1):
            problems.append(("alpha", f"alpha must lie in (0, 1], got {v['alpha']!r}"))
        for i, a in enumerate(v.get("alpha_i", ()), start=1):
            if not (0 < a <= 1):
                problems.append(("alpha_i", f"alpha_{i} must lie in (0, 1], got {a!r}"))
        if has("a_i", "alpha_i") and len(v["a_i"]) != len(v["alpha_i"]):
            problems.append(("a_i", "a_i needs one entry per alpha_i"))
        if has("horizon") and not v["horizon"] > 0:
            problems.append(("horizon", f"horizon must be positive, got {v['horizon']!r}"))
        if has("times", "horizon"):
            for t in v["times"]:
                if not (0 < t < v["horizon"]):
                    problems.append(("times", f"query time {t!r} is not in (0, horizon)"))
        for key in ("b", "g"):
            if has(key) and _function_min(v[key]) < 0:
                problems.append((key, f"{key} must be non-negative"))
        if any(_function_min(a) < 0 for a in v.get("a_i", ())):
            problems.append(("a_i", "a_i must be non-negative"))
        _positive_int(v, "k_max", problems)
        if has("tail_tol") and not v["tail_tol"] > 0:
            problems.append(("tail_tol", f"tail_tol must be positive, got {v['tail_tol']!r}"))
        _positive_int(v, "quad_order", problems, MAX_NODES)
    if subcommand == "quadrature":
        for key in ("exponent_a", "exponent_b"):
            if has(key) and not v[key] > -1:
                problems.append((key, f"{key} must exceed -1, got {v[key]!r}"))
        _positive_int(v, "quad_order", problems, MAX_NODES)
    return problems


def _function_min(spec):
    if isinstance(spec, tuple):
        return min(val for _, val in spec)
    return spec


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple) and len(value[0]) == 2 \
                and not isinstance(value[0][0], tuple):
            return ", ".join(f"{t!r}:{v!r}" for t, v in value)
        return ",".join(_format(x) for x in value)
    return str(value)


def emit(config):
    """Serialise a RunConfig so that ``parse_text(emit(c), c.subcommand) == c``."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        if f.name == "a_i":
            text = "; ".join(_format(x) for x in value)
        else:
            text = _format(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def build_problem(config):
    """ProblemSpec selected by a solve/converge config."""
    if config.problem == "example1":
        return example1(config.alpha, config.alpha_i[0], config.beta1, config.beta2)
    return linear_test(config.alpha, config.alpha_i, config.beta1, config.beta2,
                       coef_f=config.coef_f, coef_g0=config.coef_g0,
                       coef_g1=config.coef_g1, coef_g2=config.coef_g2,
                       z0=config.z0, horizon=config.horizon)


def with_overrides(config, **kwargs):
    return replace(config, **{k: v for k, v in kwargs.items() if v is not None})
