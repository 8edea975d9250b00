"""Run parameters and the function-combination expression language.

Component names (kernels ``k*``, criteria ``c*``, surrogates ``s*``, mean
bases ``m*``) are combined with a tiny expression grammar::

    expr := NAME | NAME '(' expr (',' expr)* ')'

Identifiers match ``[A-Za-z][A-Za-z0-9]*``.  Run configuration is a flat
``key = value`` document (a TOML-compatible subset: numbers, quoted strings,
number arrays, ``#`` comments).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from typing import Iterable

from .errors import (
    ArityError,
    DimensionMismatchError,
    DuplicateKeyError,
    ExpressionSyntaxError,
    RangeError,
    TypeMismatchError,
    UnknownIdentifierError,
    UnknownKeyError,
)

__all__ = [
    "SpecTree",
    "ComponentInfo",
    "REGISTRY",
    "parse_expression",
    "render_expression",
    "Params",
    "default_params",
    "parse_params",
    "params_from_mapping",
    "render_params",
    "kernel_param_count",
    "validate_params",
]


@dataclass(frozen=True)
class SpecTree:
    """Parsed expression node: an identifier plus child subtrees."""

    node: str
    children: tuple["SpecTree", ...] = ()

    def render(self) -> str:
        if not self.children:
            return self.node
        return f"{self.node}({','.join(c.render() for c in self.children)})"


@dataclass(frozen=True)
class ComponentInfo:
    kind: str  # "kernel" | "criterion" | "surrogate" | "mean"
    min_children: int
    max_children: int | None  # None = unbounded
    n_params: int = 0  # kernel hyperparameters owned by this leaf


# Leaf kernels are unit-signal: k(x, x) = 1 (except kConst, whose single
# parameter IS its value).  Signal variance lives in the surrogate.
REGISTRY: dict[str, ComponentInfo] = {
    # kernels
    "kMaternISO1": ComponentInfo("kernel", 0, 0, n_params=1),
    "kMaternISO3": ComponentInfo("kernel", 0, 0, n_params=1),
    "kMaternISO5": ComponentInfo("kernel", 0, 0, n_params=1),
    "kSEISO": ComponentInfo("kernel", 0, 0, n_params=1),
    "kRQISO": ComponentInfo("kernel", 0, 0, n_params=2),  # (length-scale, shape)
    "kConst": ComponentInfo("kernel", 0, 0, n_params=1),
    "kSum": ComponentInfo("kernel", 2, 2),
    "kProd": ComponentInfo("kernel", 2, 2),
    # criteria
    "cEI": ComponentInfo("criterion", 0, 0),
    "cLCB": ComponentInfo("criterion", 0, 0),
    "cPOI": ComponentInfo("criterion", 0, 0),
    "cThompsonSampling": ComponentInfo("criterion", 0, 0),
    "cHedge": ComponentInfo("criterion", 2, None),
    # surrogates
    "sGaussianProcess": ComponentInfo("surrogate", 0, 0),
    "sStudentTProcessNIG": ComponentInfo("surrogate", 0, 0),
    # mean bases
    "mZero": ComponentInfo("mean", 0, 0),
    "mConst": ComponentInfo("mean", 0, 0),
    "mLinear": ComponentInfo("mean", 0, 0),
}

_TOKEN_RE = re.compile(r"\s*([A-Za-z][A-Za-z0-9]*|[(),])")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionSyntaxError(
                f"bad token at position {pos}: {text[pos:pos + 10]!r}"
            )
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def parse_expression(text: str) -> SpecTree:
    """Parse a combination expression into a validated :class:`SpecTree`.

    Raises :class:`UnknownIdentifierError` for unregistered names,
    :class:`ArityError` for a wrong child count and
    :class:`ExpressionSyntaxError` for malformed input.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression")
    tokens = _tokenize(text)
    tree, rest = _parse_expr(tokens, 0)
    if rest != len(tokens):
        raise ExpressionSyntaxError(f"trailing tokens: {tokens[rest:]}")
    return tree


def _parse_expr(tokens: list[str], pos: int) -> tuple[SpecTree, int]:
    if pos >= len(tokens):
        raise ExpressionSyntaxError("unexpected end of expression")
    name = tokens[pos]
    if name in "(),":
        raise ExpressionSyntaxError(f"expected identifier, got {name!r}")
    info = REGISTRY.get(name)
    if info is None:
        raise UnknownIdentifierError(f"unknown component: {name!r}")
    pos += 1
    children: list[SpecTree] = []
    if pos < len(tokens) and tokens[pos] == "(":
        pos += 1
        while True:
            child, pos = _parse_expr(tokens, pos)
            children.append(child)
            if pos >= len(tokens):
                raise ExpressionSyntaxError(f"unbalanced parentheses in {name!r}")
            if tokens[pos] == ",":
                pos += 1
                continue
            if tokens[pos] == ")":
                pos += 1
                break
            raise ExpressionSyntaxError(f"expected ',' or ')', got {tokens[pos]!r}")
    _check_arity(name, info, len(children))
    tree = SpecTree(name, tuple(children))
    _check_kinds(tree, info)
    return tree, pos


def _check_arity(name: str, info: ComponentInfo, n: int) -> None:
    if n < info.min_children or (info.max_children is not None and n > info.max_children):
        if info.max_children == 0:
            want = "no children"
        elif info.max_children is None:
            want = f">= {info.min_children} children"
        elif info.min_children == info.max_children:
            want = f"exactly {info.min_children} children"
        else:
            want = f"{info.min_children}..{info.max_children} children"
        raise ArityError(f"{name} takes {want}, got {n}")


def _check_kinds(tree: SpecTree, info: ComponentInfo) -> None:
    # Combinators only combine their own kind; cHedge children must be
    # plain criteria (no nested portfolios).
    for child in tree.children:
        child_kind = REGISTRY[child.node].kind
        if child_kind != info.kind:
            raise ArityError(
                f"{tree.node} cannot contain {child.node} ({child_kind} inside {info.kind})"
            )
        if tree.node == "cHedge" and child.node == "cHedge":
            raise ArityError("cHedge cannot be nested inside cHedge")


def render_expression(tree: SpecTree) -> str:
    return tree.render()


@lru_cache(maxsize=256)
def _cached_parse(text: str) -> SpecTree:
    return parse_expression(text)


def kernel_param_count(tree: SpecTree) -> int:
    """Number of kernel hyperparameters, counted over leaves in tree order."""
    info = REGISTRY[tree.node]
    if not tree.children:
        return info.n_params
    return sum(kernel_param_count(c) for c in tree.children)


L_TYPES = ("ML", "MAP", "MCMC")
SC_TYPES = ("SC_ML", "SC_MAP")
INIT_METHODS = ("LHS", "SOBOL", "UNIFORM")
VERBOSE_LEVELS = ("quiet", "info", "debug")


@dataclass(frozen=True)
class Params:
    """Full run configuration.  Every field has a usable default.

    ``kernel_hp_mean``/``kernel_hp_std`` parameterize independent log-normal
    hyperpriors over the kernel parameters (std is in log space) and must
    match the parsed kernel's parameter count.
    """

    surr_name: str = "sGaussianProcess"
    crit_name: str = "cEI"
    kernel_name: str = "kMaternISO5"
    mean_name: str = "mConst"
    kernel_hp_mean: tuple[float, ...] = (1.0,)
    kernel_hp_std: tuple[float, ...] = (5.0,)
    prior_alpha: float = 1.0
    prior_beta: float = 1.0
    mean_w0: tuple[float, ...] = (0.0,)
    mean_w_scale: float = 10.0
    noise: float = 1e-6
    l_type: str = "MAP"
    sc_type: str = "SC_MAP"
    learn_frequency: int = 20
    n_iterations: int = 190
    n_init_samples: int = 10
    init_method: str = "LHS"
    n_inner_global_evals: int = 1000
    n_inner_local_evals: int = 200
    epsilon: float = 0.0
    hedge_eta: float = 1.0
    lcb_kappa: float = 2.0
    mcmc_particles: int = 10
    mcmc_burnin: int = 100
    random_seed: int = 42
    verbose: str = "quiet"


def default_params() -> Params:
    """All-defaults configuration (200 total evaluations: 10 init + 190)."""
    return Params()


_POSITIVE_INT = {
    "learn_frequency",
    "n_iterations",
    "n_init_samples",
    "n_inner_global_evals",
    "n_inner_local_evals",
    "mcmc_particles",
    "mcmc_burnin",
}
_POSITIVE_REAL = {"prior_alpha", "prior_beta", "mean_w_scale", "hedge_eta", "lcb_kappa"}
_ENUMS = {
    "l_type": L_TYPES,
    "sc_type": SC_TYPES,
    "init_method": INIT_METHODS,
    "verbose": VERBOSE_LEVELS,
}
_EXPRESSION_KIND = {
    "surr_name": "surrogate",
    "crit_name": "criterion",
    "kernel_name": "kernel",
    "mean_name": "mean",
}


def validate_params(params: Params) -> Params:
    """Check every field's type/range and cross-field consistency."""
    for f in fields(Params):
        value = getattr(params, f.name)
        if f.name in _EXPRESSION_KIND:
            if not isinstance(value, str):
                raise TypeMismatchError(f"{f.name} must be a string")
            tree = _cached_parse(value)
            kind = REGISTRY[tree.node].kind
            if kind != _EXPRESSION_KIND[f.name]:
                raise TypeMismatchError(
                    f"{f.name} must be a {_EXPRESSION_KIND[f.name]} expression, "
                    f"got {kind} {value!r}"
                )
        elif f.name in ("kernel_hp_mean", "kernel_hp_std", "mean_w0"):
            if not isinstance(value, tuple) or not all(
                isinstance(v, float) for v in value
            ):
                raise TypeMismatchError(f"{f.name} must be a list of numbers")
            if f.name != "mean_w0" and any(v <= 0 or v != v for v in value):
                raise RangeError(f"{f.name} entries must be positive reals")
        elif f.name in _POSITIVE_INT:
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeMismatchError(f"{f.name} must be an integer")
            if f.name == "n_iterations":
                if value < 0:
                    raise RangeError(f"{f.name} must be >= 0")
            elif value < 1:
                raise RangeError(f"{f.name} must be >= 1")
        elif f.name in _POSITIVE_REAL:
            if not isinstance(value, float):
                raise TypeMismatchError(f"{f.name} must be a number")
            if not value > 0:
                raise RangeError(f"{f.name} must be > 0")
        elif f.name == "noise":
            if not isinstance(value, float):
                raise TypeMismatchError("noise must be a number")
            if value < 0:
                raise RangeError("noise must be >= 0")
        elif f.name == "epsilon":
            if not isinstance(value, float):
                raise TypeMismatchError("epsilon must be a number")
            if not 0.0 <= value <= 1.0:
                raise RangeError(f"epsilon must be in [0, 1], got {value}")
        elif f.name == "random_seed":
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeMismatchError("random_seed must be an integer")
            if not 0 <= value < 2**64:
                raise RangeError("random_seed must fit in 64 unsigned bits")
        elif f.name in _ENUMS:
            if not isinstance(value, str):
                raise TypeMismatchError(f"{f.name} must be a string")
            if value not in _ENUMS[f.name]:
                raise RangeError(f"{f.name} must be one of {_ENUMS[f.name]}, got {value!r}")
    n_kp = kernel_param_count(_cached_parse(params.kernel_name))
    if len(params.kernel_hp_mean) != n_kp or len(params.kernel_hp_std) != n_kp:
        raise DimensionMismatchError(
            f"kernel {params.kernel_name!r} has {n_kp} parameters; "
            f"kernel_hp_mean/kernel_hp_std have lengths "
            f"{len(params.kernel_hp_mean)}/{len(params.kernel_hp_std)}"
        )
    return params


def params_from_mapping(mapping: dict) -> Params:
    """Build a validated Params from a plain mapping; absent keys take defaults."""
    known = {f.name: f for f in fields(Params)}
    values = {}
    for key, raw in mapping.items():
        if key not in known:
            raise UnknownKeyError(f"unknown parameter: {key!r}")
        values[key] = _coerce(key, raw)
    return validate_params(replace(Params(), **values))


def _coerce(key: str, raw) -> object:
    if key in ("kernel_hp_mean", "kernel_hp_std", "mean_w0"):
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return (float(raw),)
        if isinstance(raw, (list, tuple)):
            out = []
            for v in raw:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise TypeMismatchError(f"{key} entries must be numbers")
                out.append(float(v))
            return tuple(out)
        raise TypeMismatchError(f"{key} must be a number list")
    if key in _POSITIVE_INT or key == "random_seed":
        if isinstance(raw, bool):
            raise TypeMismatchError(f"{key} must be an integer")
        if isinstance(raw, int):
            return raw
        if isinstance(raw, float) and raw.is_integer():
            return int(raw)
        raise TypeMismatchError(f"{key} must be an integer, got {raw!r}")
    if key in _POSITIVE_REAL or key in ("noise", "epsilon"):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise TypeMismatchError(f"{key} must be a number, got {raw!r}")
        return float(raw)
    if not isinstance(raw, str):
        raise TypeMismatchError(f"{key} must be a string, got {raw!r}")
    return raw


_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_BARE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_()+,.\- ]*$")


def parse_params(doc: str) -> Params:
    """Parse a flat ``key = value`` document into a validated Params.

    Supported values: numbers, quoted strings, bare identifiers/expressions,
    and ``[a, b, ...]`` number arrays.  ``#`` starts a comment.  Unknown and
    duplicate keys are hard errors.
    """
    mapping: dict[str, object] = {}
    for lineno, raw_line in enumerate(doc.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ExpressionSyntaxError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ExpressionSyntaxError(f"line {lineno}: bad key {key!r}")
        if key in mapping:
            raise DuplicateKeyError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ExpressionSyntaxError(f"line {lineno}: missing value for {key!r}")
        mapping[key] = _parse_value(value, lineno)
    return params_from_mapping(mapping)


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def _parse_value(text: str, lineno: int):
    if text.startswith("["):
        if not text.endswith("]"):
            raise ExpressionSyntaxError(f"line {lineno}: unterminated array")
        body = text[1:-1].strip()
        if not body:
            return ()
        items = [item.strip() for item in body.split(",")]
        values = []
        for item in items:
            if not _NUMBER_RE.match(item):
                raise TypeMismatchError(f"line {lineno}: array entry {item!r} is not a number")
            values.append(float(item))
        return values
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if _NUMBER_RE.match(text):
        as_float = float(text)
        if re.match(r"^[+-]?\d+$", text):
            return int(text)
        return as_float
    if _BARE_RE.match(text):
        return text.strip()
    raise ExpressionSyntaxError(f"line {lineno}: cannot parse value {text!r}")


def render_params(params: Params, keys: Iterable[str] | None = None) -> str:
    """Serialize parameters back to the flat document format."""
    lines = []
    for f in fields(Params):
        if keys is not None and f.name not in keys:
            continue
        value = getattr(params, f.name)
        if isinstance(value, tuple):
            lines.append(f"{f.name} = [{', '.join(repr(v) for v in value)}]")
        elif isinstance(value, str):
            lines.append(f'{f.name} = "{value}"')
        else:
            lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"
