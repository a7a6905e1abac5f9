"""Flat ``key = value`` experiment configuration files.

Blank lines and ``#`` comments are ignored. Every problem is reported as
``<file>:<line>: <message>``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .basis import Scheme
from .eigensolver import SolverConfig
from .hamiltonian import CouplingSet
from .reduction import ReductionConfig


class ConfigError(ValueError):
    pass


def _scheme(text: str) -> Scheme:
    try:
        return Scheme(text.lower())
    except ValueError:
        raise ValueError(f"scheme must be 'su2' or 'so4', got {text!r}") from None


def _optional_float(text: str) -> float | None:
    return None if text.lower() in ("", "none") else float(text)


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("", "none") else int(text)


KEYS = {
    "scheme": _scheme,
    "L": int,
    "J_t": float,
    "J_l": float,
    "J_c": float,
    "M_tot": int,
    "k": int,
    "tol": float,
    "max_iter": _optional_int,
    "seed": int,
    "dense_threshold": int,
    "epsilon": float,
    "n_floor": int,
    "p1_abort": float,
    "g_jump_abort": float,
    "no_root_run": int,
    "lambda_target": _optional_float,
    "elimination_order": str,
    "output": str,
}
REQUIRED = ("scheme", "L", "J_t", "J_l", "J_c")


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: Scheme
    L: int
    couplings: CouplingSet
    M_tot: int
    solver: SolverConfig
    reduction: ReductionConfig
    output: Path | None
    source: str = "<config>"

    def with_rung_coupling(self, J_t: float) -> "ExperimentConfig":
        couplings = CouplingSet(J_t, self.couplings.J_l, self.couplings.J_c)
        return replace(
            self, couplings=couplings, reduction=replace(self.reduction, couplings=couplings)
        )


def bundled_configs() -> list[str]:
    root = resources.files("ladder_reduction") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve(name_or_path: str) -> tuple[str, str]:
    """Return ``(source_name, text)`` for a file path or a bundled config name."""
    path = Path(name_or_path)
    if path.is_file():
        return str(path), path.read_text(encoding="utf-8")
    stem = name_or_path[:-4] if name_or_path.endswith(".cfg") else name_or_path
    bundled = resources.files("ladder_reduction") / "configs" / f"{stem}.cfg"
    if bundled.is_file():
        return f"{stem}.cfg", bundled.read_text(encoding="utf-8")
    raise ConfigError(f"{name_or_path}: no such config file or bundled config")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {lines[key]})")
        try:
            values[key] = KEYS[key](value)
        except ValueError as err:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {err}") from None
        lines[key] = lineno
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key(s): {', '.join(missing)}")

    def fail(keys: tuple[str, ...], err: Exception) -> ConfigError:
        where = min((lines[k] for k in keys if k in lines), default=None)
        prefix = f"{source}:{where}" if where else source
        return ConfigError(f"{prefix}: {err}")

    try:
        couplings = CouplingSet(values["J_t"], values["J_l"], values["J_c"])
    except ValueError as err:
        raise fail(("J_t", "J_l", "J_c"), err) from None
    solver_keys = ("k", "tol", "max_iter", "seed", "dense_threshold")
    try:
        solver = SolverConfig(**{k: values[k] for k in solver_keys if k in values})
    except ValueError as err:
        raise fail(solver_keys, err) from None
    L, M_tot = values["L"], values.get("M_tot", 0)
    if L < 1 or abs(M_tot) > L:
        raise fail(("L", "M_tot"), ValueError(f"empty sector for L={L}, M_tot={M_tot}"))
    red_keys = ("epsilon", "n_floor", "p1_abort", "g_jump_abort", "no_root_run",
                "lambda_target", "elimination_order")
    try:
        reduction = ReductionConfig(
            scheme=values["scheme"], L=L, couplings=couplings, M_tot=M_tot, solver=solver,
            **{k: values[k] for k in red_keys if k in values},
        )
    except ValueError as err:
        raise fail(red_keys, err) from None
    output = Path(values["output"]) if "output" in values else None
    return ExperimentConfig(values["scheme"], L, couplings, M_tot, solver, reduction, output, source)


def load_config(name_or_path: str) -> ExperimentConfig:
    source, text = resolve(name_or_path)
    return parse_config(text, source)
