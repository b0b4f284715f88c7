"""Run configuration: a sectioned ``key = value`` text file.

Example::

    [geometry]
    centers = -0.18+0.2j, 0.33-0.34j
    radii = 0.145

    [matrix]
    trapezoid = -2, 2, 4.5, 13.5

    [inclusion]
    trapezoid = -2, 2, 50, 150

A profile is given either as ``trapezoid = x1, x2, y_lo, y_hi`` or as
``breakpoints`` plus ``values``.  Additional inclusion profiles go in
sections ``[inclusion.1]``, ``[inclusion.2]`` and are selected per disk with
``contrast_ids`` in ``[geometry]``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .cell_solver import DEFAULT_ORDER, DEFAULT_TOL, MAX_ORDER
from .conductivity import ConductivityProfile, ContrastFamily
from .geometry import CellGeometry, validate

BUNDLED = ("reference", "empty", "constant")


class ConfigError(ValueError):
    """A configuration file could not be turned into valid inputs."""


@dataclass(frozen=True)
class ProfileSpec:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    trapezoid: tuple[float, float, float, float] | None = None

    def build(self) -> ConductivityProfile:
        return ConductivityProfile(self.breakpoints, self.values)


@dataclass(frozen=True)
class RunConfig:
    centers: tuple[complex, ...] = ()
    radii: tuple[float, ...] = ()
    contrast_ids: tuple[int, ...] = ()
    matrix: ProfileSpec = field(default_factory=lambda: ProfileSpec((0.0,), (1.0,)))
    inclusions: tuple[ProfileSpec, ...] = ()
    flux_intensity: float = -1.0
    flux_angle: float = 0.0
    order: int = DEFAULT_ORDER
    tol: float = DEFAULT_TOL
    adaptive: bool = True
    max_order: int = MAX_ORDER
    shift_range: tuple[float, float] | None = None  # None: automatic
    samples: int = 81
    interpolation: str = "pchip"
    cells: tuple[tuple[int, int], tuple[int, int]] | None = None  # None: the two lattice axes
    equivalence_tol: float = 1e-4
    fd_grid: int = 512
    fd_tensor_tol: float = 1e-2
    field_margin: float = 0.05
    field_tol: float = 1e-2
    residual_grids: tuple[int, int] = (128, 256)
    residual_margin: float = 0.05
    residual_ratio: tuple[float, float] = (3.5, 4.5)
    interface_tol: float = 1e-6
    output_dir: str = "out"
    svg: bool = False
    source: str = field(default="", compare=False)

    # -- derived module inputs -------------------------------------------------

    def geometry(self) -> CellGeometry:
        ids = self.contrast_ids or (0,) * len(self.centers)
        return CellGeometry.from_arrays(list(self.centers), list(self.radii), list(ids))

    def family(self) -> ContrastFamily:
        return ContrastFamily(self.matrix.build(), tuple(p.build() for p in self.inclusions))

    def solver_options(self) -> dict:
        return {
            "truncation_order": self.order,
            "tol": self.tol,
            "max_order": self.max_order if self.adaptive else self.order,
        }

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)

    # -- text form --------------------------------------------------------------

    def to_text(self) -> str:
        lines = ["[geometry]"]
        lines.append("centers = " + ", ".join(_fmt_complex(c) for c in self.centers))
        lines.append("radii = " + ", ".join(repr(float(r)) for r in self.radii))
        if self.contrast_ids:
            lines.append("contrast_ids = " + ", ".join(str(k) for k in self.contrast_ids))
        lines += ["", "[matrix]"] + _profile_lines(self.matrix)
        for k, p in enumerate(self.inclusions):
            lines += ["", "[inclusion]" if k == 0 else f"[inclusion.{k}]"] + _profile_lines(p)
        lines += [
            "",
            "[flux]",
            f"intensity = {self.flux_intensity!r}",
            f"angle = {self.flux_angle!r}",
            "",
            "[solver]",
            f"order = {self.order}",
            f"tol = {self.tol!r}",
            f"adaptive = {str(self.adaptive).lower()}",
            f"max_order = {self.max_order}",
            "",
            "[sweep]",
            "shifts = " + ("auto" if self.shift_range is None else f"{self.shift_range[0]!r}, {self.shift_range[1]!r}"),
            f"samples = {self.samples}",
            f"interpolation = {self.interpolation}",
            "cells = " + ("auto" if self.cells is None else
                          f"{self.cells[0][0]}:{self.cells[0][1]}, {self.cells[1][0]}:{self.cells[1][1]}"),
            f"equivalence_tol = {self.equivalence_tol!r}",
            "",
            "[verify]",
            f"grid = {self.fd_grid}",
            f"tensor_tol = {self.fd_tensor_tol!r}",
            f"field_margin = {self.field_margin!r}",
            f"field_tol = {self.field_tol!r}",
            f"residual_grids = {self.residual_grids[0]}, {self.residual_grids[1]}",
            f"residual_margin = {self.residual_margin!r}",
            f"residual_ratio = {self.residual_ratio[0]!r}, {self.residual_ratio[1]!r}",
            f"interface_tol = {self.interface_tol!r}",
            "",
            "[output]",
            f"directory = {self.output_dir}",
            f"svg = {str(self.svg).lower()}",
            "",
        ]
        return "\n".join(lines)


def _fmt_complex(c: complex) -> str:
    c = complex(c)
    return f"{c.real!r}{c.imag:+}j"


def _profile_lines(p: ProfileSpec) -> list[str]:
    if p.trapezoid is not None:
        return ["trapezoid = " + ", ".join(repr(float(v)) for v in p.trapezoid)]
    return [
        "breakpoints = " + ", ".join(repr(float(v)) for v in p.breakpoints),
        "values = " + ", ".join(repr(float(v)) for v in p.values),
    ]


# -- parsing --------------------------------------------------------------------


class _Reader:
    """Typed access to a parsed file with line-aware diagnostics."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        try:
            self.parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        self.lines = _key_lines(text)

    def where(self, section: str, key: str) -> str:
        line = self.lines.get((section, key))
        loc = f"{self.source}, line {line}" if line else self.source
        return f"{loc}: [{section}] {key}"

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def get(self, section, key, convert, default):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            return convert(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{self.where(section, key)}: {exc}") from None

    def fail(self, section, key, message):
        raise ConfigError(f"{self.where(section, key)}: {message}")


def _key_lines(text: str) -> dict:
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), i)
    return out


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


def _complexes(raw: str) -> tuple[complex, ...]:
    return tuple(complex(v.strip().replace(" ", "")) for v in raw.split(",") if v.strip())


def _bool(raw: str) -> bool:
    v = raw.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _range(raw: str) -> tuple[int, int]:
    lo, hi = (int(v) for v in raw.split(":"))
    if lo > hi:
        raise ValueError(f"empty range {raw!r}")
    return lo, hi


def _profile(r: _Reader, section: str) -> ProfileSpec:
    trap = r.get(section, "trapezoid", _floats, None)
    if trap is not None:
        if len(trap) != 4:
            r.fail(section, "trapezoid", "expected x1, x2, y_lo, y_hi")
        try:
            p = ConductivityProfile.trapezoid(*trap)
        except ValueError as exc:
            r.fail(section, "trapezoid", str(exc))
        return ProfileSpec(p.breakpoints, p.values, tuple(trap))
    x = r.get(section, "breakpoints", _floats, None)
    y = r.get(section, "values", _floats, None)
    if y is None:
        r.fail(section, "values", "profile needs 'trapezoid' or 'breakpoints' and 'values'")
    if x is None:
        if len(y) != 1:
            r.fail(section, "breakpoints", "missing breakpoints")
        x = (0.0,)
    try:
        ConductivityProfile(x, y)
    except ValueError as exc:
        r.fail(section, "values", str(exc))
    return ProfileSpec(x, y)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    r = _Reader(text, source)
    known = {"geometry", "matrix", "inclusion", "flux", "solver", "sweep", "verify", "output"}
    for sec in r.parser.sections():
        if sec not in known and not re.fullmatch(r"inclusion\.\d+", sec):
            raise ConfigError(f"{source}: unknown section [{sec}]")

    centers = r.get("geometry", "centers", _complexes, ())
    radii = r.get("geometry", "radii", _floats, ())
    if centers and len(radii) == 1:
        radii = radii * len(centers)
    if len(radii) != len(centers):
        r.fail("geometry", "radii", f"{len(radii)} radii for {len(centers)} centers")
    ids = r.get("geometry", "contrast_ids", _ints, ())
    if centers and len(ids) == 1:
        ids = ids * len(centers)
    if ids and len(ids) != len(centers):
        r.fail("geometry", "contrast_ids", f"{len(ids)} ids for {len(centers)} centers")

    if not r.parser.has_section("matrix"):
        raise ConfigError(f"{source}: missing section [matrix]")
    matrix = _profile(r, "matrix")
    inclusions = []
    if r.parser.has_section("inclusion"):
        inclusions.append(_profile(r, "inclusion"))
        k = 1
        while r.parser.has_section(f"inclusion.{k}"):
            inclusions.append(_profile(r, f"inclusion.{k}"))
            k += 1
    if centers and not inclusions:
        raise ConfigError(f"{source}: inclusions are present but section [inclusion] is missing")
    for k in ids:
        if not 0 <= k < len(inclusions):
            r.fail("geometry", "contrast_ids", f"no inclusion profile {k}")

    shifts = r.raw("sweep", "shifts", "auto")
    shift_range = None
    if shifts.lower() != "auto":
        shift_range = r.get("sweep", "shifts", _floats, None)
        if len(shift_range) != 2 or not shift_range[0] < shift_range[1]:
            r.fail("sweep", "shifts", "expected 'auto' or 'lo, hi' with lo < hi")
    cells_raw = r.raw("sweep", "cells", "auto")
    cells = None
    if cells_raw.lower() != "auto":
        parts = [p.strip() for p in cells_raw.split(",")]
        if len(parts) != 2:
            r.fail("sweep", "cells", "expected 'auto' or 'm1lo:m1hi, m2lo:m2hi'")
        cells = tuple(r.get("sweep", "cells", lambda _: _range(p), None) for p in parts)

    cfg = RunConfig(
        centers=centers,
        radii=radii,
        contrast_ids=ids,
        matrix=matrix,
        inclusions=tuple(inclusions),
        flux_intensity=r.get("flux", "intensity", float, -1.0),
        flux_angle=r.get("flux", "angle", float, 0.0),
        order=r.get("solver", "order", int, DEFAULT_ORDER),
        tol=r.get("solver", "tol", float, DEFAULT_TOL),
        adaptive=r.get("solver", "adaptive", _bool, True),
        max_order=r.get("solver", "max_order", int, MAX_ORDER),
        shift_range=shift_range,
        samples=r.get("sweep", "samples", int, 81),
        interpolation=r.get("sweep", "interpolation", str, "pchip"),
        cells=cells,
        equivalence_tol=r.get("sweep", "equivalence_tol", float, 1e-4),
        fd_grid=r.get("verify", "grid", int, 512),
        fd_tensor_tol=r.get("verify", "tensor_tol", float, 1e-2),
        field_margin=r.get("verify", "field_margin", float, 0.05),
        field_tol=r.get("verify", "field_tol", float, 1e-2),
        residual_grids=r.get("verify", "residual_grids", _ints, (128, 256)),
        residual_margin=r.get("verify", "residual_margin", float, 0.05),
        residual_ratio=r.get("verify", "residual_ratio", _floats, (3.5, 4.5)),
        interface_tol=r.get("verify", "interface_tol", float, 1e-6),
        output_dir=r.get("output", "directory", str, "out"),
        svg=r.get("output", "svg", _bool, False),
        source=source,
    )
    _check(cfg, r)
    return cfg


def _check(cfg: RunConfig, r: _Reader):
    if cfg.order < 0:
        r.fail("solver", "order", "must be non-negative")
    if cfg.tol <= 0:
        r.fail("solver", "tol", "must be positive")
    if cfg.samples < 2:
        r.fail("sweep", "samples", "need at least 2 samples")
    if cfg.interpolation not in ("pchip", "linear"):
        r.fail("sweep", "interpolation", "expected 'pchip' or 'linear'")
    if cfg.fd_grid < 32:
        r.fail("verify", "grid", "need at least 32 points per side")
    if len(cfg.residual_grids) != 2 or min(cfg.residual_grids) < 16:
        r.fail("verify", "residual_grids", "expected two grid sizes of at least 16")
    if len(cfg.residual_ratio) != 2:
        r.fail("verify", "residual_ratio", "expected 'lo, hi'")
    if any(rad <= 0 for rad in cfg.radii):
        r.fail("geometry", "radii", "radii must be positive")
    try:
        geom = cfg.geometry()
    except ValueError as exc:
        r.fail("geometry", "radii", str(exc))
    problems = validate(geom)
    if problems:
        r.fail("geometry", "centers", "; ".join(problems))


def bundled_path(name: str) -> Path:
    stem = name[:-4] if name.endswith(".cfg") else name
    return Path(str(resources.files("perihom") / "configs" / f"{stem}.cfg"))


def load_config(path: str | Path) -> RunConfig:
    """Read a config file; bare names of bundled configs are accepted too."""
    p = Path(path)
    if not p.exists():
        stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
        if str(path) in (stem, f"{stem}.cfg") and stem in BUNDLED:
            p = bundled_path(stem)
        else:
            raise ConfigError(f"{path}: no such file")
    return parse_config(p.read_text(), str(p))
