"""Experiment manifests, JSON reports and CSV plot data."""

import csv
import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .catalog import describe, model_ids
from .core import BiasKind, ConfigurationError
from .engine import FITS
from .specs import parse_function

REPORT_KEYS = ("model", "kind", "phi", "chi", "grid", "limit", "reference", "z", "pass", "seed")
CSV_HEADER = ("n", "re", "im", "stderr")


class Functional(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    phi: str
    chi: str = "const:1"
    psi: Optional[str] = None
    exponent: float = 4

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value):
        BiasKind.parse(value)
        return value

    @field_validator("phi", "chi", "psi")
    @classmethod
    def _parses(cls, value):
        if value is not None:
            parse_function(value)
        return value


class ExperimentManifest(BaseModel):
    """One experiment: a model, the functionals to estimate and where to write results."""

    model_config = ConfigDict(extra="forbid")

    model: str
    params: dict = Field(default_factory=dict)
    functionals: list[Functional] = Field(min_length=1)
    n_grid: Optional[list[int]] = None
    samples: Optional[int] = Field(default=None, ge=100)
    seed: Optional[int] = Field(default=None, ge=0)
    fit: Optional[str] = None
    checks: list[str] = Field(default_factory=list)
    output: str = "results"
    name: Optional[str] = None

    @field_validator("model")
    @classmethod
    def _known_model(cls, value):
        if value not in model_ids():
            raise ValueError(f"unknown model {value!r}")
        return value

    @field_validator("n_grid")
    @classmethod
    def _increasing(cls, value):
        if value is not None:
            if not value:
                raise ValueError("n_grid must not be empty")
            if any(b <= a for a, b in zip(value, value[1:])):
                raise ValueError("n_grid must be strictly increasing")
        return value

    @field_validator("fit")
    @classmethod
    def _known_fit(cls, value):
        if value is not None and value != "auto" and value not in FITS:
            raise ValueError(f"unknown fit {value!r}; choose auto or one of {', '.join(FITS)}")
        return value

    def label(self, index=0):
        return self.name or f"{self.model}_{index}"


def _line_of(text, key):
    """First line of the raw manifest mentioning a JSON key, for diagnostics."""
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return number
    return None


def load_manifest(path):
    """Read a manifest file holding one experiment object or an array of them."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigurationError(f"{path}: cannot read manifest ({err.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path}:{err.lineno}:{err.colno}: invalid JSON: {err.msg}") from None
    batch = raw if isinstance(raw, list) else [raw]
    if not batch:
        raise ConfigurationError(f"{path}: empty experiment list")
    out = []
    for index, item in enumerate(batch):
        try:
            out.append(ExperimentManifest.model_validate(item))
        except ValidationError as err:
            first = err.errors()[0]
            loc = ".".join(str(part) for part in first["loc"]) or "<root>"
            where = f"[{index}]." if isinstance(raw, list) else ""
            field_key = next((p for p in reversed(first["loc"]) if isinstance(p, str)), None)
            line = _line_of(text, field_key) if field_key else None
            prefix = f"{path}:{line}" if line else str(path)
            message = first["msg"].removeprefix("Value error, ")
            raise ConfigurationError(f"{prefix}: field {where}{loc}: {message}") from None
    return out


def _num(x):
    return float(x)


def build_report(model_id, spec_texts, points, limit, reference, z, passed, seed):
    """Report dictionary with the stable key set REPORT_KEYS."""
    kind, phi, chi = spec_texts
    return {
        "model": model_id,
        "kind": kind,
        "phi": phi,
        "chi": chi,
        "grid": [{"n": int(p.n), "re": _num(p.mean.real), "im": _num(p.mean.imag), "stderr": _num(p.stderr)} for p in points],
        "limit": {"re": _num(limit.value.real), "im": _num(limit.value.imag), "unc": _num(limit.uncertainty)},
        "reference": {
            "present": reference is not None,
            "re": None if reference is None else _num(reference.real),
            "im": None if reference is None else _num(reference.imag),
        },
        "z": None if z is None else _num(z),
        "pass": passed,
        "seed": int(seed),
    }


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")


def _g17(x):
    return format(float(x), ".17g")


def write_csv(path, points):
    """Plot data with 17 significant digits, so reading it back is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for p in points:
            writer.writerow((int(p.n), _g17(p.mean.real), _g17(p.mean.imag), _g17(p.stderr)))


def read_csv(path):
    """Rows of (n, complex mean, stderr) from a file written by write_csv."""
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ConfigurationError(f"{path}: unexpected header {','.join(header)}")
        return [(int(n), complex(float(re), float(im)), float(se)) for n, re, im, se in reader]


def catalog_listing(flag_filters=None):
    """describe() for every model, keeping those whose flags match flag_filters."""
    rows = [describe(mid) for mid in model_ids()]
    for key, wanted in (flag_filters or {}).items():
        rows = [r for r in rows if r.get(key) == wanted]
    return rows


def summary_table(reports):
    """Plain-text table of verification reports: check, model, status, largest z."""
    lines = [f"{'check':<22} {'model':<22} {'status':<6} max_z"]
    for r in reports:
        finite = [z for z in r.z_scores if z is not None]
        z = f"{max(finite):.3g}" if finite else "-"
        lines.append(f"{r.check:<22} {r.model:<22} {r.status:<6} {z}")
    return "\n".join(lines)

