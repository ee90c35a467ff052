"""Catalog of approximation models, keyed by id."""

from dataclasses import dataclass, field

from ..core import ConfigurationError
from . import dynamics, erroneous, mutual, scalar, structures  # noqa: F401  (registration)
from .base import REGISTRY


@dataclass(frozen=True)
class ModelSpec:
    id: str
    params: dict = field(default_factory=dict)
    n_grid: tuple = ()


def model_ids():
    return list(REGISTRY)


def build_model(spec, **params):
    """Instantiate a model from a ModelSpec or an id plus keyword parameters."""
    if isinstance(spec, str):
        spec = ModelSpec(spec, params)
    cls = REGISTRY.get(spec.id)
    if cls is None:
        raise ConfigurationError(f"unknown model {spec.id!r}; known: {', '.join(REGISTRY)}")
    return cls(**dict(spec.params))


def describe(model_id):
    """Catalog entry: anchor, parameters, flags and which reference kinds exist."""
    cls = REGISTRY[model_id]
    model = cls()
    flags = cls.flags
    return {
        "id": model_id,
        "anchor": cls.anchor,
        "state_space": model.state_space,
        "params": dict(cls.defaults),
        "local": flags.expected_local,
        "asymptotically_symmetric": flags.asymptotically_symmetric,
        "deterministic_U": flags.deterministic_U,
        "default_grid": list(cls.default_grid),
        "closed_forms": _available(model),
    }


def _available(model):
    from ..core import BiasKind

    if getattr(model, "reference_kinds", None) is not None:
        return list(model.reference_kinds)
    probes = model.probe_functions()
    phi, chi = probes[0], probes[1]
    out = []
    for kind in BiasKind:
        try:
            if model.closed_form(kind, phi, chi) is not None:
                out.append(kind.value)
        except NotImplementedError:
            pass
    return out
