"""Mobile-class CNN models used as gossip payloads."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownModel


def category_for(capacity_mb: float) -> str:
    if capacity_mb <= 15:
        return "small"
    if capacity_mb <= 30:
        return "medium"
    return "large"


@dataclass(frozen=True)
class ModelSpec:
    code: str
    name: str
    params_m: float
    capacity_mb: float

    @property
    def category(self) -> str:
        return category_for(self.capacity_mb)


# ordered smallest-first, the column order of the result tables
CATALOG: dict[str, ModelSpec] = {
    spec.code: spec
    for spec in (
        ModelSpec("v3s", "MobileNetV3 Small (1.0)", 2.9, 11.6),
        ModelSpec("v2", "MobileNetV2", 3.5, 14.0),
        ModelSpec("b0", "EfficientNet-B0", 5.3, 21.2),
        ModelSpec("v3l", "MobileNetV3 Large (1.0)", 5.4, 21.6),
        ModelSpec("b1", "EfficientNet-B1", 7.8, 31.2),
        ModelSpec("b2", "EfficientNet-B2", 9.2, 36.8),
        ModelSpec("b3", "EfficientNet-B3", 12.0, 48.0),
    )
}

MODEL_ORDER = tuple(CATALOG)


def catalog_lookup(code: str) -> ModelSpec:
    try:
        return CATALOG[code.lower()]
    except KeyError:
        raise UnknownModel(f"unknown model code {code!r}; known: {', '.join(MODEL_ORDER)}") from None
