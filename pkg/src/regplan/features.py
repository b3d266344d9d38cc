"""Object-centric feature encoding shared by environments and models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goals import DomainSchema, UnknownEntityError


@dataclass(frozen=True)
class FeatureBlock:
    """One contiguous span of the per-entity feature vector.

    ``kind`` is 'onehot' (must sum to exactly 1), 'flags' (independent
    booleans) or 'real' (unconstrained channels).
    """

    name: str
    kind: str
    size: int
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class FeatureLayout:
    """Describes the per-entity feature vector, block by block.

    ``zone_entities`` lists, for domains with binary On-style predicates,
    the entity ids that double as placement zones, in the order of the
    zone one-hot block. The pair on-top flag is derived from it.
    """

    blocks: tuple[FeatureBlock, ...]
    zone_entities: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return sum(b.size for b in self.blocks)

    def offset(self, name: str) -> int:
        off = 0
        for b in self.blocks:
            if b.name == name:
                return off
            off += b.size
        raise KeyError(name)

    def block(self, name: str) -> FeatureBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def describe(self) -> str:
        parts = [f"{b.name}[{b.size}:{b.kind}]" for b in self.blocks]
        return " | ".join(parts)


def tuple_feature_from_matrix(
    layout: FeatureLayout,
    matrix: np.ndarray,
    index: dict[str, int],
    args: tuple[str, ...],
    tuple_dim: int,
) -> np.ndarray:
    """Feature vector for an entity tuple, built from the unary matrix.

    Unary tuples are zero-padded on the right to ``tuple_dim``. Binary
    tuples concatenate both unary vectors plus a derived on-top flag
    (first entity located in the zone named by the second).
    """
    d = layout.dim
    out = np.zeros(tuple_dim)
    if len(args) == 1:
        out[:d] = matrix[index[args[0]]]
        return out
    a, b = args
    fa = matrix[index[a]]
    out[:d] = fa
    out[d : 2 * d] = matrix[index[b]]
    if layout.zone_entities:
        zoff = layout.offset("zone")
        try:
            z = layout.zone_entities.index(b)
        except ValueError:
            z = -1
        if z >= 0:
            out[2 * d] = fa[zoff + z]
    return out


class EntitySet:
    """Ordered per-entity feature vectors from one environment snapshot."""

    __slots__ = ("schema", "layout", "entity_ids", "features", "_index")

    def __init__(
        self,
        schema: DomainSchema,
        layout: FeatureLayout,
        entity_ids: tuple[str, ...],
        features: np.ndarray,
    ):
        if features.shape != (len(entity_ids), layout.dim):
            raise ValueError(
                f"feature matrix shape {features.shape} does not match "
                f"{len(entity_ids)} entities x {layout.dim} channels"
            )
        self.schema = schema
        self.layout = layout
        self.entity_ids = entity_ids
        self.features = features
        self._index = {e: i for i, e in enumerate(entity_ids)}

    def index(self, entity_id: str) -> int:
        try:
            return self._index[entity_id]
        except KeyError:
            raise UnknownEntityError(entity_id) from None

    def feature(self, entity_id: str) -> np.ndarray:
        return self.features[self.index(entity_id)]

    def tuple_feature(self, args: tuple[str, ...]) -> np.ndarray:
        for a in args:
            if a not in self._index:
                raise UnknownEntityError(a)
        return tuple_feature_from_matrix(
            self.layout, self.features, self._index, args, self.schema.tuple_feature_dim
        )

    def validate_onehots(self) -> None:
        """Assert every one-hot block sums to exactly 1 for every entity."""
        off = 0
        for b in self.layout.blocks:
            if b.kind == "onehot":
                sums = self.features[:, off : off + b.size].sum(axis=1)
                if not np.allclose(sums, 1.0):
                    bad = self.entity_ids[int(np.argmin(np.isclose(sums, 1.0)))]
                    raise ValueError(f"one-hot block {b.name!r} does not sum to 1 for {bad!r}")
            off += b.size
