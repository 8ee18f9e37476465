"""データモデルスキーマ"""

from src.schemas.data_models import (
    CoefficientSet,
    FrameSpec,
    MoleculeOrder,
    PhantomSpec,
    PhasePoint,
    SampledVolume,
    SamplingData,
    ShearletIndex,
)

__all__ = [
    "CoefficientSet",
    "FrameSpec",
    "MoleculeOrder",
    "PhantomSpec",
    "PhasePoint",
    "SampledVolume",
    "SamplingData",
    "ShearletIndex",
]
