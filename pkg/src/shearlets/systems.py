"""
原子系

グラム行列の組み立てに使う、インデックス列挙・位相点・内積をまとめたクラス
"""

from typing import List

import numpy as np

from src.molecules.parametrization import sh_phase_point
from src.schemas.data_models import FrameSpec, PhasePoint, ShearletIndex
from src.shearlets.frame3d import (
    WindowKey,
    digital_inner_product,
    index_set,
    inner_product,
)


class AtomSystem:
    """原子系の基底クラス"""

    name = "atoms"

    def __init__(self, spec: FrameSpec):
        self.spec = spec

    def windows(self) -> List[WindowKey]:
        return index_set(self.spec.J)

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        raise NotImplementedError

    def inner(self, a: ShearletIndex, b: ShearletIndex) -> complex:
        raise NotImplementedError


class ContinuumShearletSystem(AtomSystem):
    """連続SH原子（求積による内積、SH位相点）"""

    name = "sh"

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        return sh_phase_point(idx)

    def inner(self, a: ShearletIndex, b: ShearletIndex) -> complex:
        return inner_product(a, b, self.spec)


class DigitalShearletSystem(AtomSystem):
    """
    デジタルSH原子（全格子の平行移動）

    位置は x = k / (n · freq_scale)（k は最小像）、スケールと方向はSH位相点に従う。
    """

    name = "sh-digital"

    def phase(self, idx: ShearletIndex) -> PhasePoint:
        base = sh_phase_point(idx.model_copy(update={"k": (0, 0, 0)}))
        n = self.spec.n
        k = (np.asarray(idx.k) + n // 2) % n - n // 2
        x = k / (n * self.spec.xi_step)
        return PhasePoint(s=base.s, e=base.e, x=tuple(float(c) for c in x))

    def inner(self, a: ShearletIndex, b: ShearletIndex) -> complex:
        return digital_inner_product(a, b, self.spec)
