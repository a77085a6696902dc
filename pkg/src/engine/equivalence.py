"""スター積の同値性の検証と量子補正"""

import itertools
from typing import Optional, Sequence

from src.algebra.coeff_ring import CoeffFn
from src.config.settings import Settings
from src.engine.base import track
from src.engine.series import HbarSeries, OperatorSeries
from src.engine.star import StarProduct
from src.errors import ChartMismatch
from src.utils.reports import VerificationReport


def verify_equivalence(
    operator: OperatorSeries,
    star_a: StarProduct,
    star_b: StarProduct,
    samples: Sequence[CoeffFn],
    order: Optional[int] = None,
    config: Optional[Settings] = None,
) -> VerificationReport:
    """P(f ∗_A g) = Pf ∗_B Pg を ℏ^{N+1} を法として検証"""
    if star_a.chart != star_b.chart or operator.chart != star_a.chart:
        raise ChartMismatch("Star products and operator live on different charts")
    order = min(star_a.order, star_b.order) if order is None else min(order, star_a.order, star_b.order)
    residuals = []
    for f, g in track(list(itertools.product(samples, repeat=2)), "equivalence", config):
        left = operator.apply_series(star_a.product(f, g).truncated(order)).truncated(order)
        right = star_b.series_product(operator.apply(f, order), operator.apply(g, order)).truncated(order)
        if left != right:
            residuals.append(f"({f.to_text()}, {g.to_text()}): {(left - right).to_text()}")
    report = VerificationReport("equivalence")
    report.add("intertwining", residuals, note=f"modulo hbar^{order + 1}")
    return report


def apply_quantum_corrections(operator: OperatorSeries, f: CoeffFn, order: int) -> HbarSeries:
    """P⁻¹ f（量子補正は ℏ^1 以上の部分）"""
    return operator.inverse_apply(f, order)
