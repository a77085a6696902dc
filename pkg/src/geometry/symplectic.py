"""シンプレクティック構造の検証とPoisson括弧"""

from typing import List, Sequence

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, exterior_d
from src.errors import InputError, NotAntisymmetric, NotClosed, NotInvertible


def _determinant(matrix: List[List[CoeffFn]], chart: ChartSpec) -> CoeffFn:
    """余因子展開による行列式（次元 2n は小さい前提）"""
    size = len(matrix)
    if size == 0:
        return CoeffFn.constant(chart, 1)
    if size == 1:
        return matrix[0][0]
    total = CoeffFn.zero(chart)
    for col in range(size):
        if not matrix[0][col]:
            continue
        minor = [row[:col] + row[col + 1:] for row in matrix[1:]]
        term = matrix[0][col] * _determinant(minor, chart)
        total = total - term if col % 2 else total + term
    return total


def _unit_inverse(value: CoeffFn) -> CoeffFn:
    """c·e^{i m·φ} 型の単元の逆元"""
    if len(value) != 1:
        raise NotInvertible("Determinant is not a unit of the coefficient ring", detail=value.to_text())
    (alpha, beta, m), c = value.terms()[0]
    if any(alpha) or any(beta):
        raise NotInvertible("Determinant is not a unit of the coefficient ring", detail=value.to_text())
    return CoeffFn.monomial(value.chart, m=tuple(-x for x in m), coeff=c.inverse())


def validate_symplectic(chart: ChartSpec, w: Sequence[Sequence[CoeffFn]]) -> SymplecticData:
    """シンプレクティック行列を検証し、逆行列つきのデータを返す

    Args:
        chart: チャート
        w: 2n×2n の行列 ω_{jl}

    Returns:
        SymplecticData

    Raises:
        NotAntisymmetric: 反対称でない
        NotInvertible: 係数環上で逆行列が存在しない
        NotClosed: dω ≠ 0
    """
    dim = chart.dim
    if len(w) != dim or any(len(row) != dim for row in w):
        raise InputError(f"Symplectic matrix must be {dim}x{dim}")
    for j in range(dim):
        for l in range(dim):
            if w[j][l] != -w[l][j]:
                raise NotAntisymmetric(f"omega[{j + 1}][{l + 1}] != -omega[{l + 1}][{j + 1}]", detail=(j, l))

    det = _determinant([list(row) for row in w], chart)
    det_inv = _unit_inverse(det)
    raised = [[CoeffFn.zero(chart)] * dim for _ in range(dim)]
    for j in range(dim):
        for l in range(dim):
            # 余因子 C[l][j]
            minor = [row[:j] + row[j + 1:] for i, row in enumerate(w) if i != l]
            cofactor = _determinant([list(r) for r in minor], chart)
            if (j + l) % 2:
                cofactor = -cofactor
            raised[j][l] = cofactor * det_inv

    data = SymplecticData(chart, w, raised)
    if exterior_d(data.form(Caps(0, 0))):
        raise NotClosed("Symplectic form is not closed")
    return data


def poisson_bracket(f: CoeffFn, g: CoeffFn, s: SymplecticData) -> CoeffFn:
    """Poisson括弧 {f, g} = ω^{jl} ∂_j f ∂_l g"""
    total = CoeffFn.zero(f.chart)
    for j, l in s.pairs:
        df = f.diff(j)
        if not df:
            continue
        dg = g.diff(l)
        if dg:
            total = total + s.raised[j][l] * df * dg
    return total


def standard_matrix(chart: ChartSpec) -> List[List[CoeffFn]]:
    """標準形 Σ dI^α ∧ dφ^α の行列"""
    return [list(row) for row in SymplecticData.standard(chart).lowered]
