"""コマンドの実行

各コマンドは LoadedProblem と RunContext を受け取り VerificationReport を返す。
レポートは入力と seed だけで決まる（時刻やパスを含めない）。
"""

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

from src.algebra.coeff_ring import CoeffFn
from src.algebra.weyl import filtration_degree
from src.config.settings import Settings
from src.engine.equivalence import apply_quantum_corrections, verify_equivalence
from src.engine.fedosov import (
    FedosovState,
    FedosovStar,
    build_gamma,
    lift,
    monomial_basis,
    quantize_lagrangian,
    star,
    star_table,
    verify_fedosov_flatness,
    verify_star_axioms,
)
from src.engine.semiclassical import (
    build_gamma0,
    verify_base_sector,
    verify_flatness0,
    verify_multiplicative,
    verify_poisson_morphism,
)
from src.engine.series import HbarSeries
from src.engine.star import ConjugatedStar, MoyalStar, OppositeStar, StarProduct
from src.errors import InputError
from src.forms.lagrangian import (
    check_fiber_vanishing,
    exterior_derivative,
    is_base_oneform,
    lemma33_primitive,
    prop32_normalize,
)
from src.geometry.connection import check_theorem21, curvature, curvature_from_connection_form, validate_connection
from src.geometry.symplectic import poisson_bracket
from src.harness.persistence import persist
from src.harness.problem import COMPLIANCE_COMMANDS, LoadedProblem, ProblemSpec, require_compliance
from src.utils.reports import VerificationReport, save_frame


logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """コマンドライン由来の実行オプション"""

    config: Settings = field(default_factory=Settings)
    order: Optional[int] = None
    degree: Optional[int] = None
    allow_shallow: bool = False
    seed: Optional[int] = None
    save: Optional[str] = None


Handler = Callable[[LoadedProblem, RunContext], VerificationReport]
COMMANDS: Dict[str, Handler] = {}


def command(name: str) -> Callable[[Handler], Handler]:
    def register(func: Handler) -> Handler:
        COMMANDS[name] = func
        return func
    return register


def prepare(spec: ProblemSpec, name: str, ctx: RunContext) -> LoadedProblem:
    """打ち切り次数と幾何データを確定させる"""
    if ctx.seed is not None:
        spec = spec.model_copy(update={"seed": ctx.seed})
    caps, truncated = spec.resolve_caps(ctx.order, ctx.degree, ctx.allow_shallow, ctx.config)
    if truncated:
        logger.warning(
            f"Degree cap D={caps.degree} is below 2N={2 * caps.order}; Q_{caps.order} is possibly truncated"
        )
    geometry = spec.geometry(ctx.config)
    if name in COMPLIANCE_COMMANDS:
        require_compliance(geometry)
    return LoadedProblem(spec, geometry, caps, truncated)


def execute(spec: ProblemSpec, name: str, ctx: Optional[RunContext] = None) -> VerificationReport:
    """コマンドを実行してレポートを返す

    Raises:
        InputError: 未知のコマンドまたは不正な入力
    """
    ctx = ctx or RunContext()
    if name not in COMMANDS:
        raise InputError(f"Unknown command: {name!r}", detail=sorted(COMMANDS))
    problem = prepare(spec, name, ctx)
    logger.info(f"Running {name} with caps D={problem.caps.degree}, N={problem.caps.order}")
    report = COMMANDS[name](problem, ctx)
    report.data["caps"] = problem.caps.to_record()
    if problem.possibly_truncated:
        report.data["possibly_truncated"] = f"Q{problem.caps.order}"
    return report


def exit_code(report: VerificationReport) -> int:
    return 0 if report.passed else 1


# ---- 補助 ----


def _fedosov(problem: LoadedProblem, ctx: RunContext) -> FedosovState:
    omega = problem.spec.omega(problem.geometry, problem.caps)
    return build_gamma(problem.geometry, omega, problem.caps, ctx.config)


def _save(obj, ctx: RunContext) -> None:
    if ctx.save:
        persist(obj, ctx.save)


def _sample_or_basis(problem: LoadedProblem, ctx: RunContext) -> List[CoeffFn]:
    spec = problem.spec
    if spec.functions:
        return spec.sample_functions()
    max_degree = spec.options.max_degree
    if max_degree is None:
        max_degree = int(ctx.config.star_table["max_degree"])
    return monomial_basis(problem.geometry.chart, max_degree)


def _star_product(kind: str, problem: LoadedProblem, ctx: RunContext, cache: Dict[str, FedosovState]) -> StarProduct:
    def fedosov() -> StarProduct:
        if "state" not in cache:
            cache["state"] = _fedosov(problem, ctx)
        return FedosovStar(cache["state"])

    if kind == "fedosov":
        return fedosov()
    if kind == "moyal":
        return MoyalStar(problem.geometry.symplectic, problem.caps.order)
    if kind == "opposite":
        return OppositeStar(fedosov())
    return ConjugatedStar(fedosov(), problem.spec.operator_series())


def _form(problem: LoadedProblem):
    form = problem.spec.form_section(problem.caps)
    if not form:
        raise InputError("This command needs a non-empty 'form' in the problem file")
    return form


# ---- コマンド ----


@command("verify-geometry")
def run_verify_geometry(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    geometry = problem.geometry
    report = validate_connection(geometry.connection, geometry.symplectic)
    report.title = "verify-geometry"
    form = curvature(geometry.connection, geometry.symplectic).form
    cross = curvature_from_connection_form(geometry.connection, geometry.symplectic)
    report.add("curvature_convention", [f"{key}: {c.to_text()}" for key, c in (form - cross).terms()])
    compliance = check_theorem21(geometry.connection)
    report.data["fiber_adapted"] = compliance.passed
    report.data["fiber_adapted_violations"] = compliance.violations
    report.data["curvature_form"] = form.to_text()
    return report


@command("build-gamma")
def run_build_gamma(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    state = _fedosov(problem, ctx)
    report = verify_fedosov_flatness(state)
    report.title = "build-gamma"
    report.data["gamma"] = state.gamma.to_text()
    report.data["geometry_hash"] = state.geometry_hash
    _save(state, ctx)
    return report


@command("lift")
def run_lift(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    f = problem.spec.named(problem.spec.options.f, "f")
    state = _fedosov(problem, ctx)
    sigma = lift(state, f)
    constant = HbarSeries(state.chart, state.caps.order, sigma.constant_part())
    residual = state.get_engine().connection_d(state.gamma, sigma).up_to_degree(state.caps.degree - 1)
    report = VerificationReport("lift")
    report.add("constant_part", [] if constant == HbarSeries.of(f, state.caps.order) else [constant.to_text()])
    report.add(
        "flat_section",
        [f"{key}: {c.to_text()}" for key, c in residual.terms()],
        note=f"exact up to Weyl degree {state.caps.degree - 1}",
    )
    report.data["lift"] = sigma.to_text()
    return report


@command("star")
def run_star(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    spec = problem.spec
    f = spec.named(spec.options.f, "f")
    g = spec.named(spec.options.g, "g")
    state = _fedosov(problem, ctx)
    fg = star(state, f, g)
    commutator = fg - star(state, g, f)
    report = VerificationReport("star")
    report.add("classical_limit", [] if fg.coefficient(0) == f * g else [fg.coefficient(0).to_text()])
    if state.caps.order >= 1:
        bracket = poisson_bracket(f, g, state.geometry.symplectic)
        ok = not commutator.coefficient(0) and commutator.coefficient(1) == bracket
        report.add("leading_commutator", [] if ok else [commutator.to_text()], note=f"expected hbar*({bracket.to_text()})")
    report.data["product"] = fg.to_text()
    report.data["commutator"] = commutator.to_text()
    return report


@command("star-table")
def run_star_table(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    max_degree = problem.spec.options.max_degree
    if max_degree is None:
        max_degree = int(ctx.config.star_table["max_degree"])
    state = _fedosov(problem, ctx)
    table = star_table(state, max_degree)
    report = VerificationReport("star-table")
    report.add("table_complete", table.missing_entries())
    report.data["basis"] = table.basis
    report.data["entries"] = {f"Q{l}({f}, {g})": value.to_text() for (f, g, l), value in table.entries.items()}
    if ctx.save:
        if Path(ctx.save).suffix == ".csv":
            save_frame(table.to_frame(), ctx.save)
        else:
            persist(table, ctx.save)
    return report


@command("verify-star")
def run_verify_star(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    spec = problem.spec
    product = _star_product(spec.options.star_a, problem, ctx, {})
    report = verify_star_axioms(product, _sample_or_basis(problem, ctx), spec.options.max_triples, ctx.config, seed=spec.seed)
    report.data["star"] = spec.options.star_a
    return report


@command("normalize-form")
def run_normalize_form(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    om = _form(problem)
    normalized, gamma = prop32_normalize(om)
    report = VerificationReport("normalize-form")
    report.add("primitive_identity", [f"{key}: {c.to_text()}" for key, c in (om - normalized - exterior_derivative(gamma)).terms()])
    degree = filtration_degree(normalized)
    report.add("filtration_at_most_1", [] if degree <= 1 else [f"filtration degree {degree}"])
    report.add("gamma_descends", [f"{key}: {c.to_text()}" for key, c in gamma.terms() if not c.descends_to_torus()])
    report.data["normalized"] = normalized.to_text()
    report.data["gamma"] = gamma.to_text()
    return report


@command("check-lagrangian")
def run_check_lagrangian(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    om = _form(problem)
    report = VerificationReport("check-lagrangian")
    closed = not exterior_derivative(om)
    vanishing = check_fiber_vanishing(om)
    report.add("closed", [] if closed else [exterior_derivative(om).to_text()])
    report.add("fiber_vanishing", [] if vanishing else [om.to_text()])
    if closed and vanishing and om.form_degrees() == {2}:
        beta = lemma33_primitive(om)
        report.add("primitive", [f"{key}: {c.to_text()}" for key, c in (exterior_derivative(beta) - om).terms()])
        report.add("primitive_fiber_vanishing", [] if check_fiber_vanishing(beta) else [beta.to_text()])
        report.data["primitive"] = beta.to_text()
    elif closed and vanishing and om.form_degrees() == {1}:
        report.data["base_oneform"] = is_base_oneform(om)
    return report


@command("semiclassical")
def run_semiclassical(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    state = build_gamma0(problem.geometry, problem.caps.degree, ctx.config)
    report = verify_flatness0(state)
    report.title = "semiclassical"
    functions = _sample_or_basis(problem, ctx)
    for i, j in itertools.combinations_with_replacement(range(len(functions)), 2):
        f, g = functions[i], functions[j]
        report.extend(verify_poisson_morphism(state, f, g), prefix=f"poisson[{i},{j}]")
        report.extend(verify_multiplicative(state, f, g), prefix=f"multiplicative[{i},{j}]")
    if check_theorem21(problem.geometry.connection).passed:
        action_only = [f for f in functions if f.is_action_only()]
        report.extend(verify_base_sector(state, action_only))
    report.data["gamma"] = state.gamma.to_text()
    _save(state, ctx)
    return report


@command("verify-equivalence")
def run_verify_equivalence(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    options = problem.spec.options
    cache: Dict[str, FedosovState] = {}
    star_a = _star_product(options.star_a, problem, ctx, cache)
    star_b = _star_product(options.star_b, problem, ctx, cache)
    report = verify_equivalence(
        problem.spec.operator_series(), star_a, star_b, _sample_or_basis(problem, ctx), config=ctx.config
    )
    report.data["stars"] = f"{options.star_a} -> {options.star_b}"
    return report


@command("quantum-corrections")
def run_quantum_corrections(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    spec = problem.spec
    operator = spec.operator_series()
    order = problem.caps.order
    names = [spec.options.f] if spec.options.f else sorted(spec.functions)
    report = VerificationReport("quantum-corrections")
    residuals = []
    for name in names:
        f = spec.named(name, "f")
        series = apply_quantum_corrections(operator, f, order)
        if operator.apply_series(series) != HbarSeries.of(f, order):
            residuals.append(name)
        report.data[f"corrections[{name}]"] = series.corrections().to_text()
    report.add("inverse_identity", residuals, note=f"P(P^-1 f) = f modulo hbar^{order + 1}")
    return report


@command("quantize-lagrangian")
def run_quantize_lagrangian(problem: LoadedProblem, ctx: RunContext) -> VerificationReport:
    omega = problem.spec.omega(problem.geometry, problem.caps)
    functions = problem.spec.sample_functions() if problem.spec.functions else [
        f for f in monomial_basis(problem.geometry.chart, 3) if f.is_action_only()
    ]
    report, state = quantize_lagrangian(problem.geometry, omega, functions, problem.caps, ctx.config)
    _save(state, ctx)
    return report
