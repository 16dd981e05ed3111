"""One function per acceptance criterion, each returning checks, metrics and a table."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cgo, fd, gauge
from .config import DEFAULTS
from .dnmap import ResolutionWarning, dn_matrix, frechet_experiment
from .eigenbasis import BoxDomain, GridField, SpectralField, sample_boundary
from .fracops import InhomFunction, ibp_residual, inhom_coefficients
from .inversion import (
    Lattice,
    alessandrini_residual,
    reconstruct_from_potential,
    relative_l2_error,
    stability_experiment,
    truncated_fourier_series,
    volume_fourier,
)
from .solvers import (
    Potential,
    contraction_estimate,
    fractional_poisson,
    schrodinger_born,
    schrodinger_direct,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<="


def check(name, value, tol, relation="<="):
    value = float(value)
    ok = {"<=": value <= tol, ">=": value >= tol}[relation]
    return Check(name, value, float(tol), bool(ok), relation)


@dataclass
class CriterionResult:
    number: int
    title: str
    identity: str
    checks: list
    columns: tuple = ()
    rows: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0
    # named grid tables (columns, rows) written alongside the main table
    fields: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failed_checks(self):
        return [c for c in self.checks if not c.passed]

    def summary(self):
        parts = ", ".join(f"{c.name}={c.value:.3g} ({c.relation} {c.tol:.3g})" for c in self.checks)
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.title}: {parts}"


def _timed(func):
    def wrapper(cfg=None):
        cfg = DEFAULTS if cfg is None else cfg
        start = time.perf_counter()
        res = func(cfg)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# potentials


def band_limited(x, y):
    """Fixture with a finite Fourier expansion: three harmonics over a squared-sine envelope."""
    return np.sin(x) ** 2 * np.sin(y) ** 2 * (
        1 + 0.5 * np.cos(2 * x) + 0.3 * np.sin(2 * y) + 0.2 * np.cos(2 * x + 2 * y))


def potential_function(spec):
    """Callable for a named potential family."""
    fam = spec["family"]
    amp = float(spec.get("amplitude", 1.0))
    if fam == "bump":
        c = spec.get("center")
        rate = float(spec.get("rate", 4.0))
        return lambda *x: amp * np.exp(-rate * sum((xi - ci) ** 2 for xi, ci in zip(x, c)))
    if fam == "smooth-bump":
        c = spec.get("center")
        R = float(spec.get("radius", 1.0))

        def f(*x):
            r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / R ** 2
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                return np.where(r2 < 1, amp * np.exp(1 - 1 / (1 - r2)), 0.0)

        return f
    if fam == "separable-sine":
        ms = spec.get("modes", [1, 1])
        return lambda *x: amp * np.prod([np.sin(m * xi) for m, xi in zip(ms, x)], axis=0)
    if fam == "band-limited":
        return lambda x, y: amp * band_limited(x, y)
    raise ValueError(f"potential family {fam!r} has no closed form")


def make_potential(domain, spec):
    if spec["family"] == "file":
        vals = np.load(spec["path"])
        return Potential(GridField(domain, vals))
    return Potential.from_callable(domain, potential_function(spec))


# ---------------------------------------------------------------------------
# forward operators


@_timed
def kernel_of_constants(cfg):
    """Coefficients of the inhomogeneous operator applied to the constant function."""
    c = cfg["kernel"]
    rows = []
    for n, N in ((1, c["modes_1d"]), (2, c["modes_2d"])):
        d = BoxDomain.cube(n, N)
        one = InhomFunction.from_callable(d, lambda *x: np.ones_like(x[0]))
        for s in c["orders"]:
            rows.append((n, N, s, float(np.max(np.abs(inhom_coefficients(one, s).coeffs)))))
    worst = max(r[3] for r in rows)
    return CriterionResult(1, "kernel of constants", "fractional Laplacian of a constant",
                           [check("max |coefficient|", worst, c["tol"])],
                           ("dimension", "modes", "s", "max_abs_coefficient"), rows)


POISSON_TRACES = {
    "exp(x) cos(y)": lambda x, y: np.exp(x) * np.cos(y),
    "cos(x) cosh(y)": lambda x, y: np.cos(x) * np.cosh(y),
    "log distance to (-1,-1)": lambda x, y: 0.5 * np.log((x + 1) ** 2 + (y + 1) ** 2),
}


@_timed
def poisson_equivalence(cfg):
    """A-posteriori residual of the fractional operator on harmonic extensions."""
    c = cfg["poisson"]
    s = cfg["s"]
    rows = []
    checks = []
    for name, f in POISSON_TRACES.items():
        res = []
        for N in (c["coarse"], c["fine"]):
            d = BoxDomain.cube(2, N)
            u = fractional_poisson(sample_boundary(d, f), s)
            res.append(float(np.linalg.norm(inhom_coefficients(u, s).coeffs)))
        ratio = res[0] / res[1] if res[1] > 0 else np.inf
        rows.append((name, res[0], res[1], ratio))
        checks.append(check(f"ratio {name}", ratio, c["min_ratio"], ">="))
    return CriterionResult(2, "Poisson equivalence", "fractional operator annihilates harmonic "
                           "extensions", checks, ("trace", "residual_coarse", "residual_fine",
                                                  "ratio"), rows)


def _ibp_pairs(d, seed):
    rng = np.random.default_rng(seed)
    smooth = SpectralField(d, rng.standard_normal(d.modes) * d.eigenvalues ** -2.0)
    return [
        ("constant, single mode", InhomFunction.from_callable(d, lambda x, y: np.ones_like(x)),
         SpectralField.unit(d, (1, 1)), 0.75),
        ("exp(x) cos(y), random smooth", InhomFunction.from_callable(
            d, lambda x, y: np.exp(x) * np.cos(y)), smooth, 0.75),
        ("cos(x) cosh(y), single mode", InhomFunction.from_callable(
            d, lambda x, y: np.cos(x) * np.cosh(y)), SpectralField.unit(d, (2, 3)), 0.6),
    ]


@_timed
def integration_by_parts(cfg):
    """Defect of the fractional integration-by-parts formula."""
    c = cfg["ibp"]
    d = BoxDomain.cube(2, c["modes"])
    rows = [(name, s, ibp_residual(u, v, s)) for name, u, v, s in _ibp_pairs(d, cfg["seed"])]
    return CriterionResult(3, "integration by parts", "fractional integration by parts",
                           [check(f"residual {r[0]}", r[2], c["tol"]) for r in rows],
                           ("pair", "s", "residual"), rows)


@_timed
def born_vs_direct(cfg):
    """Born series against the direct Galerkin solve."""
    c = cfg["born"]
    s = cfg["s"]
    d = BoxDomain.cube(2, c["modes"])
    q = make_potential(d, c["potential"])
    g = sample_boundary(d, lambda x, y: np.exp(x) * np.cos(y))
    rho = contraction_estimate(q, s)
    direct = schrodinger_direct(q, g, s)
    rows = []
    for terms in range(1, c["terms"] + 1):
        born = schrodinger_born(q, g, s, terms, contraction=rho)
        rows.append((terms, float(np.max(np.abs(born.correction.coeffs - direct.correction.coeffs)))))
    return CriterionResult(4, "Born vs direct", "Born series of the Schrodinger correction",
                           [check("contraction", rho, c["max_contraction"]),
                            check("max coefficient gap", rows[-1][1], c["tol"])],
                           ("terms", "max_coefficient_gap"), rows, {"contraction": rho})


@_timed
def frechet_bound(cfg):
    """Quadratic gap between the DN map and its linearization."""
    c = cfg["frechet"]
    s = cfg["s"]
    d = BoxDomain.cube(2, c["modes"])
    q = make_potential(d, c["potential"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        res = frechet_experiment(q, s, c["scales"])
    rows = list(zip(res.scales, res.sup_norms, res.gaps, res.ratios))
    return CriterionResult(5, "Frechet quadratic bound", "second-order remainder of the DN map "
                           "linearization",
                           [check("slope deviation", abs(res.slope - c["slope"]), c["slope_tol"])],
                           ("scale", "sup_norm", "gap", "gap_over_scale_squared"), rows,
                           {"slope": res.slope})


# ---------------------------------------------------------------------------
# inverse problem


@_timed
def alessandrini(cfg):
    """Boundary pairing of the linearized DN map against the volume integral."""
    c = cfg["alessandrini"]
    s = cfg["s"]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        for N in (c["coarse"], c["modes"]):
            d = BoxDomain.cube(2, N)
            q = make_potential(d, c["potential"])
            for xi in c["frequencies"]:
                rows.append((N, xi[0], xi[1], alessandrini_residual(q, s, xi, relative=True)))
    coarse = {tuple(r[1:3]): r[3] for r in rows if r[0] == c["coarse"]}
    fine = {tuple(r[1:3]): r[3] for r in rows if r[0] == c["modes"]}
    worst = max(fine.values())
    ratio = min(coarse[k] / fine[k] if fine[k] > 0 else np.inf for k in fine)
    return CriterionResult(6, "Alessandrini identity", "Alessandrini identity for the linearized "
                           "DN map", [check("max relative residual", worst, c["tol"]),
                                      check("min refinement ratio", ratio, c["min_ratio"], ">=")],
                           ("modes", "xi_1", "xi_2", "relative_residual"), rows)


@_timed
def reconstruction(cfg):
    """Truncated Fourier reconstruction of two potentials from the linearized DN map."""
    c = cfg["reconstruct"]
    s = cfg["s"]
    rho = c["rho"]
    checks = []
    rows = []
    metrics = {}
    fields = {}
    for key, label in (("band_limited", "band-limited"), ("bump", "smooth bump")):
        fx = c[key]
        d = BoxDomain.cube(2, fx["modes"])
        q = make_potential(d, fx["potential"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            rec = reconstruct_from_potential(q, s, rho, pad=fx["pad"], symmetric=True)
        err = relative_l2_error(rec.field, q.q)
        lattice = Lattice.for_domain(d, fx["pad"])
        floor = relative_l2_error(truncated_fourier_series(q, lattice, rho), q.q)
        metrics[f"{key}_error"] = err
        metrics[f"{key}_truncation_floor"] = floor
        checks.append(check(f"relative L2 error {label}", err, fx["tol"]))
        X, Y = d.mesh()
        fields[key] = (("x", "y", "recovered", "exact"), list(zip(
            X.ravel(), Y.ravel(), rec.field.values.ravel(), q.q.values.ravel())))
        for xi, sample in zip(rec.frequencies, rec.samples):
            exact = volume_fourier(q, xi)
            rows.append((label, xi[0], xi[1], sample.real, sample.imag, exact.real, exact.imag))
    return CriterionResult(7, "injectivity at desk scale", "Fourier inversion from the linearized "
                           "DN map", checks, ("potential", "xi_1", "xi_2", "sample_re",
                                              "sample_im", "volume_re", "volume_im"), rows, metrics,
                           fields=fields)


@_timed
def log_stability(cfg):
    """Potential distance against DN-map distance over a perturbation sweep."""
    c = cfg["stability"]
    s = cfg["s"]
    d = BoxDomain.cube(2, c["modes"])
    base = make_potential(d, c["base"])
    pert = make_potential(d, c["perturbation"])
    rows = []
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        m0 = dn_matrix("linearized", base, s)
        m1 = dn_matrix("linearized", pert, s)
    metrics = {}
    for wname in c["weightings"]:
        recs = []
        for eps in c["scales"]:
            shifted = type(m1)(m0.entries + eps * m1.entries, m0.basis, m0.sigma_in, m0.sigma_out)
            rec = stability_experiment(base, base + pert * eps, s, wname, matrices=(m0, shifted))
            recs.append(rec)
            ratio = rec.err / rec.bound if rec.bound > 0 else np.inf
            rows.append((wname, eps, rec.t, rec.err, rec.bound, ratio, rec.applicable))
        ts = np.array([r.t for r in recs])
        errs = np.array([r.err for r in recs])
        order = np.argsort(ts)
        monotone = bool(np.all(np.diff(errs[order]) > 0))
        applicable = [r for r in recs if r.applicable]
        const = max((r.err / r.bound for r in applicable), default=np.inf)
        metrics[f"{wname}_constant"] = const
        checks.append(check(f"monotone {wname}", float(monotone), 1.0, ">="))
        checks.append(check(f"finite constant {wname}", float(np.isfinite(const)), 1.0, ">="))
    return CriterionResult(8, "logarithmic stability", "logarithmic stability estimate", checks,
                           ("weighting", "scale", "t", "err", "modulus", "err_over_modulus",
                            "applicable"), rows, metrics)


# ---------------------------------------------------------------------------
# amplitudes, gauge and stationary phase


@_timed
def cgo_residual(cfg):
    """Conjugated residual of truncated amplitudes against the closed-form remainder."""
    c = cfg["cgo"]
    grid = fd.UniformGrid(tuple(c["lower"]), tuple(c["upper"]), tuple(c["shape"]))
    m = c["order"]
    rows = []
    checks = []
    phase = cgo.LinearPhase((1, 0, 0), (0, 1, 0), 1)
    amps = cgo.build_amplitudes("harmonic", phase, m, cgo.seed_holomorphic(grid, c["lam"]), grid)
    table = cgo.conjugated_residual(amps, c["h"])
    for r in table.rows:
        rows.append(("harmonic", 1, r.h, r.lhs_norm, r.predicted_norm, r.mismatch))
    checks.append(check("harmonic slope deviation", abs(table.slope - c["slope"]), c["slope_tol"]))
    checks.append(check("harmonic mismatch", max(r.mismatch for r in table.rows), c["mismatch_tol"]))
    metrics = {"harmonic_slope": table.slope}
    for sign in c["biharmonic_signs"]:
        phase = cgo.LinearPhase((1, 0, 0), (0, 1, 0), sign)
        amps = cgo.build_amplitudes("biharmonic", phase, m, cgo.seed_biharmonic(grid, c["lam"]),
                                    grid)
        table = cgo.conjugated_residual(amps, c["h"])
        for r in table.rows:
            rows.append(("biharmonic", sign, r.h, r.lhs_norm, r.predicted_norm, r.mismatch))
        checks.append(check(f"biharmonic mismatch sign {sign:+d}",
                            max(r.mismatch for r in table.rows), c["mismatch_tol"]))
        metrics[f"biharmonic_slope_{sign:+d}"] = table.slope
    return CriterionResult(9, "CGO conjugated residual", "conjugated residual of truncated "
                           "amplitudes", checks, ("kind", "sign", "h", "lhs_norm",
                                                  "predicted_norm", "relative_mismatch"),
                           rows, metrics)


def gauge_fixture(nodes):
    grid = fd.UniformGrid((0.0, 0.0), (np.pi, np.pi), (nodes, nodes))
    w = gauge.flat_bump(grid, core=lambda x, y: 1 + 0.3 * np.sin(x) * np.cos(y))
    return grid, w


HARMONIC_TESTS = {
    "1": lambda x, y: np.ones_like(x),
    "exp(x) cos(y)": lambda x, y: np.exp(x) * np.cos(y),
    "x^2 - y^2": lambda x, y: x ** 2 - y ** 2,
}


@_timed
def gauge_identity(cfg):
    """Integral identity for a natural gauge over random polynomials and harmonic tests."""
    c = cfg["gauge"]
    grid, w = gauge_fixture(c["nodes"])
    theta = gauge.gauge_from_w(w, grid)
    rng = np.random.default_rng(cfg["seed"])
    mesh = grid.mesh()
    wl1 = grid.integrate(np.abs(w))
    rows = []
    for k in range(c["samples"]):
        u = gauge.random_polynomial(rng, 2, c["degree"])(*mesh)
        scale = wl1 * gauge.c2_norm(u, grid)
        for name, v in HARMONIC_TESTS.items():
            val = gauge.integral_identity_eval(theta, u, v(*mesh))
            rows.append((k, name, abs(val), abs(val) / scale))
    worst = max(r[3] for r in rows)
    return CriterionResult(10, "gauge identity", "integral identity for the natural gauge",
                           [check("max scaled |integral|", worst, c["tol"])],
                           ("sample", "harmonic_test", "abs_integral", "scaled"), rows,
                           {"flatness": theta.flatness})


@_timed
def psi_reconstruction(cfg):
    """Decomposition of a manufactured second-order coefficient into Hessian plus multiple of Id."""
    c = cfg["psi"]
    a = c["half_width"]
    grid = fd.UniformGrid((-a, -a), (a, a), (c["nodes"], c["nodes"]))
    psi, _, hess = gauge.radial_bump(grid, c["psi_center"], c["radius"])
    w, _, _ = gauge.radial_bump(grid, c["w_center"], c["radius"])
    theta2 = hess + w * np.eye(2)[:, :, None, None]
    dec = gauge.psi_from_theta(theta2, grid)
    psi_err = float(np.max(np.abs(dec.psi - psi)) / np.max(np.abs(psi)))
    w_err = float(np.max(np.abs(dec.w - w)) / np.max(np.abs(w)))
    rows = [("decomposition residual", dec.residual), ("psi max error", psi_err),
            ("w max error", w_err), ("symmetry defect", dec.symmetry_defect)]
    return CriterionResult(11, "psi reconstruction", "Hessian-plus-identity decomposition",
                           [check("relative residual", dec.residual, c["tol"])],
                           ("quantity", "value"), rows)


@_timed
def stationary_phase(cfg):
    """Expansion error against the remainder bound for Gaussian amplitudes."""
    c = cfg["stationary_phase"]
    a = c["half_width"]
    width = c["width"]
    grid = fd.UniformGrid((-a, -a), (a, a), (c["nodes"], c["nodes"]))
    X, Y = grid.mesh()
    amp = np.exp(-(X ** 2 + Y ** 2) / (2 * width ** 2))
    func = lambda x, y: np.exp(-(x ** 2 + y ** 2) / (2 * width ** 2))  # noqa: E731
    rows = []
    worst = 0.0
    for A in c["matrices"]:
        for h in c["h"]:
            phase = gauge.QuadraticPhase(A, h)
            ref = gauge.oscillatory_quadrature(func, phase, a)
            for N in c["orders"]:
                val, bound = gauge.stationary_phase_expand(amp, grid, phase, N)
                err = abs(val - ref)
                rows.append((str(np.asarray(A).tolist()), h, N, err, bound, err / bound))
                worst = max(worst, err / bound)
    return CriterionResult(12, "stationary phase", "stationary phase expansion",
                           [check("max error / bound", worst, c["slack"])],
                           ("matrix", "h", "N", "error", "bound", "ratio"), rows)


@_timed
def trace_relations(cfg):
    """Trace relations for a natural gauge, and detection of a non-gauge counterexample."""
    c = cfg["trace_relations"]
    grid, w = gauge_fixture(c["nodes"])
    theta = gauge.gauge_from_w(w, grid)
    good = gauge.trace_relations_check(theta, c["tol"])
    second = np.zeros((2, 2) + grid.shape)
    second[0, 0] = w
    second[1, 1] = -w
    bad_theta = gauge.GaugeCoefficients(grid, second, np.zeros((2,) + grid.shape),
                                        np.zeros(grid.shape), theta.flatness)
    bad = gauge.trace_relations_check(bad_theta, c["tol"])
    rows = [("natural gauge",) + good.residuals, ("diag(w, -w)",) + bad.residuals]
    return CriterionResult(13, "2D trace relations", "trace relations of two-dimensional gauges",
                           [check("max gauge residual", max(good.residuals), c["tol"]),
                            check("counterexample flagged", float(not bad.passed), 1.0, ">=")],
                           ("input", "trace_x", "trace_y", "curl_x", "curl_y"), rows)


CRITERIA = {
    1: kernel_of_constants,
    2: poisson_equivalence,
    3: integration_by_parts,
    4: born_vs_direct,
    5: frechet_bound,
    6: alessandrini,
    7: reconstruction,
    8: log_stability,
    9: cgo_residual,
    10: gauge_identity,
    11: psi_reconstruction,
    12: stationary_phase,
    13: trace_relations,
}
