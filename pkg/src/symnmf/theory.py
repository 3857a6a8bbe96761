"""Executable checks for the solver's stability guarantees.

Covers the lower bounds on the penalty weight lam, the closed-form
proximality constant C, empirical certification that a trained block stays
within C*eps of the classical update on an eps-ball, the condition number
of the inversion layer, and the matrix-inverse perturbation inequalities
the proofs rest on.
"""

import math
import random
from dataclasses import dataclass

from . import linalg as la


@dataclass
class BoundInputs:
    """Constants entering the proximality bound.

    b_norm is the spectral norm of the input matrix, a uniformly bounds the
    Frobenius norms of the factor iterates, eps is the relative ball radius
    on the linear weights, lam the penalty weight.
    """

    b_norm: float
    a: float
    eps: float
    lam: float

    def __post_init__(self):
        if self.b_norm < 0.0 or self.a < 0.0 or self.eps < 0.0:
            raise ValueError("b_norm, a, eps must be nonnegative")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")


@dataclass
class ProximalityReport:
    samples: int
    max_ratio: float
    constant: float
    violations: int
    a: float
    lam: float
    eps: float
    weight_ratio: float

    def to_text(self):
        lines = [
            f"samples: {self.samples}",
            f"max_ratio: {self.max_ratio:.17g}",
            f"constant: {self.constant:.17g}",
            f"violations: {self.violations}",
            f"a: {self.a:.17g}",
            f"lam: {self.lam:.17g}",
            f"eps: {self.eps:.17g}",
            f"weight_ratio: {self.weight_ratio:.17g}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class PerturbationReport:
    diff_lhs: float
    diff_rhs: float
    inverse_lhs: float
    inverse_rhs: float
    contraction: float

    @property
    def diff_slack(self):
        return self.diff_rhs - self.diff_lhs

    @property
    def inverse_slack(self):
        return self.inverse_rhs - self.inverse_lhs

    def to_text(self):
        lines = [
            f"diff_lhs: {self.diff_lhs:.17g}",
            f"diff_rhs: {self.diff_rhs:.17g}",
            f"inverse_lhs: {self.inverse_lhs:.17g}",
            f"inverse_rhs: {self.inverse_rhs:.17g}",
            f"contraction: {self.contraction:.17g}",
        ]
        return "\n".join(lines) + "\n"


def proximality_lambda_bound(a, eps):
    """Smallest penalty weight keeping a block eps-proximal: a^2 + 4*a*eps."""
    if a < 0.0 or eps < 0.0:
        raise ValueError("a and eps must be nonnegative")
    return a * a + 4.0 * a * eps


def sufficiency_lambda_bound(x, u0):
    """Penalty weight above which the classical scheme's critical points
    survive unrolling: 0.5*(||X||_F + ||X - u0 u0^T||_F)."""
    resid = la.add_scaled(x, la.matmul(u0, la.transpose(u0)), -1.0)
    return 0.5 * (la.fro_norm(x) + la.fro_norm(resid))


def combined_lambda_bound(x, u0, a, eps):
    return max(proximality_lambda_bound(a, eps), sufficiency_lambda_bound(x, u0))


def proximality_constant(b):
    """Closed-form deviation constant C for one block.

    C = 4*(B+lam)*a^2/(lam-a^2)^2 + (B+lam)*a/(lam-a^2), finite only for
    lam > a^2.
    """
    gap = b.lam - b.a * b.a
    if gap <= 0.0:
        raise ValueError(f"lam must exceed a^2 (lam={b.lam}, a^2={b.a * b.a})")
    scale = b.b_norm + b.lam
    return 4.0 * scale * b.a * b.a / (gap * gap) + scale * b.a / gap


def _gaussian_direction(rows, cols, rng):
    d = la.DenseMatrix.zeros(rows, cols)
    for i in range(rows * cols):
        d.data[i] = rng.gauss(0.0, 1.0)
    return d


def verify_proximality(x, u_tilde, p, lam, eps, samples, seed=0):
    """Empirically certify that the block output stays within C*eps of the
    classical update over a spectral-norm eps-ball around u_tilde.

    Draws `samples` factors U = u_tilde + radius*D/||D||_2 with radius
    uniform on [0, eps], evaluates the block at each, and counts samples
    whose output strays farther than C*eps from the classical update.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    n, r = u_tilde.rows, u_tilde.cols
    rng = random.Random(seed)

    xl = la.add_diag(x, lam)
    b_norm = la.spectral_norm(x)
    u_fro = la.fro_norm(u_tilde)

    # weight deviation, proof-side form: ||P - (X+lam I)U~||_F relative to
    # ||X+lam I||_2 * ||U~||_F; must stay within eps for the bound to apply
    target = la.matmul(xl, u_tilde)
    weight_dev = la.fro_norm(la.add_scaled(p, target, -1.0))
    weight_cap = (b_norm + lam) * u_fro * eps
    if weight_dev > weight_cap * (1.0 + 1e-12):
        raise ValueError(
            f"weights stray {weight_dev:g} from the classical value, "
            f"allowed {weight_cap:g}"
        )
    target_fro = la.fro_norm(target)
    weight_ratio = weight_dev / target_fro if target_fro > 0.0 else 0.0

    # classical update at u_tilde
    inv_t = la.spd_inverse(la.gram(u_tilde), lam)
    ref, _ = la.relu(la.matmul(target, inv_t))

    drawn = []
    a = u_fro
    for _ in range(samples):
        d = _gaussian_direction(n, r, rng)
        dn = la.spectral_norm(d)
        radius = rng.random() * eps
        if dn > 0.0:
            u = la.add_scaled(u_tilde, d, radius / dn)
        else:
            u = u_tilde.copy()
        drawn.append(u)
        a = max(a, la.fro_norm(u))

    # the measured a must satisfy the hypothesis lam > a^2 + 4*a*eps
    need = proximality_lambda_bound(a, eps)
    if not lam > need:
        raise ValueError(
            f"lam={lam:g} does not exceed the proximality bound {need:g} "
            f"(a={a:g}, eps={eps:g})"
        )
    constant = proximality_constant(BoundInputs(b_norm, a, eps, lam))

    cap = constant * eps
    max_ratio = 0.0
    violations = 0
    for u in drawn:
        inv = la.spd_inverse(la.gram(u), lam)
        out, _ = la.relu(la.matmul(p, inv))
        dist = la.fro_norm(la.add_scaled(out, ref, -1.0))
        if dist > cap * (1.0 + 1e-12):
            violations += 1
        if eps > 0.0:
            max_ratio = max(max_ratio, dist / eps)
        elif dist > 0.0:
            max_ratio = math.inf
    return ProximalityReport(
        samples=samples,
        max_ratio=max_ratio,
        constant=constant,
        violations=violations,
        a=a,
        lam=lam,
        eps=eps,
        weight_ratio=weight_ratio,
    )


def inversion_condition_number(u, lam):
    """Exact condition number of (U^T U + lam I)^-1 and its lam-only bound.

    Returns (exact, bound) with exact = (s1^2+lam)/(sr^2+lam) computed from
    the extreme singular values of U, bound = 1 + s1^2/lam.
    """
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    g = la.gram(u)
    hi = la.spectral_norm(g)
    if hi == 0.0:
        return 1.0, 1.0
    # smallest eigenvalue of the PSD gram via the shifted matrix hi*I - G,
    # whose spectral norm is hi - lo
    shifted = la.add_scaled(la.scale(la.DenseMatrix.identity(g.rows), hi), g, -1.0)
    lo = hi - la.spectral_norm(shifted)
    if lo < 0.0:
        lo = 0.0
    exact = (hi + lam) / (lo + lam)
    bound = 1.0 + hi / lam
    return exact, bound


def check_inverse_perturbation(a_mat, delta):
    """Evaluate both sides of the inverse-perturbation inequalities.

    For symmetric positive definite A and symmetric perturbation D with
    t = ||A^-1 D||_2 < 1 and B = A + D:
        ||B^-1 - A^-1||_2 <= ||A^-1||_2^2 ||D||_2 / (1 - t)
        ||B^-1||_2 <= ||A^-1||_2 / (1 - t)
    Raises if the precondition fails or either inequality is violated
    beyond floating-point slack.
    """
    a_inv = la.cholesky(a_mat).inverse()
    na_inv = la.spectral_norm(a_inv)
    nd = la.spectral_norm(delta)
    t = la.spectral_norm(la.matmul(a_inv, delta))
    if t >= 1.0:
        raise ValueError(f"||A^-1 D||_2 = {t:g} must be < 1")
    b_inv = la.cholesky(la.add(a_mat, delta)).inverse()
    diff_lhs = la.spectral_norm(la.add_scaled(b_inv, a_inv, -1.0))
    diff_rhs = na_inv * na_inv * nd / (1.0 - t)
    inverse_lhs = la.spectral_norm(b_inv)
    inverse_rhs = na_inv / (1.0 - t)
    report = PerturbationReport(diff_lhs, diff_rhs, inverse_lhs, inverse_rhs, t)
    tol = 1e-9
    if report.diff_slack < -tol * max(1.0, diff_rhs):
        raise ArithmeticError(
            f"perturbation difference bound violated: {diff_lhs:g} > {diff_rhs:g}"
        )
    if report.inverse_slack < -tol * max(1.0, inverse_rhs):
        raise ArithmeticError(
            f"perturbed inverse norm bound violated: {inverse_lhs:g} > {inverse_rhs:g}"
        )
    return report
