"""Radial coefficient families, Fejer smoothing, and tree operator families.

Three layers build on each other here.  The scalar family z^length turns
into finitely supported radial multipliers by averaging against the Fejer
kernel on the parameter circle; the closed form (1 - l/(N+1)) r^l is cross
checked against the defining quadrature.  Averaging is also the bound
aggregator: nonnegative kernel weights turn per-parameter norm bounds into
a bound for the averaged multiplier.

The third layer realizes the coefficient family concretely on a free
group.  Feature vectors indexed by the radius-R ball (one prefix chain per
element) conjugate the index shift of left multiplication into operators
pi_z(s) whose matrix coefficient at the basepoint reproduces z^length
exactly for words that fit in the ball.  Truncation is quarantined, not
hidden: overflow columns on the outer sphere are rerouted to the unreached
outer-sphere rows, every check restricts itself to an interior margin, and
the construction ships with its own contract checks (coefficient
reproduction, orthogonality at real parameters, a Cauchy-Riemann
difference-quotient test) plus an empirical operator-norm sweep that is
reported as a sample, never as a certified norm.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from mdlab.config import fmt
from mdlab.groups import Ball, FreeGroup, GroupRealization, ZnGroup, build_ball
from mdlab.multipliers import (
    Multiplier,
    MultiplierError,
    NormBracket,
    compute_bracket,
    density_quadrature_certificate,
)

__all__ = [
    "FamilyError",
    "power_coefficient",
    "radial_power",
    "fejer_kernel_coeff",
    "fejer_kernel_value",
    "fejer_nodes",
    "fejer_multiplier",
    "fejer_poisson_density",
    "fejer_bracket",
    "quadrature_average",
    "averaged_bound",
    "TreeFamily",
    "TreeFamilyPoint",
    "tree_family_point",
    "empirical_bound",
    "holomorphy_check",
    "averaged_family_bound",
    "fejer_bracket_tree",
    "family_report",
    "write_family_report",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_report",
    "write_convergence_csv",
]


class FamilyError(ValueError):
    """A family construction failed validation or its own contract checks."""


# ---------------------------------------------------------------------------
# radial coefficient families
# ---------------------------------------------------------------------------

def power_coefficient(z: complex, length: int) -> complex:
    """z**length with the 0**0 = 1 convention, so the identity always gets 1."""
    if length < 0:
        raise FamilyError(f"length must be >= 0, got {length}")
    if length == 0:
        return complex(1.0)
    return complex(z) ** length


def radial_power(group: GroupRealization, z: complex, max_len: int) -> Multiplier:
    """The radial multiplier t -> z^length(t), materialized up to max_len."""
    z = complex(z)
    if abs(z) >= 1.0:
        raise FamilyError(f"parameter must satisfy |z| < 1, got |z| = {abs(z)}")
    coeffs = [power_coefficient(z, ell) for ell in range(max_len + 1)]
    return Multiplier.radial(group, coeffs, name=f"power-{z:.6g}")


# ---------------------------------------------------------------------------
# Fejer kernel and smoothing
# ---------------------------------------------------------------------------

def fejer_kernel_coeff(N: int, n: int) -> float:
    """Fourier coefficient of the degree-N Fejer kernel: max(0, 1 - |n|/(N+1))."""
    if N < 0:
        raise FamilyError(f"kernel degree must be >= 0, got {N}")
    return max(0.0, 1.0 - abs(n) / (N + 1))


def fejer_kernel_value(N: int, theta) -> np.ndarray:
    """Kernel values (sin((N+1)t/2) / sin(t/2))^2 / (N+1), vectorized.

    The closed form is a square, so the output is nonnegative by
    construction; the removable singularity at t = 0 (mod 2pi) takes the
    limit value N+1.
    """
    if N < 0:
        raise FamilyError(f"kernel degree must be >= 0, got {N}")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    M = N + 1
    s = np.sin(0.5 * th)
    out = np.full(th.shape, float(M))
    reg = s != 0.0
    ratio = np.sin(M * 0.5 * th[reg]) / s[reg]
    out[reg] = ratio * ratio / M
    return out


def fejer_nodes(N: int, quad_factor: int = 4):
    """Uniform circle nodes and Fejer weights w_q = F_N(theta_q)/Q.

    Q = quad_factor*(N+1) nodes make the trapezoid rule exact for
    trigonometric polynomials of degree <= Q-1, which covers every product
    F_N(theta) e^(i l theta) with l <= N and then some.  The weights are
    nonnegative and sum to 1 exactly (the aliases of the unit mass vanish).
    """
    if N < 0:
        raise FamilyError(f"kernel degree must be >= 0, got {N}")
    if quad_factor < 4:
        raise FamilyError(f"need at least 4(N+1) quadrature nodes, got factor {quad_factor}")
    Q = quad_factor * (N + 1)
    thetas = 2.0 * math.pi * np.arange(Q) / Q
    weights = fejer_kernel_value(N, thetas) / Q
    return thetas, weights


def fejer_multiplier(group: GroupRealization, N: int, r: float) -> Multiplier:
    """Closed form of the kernel-smoothed radial family: (1 - l/(N+1)) r^l.

    Radial, supported on lengths 0..N.  This is what averaging the family
    z^length over z = r e^(i theta) against the Fejer kernel produces; the
    identity is tested, not assumed (see quadrature_average).
    """
    if N < 0:
        raise FamilyError(f"kernel degree must be >= 0, got {N}")
    if not 0.0 < r < 1.0:
        raise FamilyError(f"radius must lie in (0, 1), got {r}")
    coeffs = [fejer_kernel_coeff(N, ell) * r ** ell for ell in range(N + 1)]
    return Multiplier.radial(group, coeffs, name=f"fejer-N{N}-r{r:.6g}")


def fejer_poisson_density(N: int, r: float) -> Callable:
    """Circle density of the smoothed family on Z: the kernel-Poisson convolution.

    Evaluates sum over |m| <= N of (1 - |m|/(N+1)) r^|m| e^(i m theta)
    through the geometric closed form, O(1) per node for any N.  As a
    convolution of two nonnegative kernels the density is >= 0, which is
    what makes the quadrature certificate route work; its mean recovers
    the coefficient at 0, namely 1.
    """
    if N < 0:
        raise FamilyError(f"kernel degree must be >= 0, got {N}")
    if not 0.0 < r < 1.0:
        raise FamilyError(f"radius must lie in (0, 1), got {r}")
    M = N + 1

    def density(thetas) -> np.ndarray:
        th = np.asarray(thetas, dtype=float)
        if th.ndim == 2:
            if th.shape[1] != 1:
                raise MultiplierError("the kernel-Poisson density lives on one circle")
            th = th[:, 0]
        x = r * np.exp(1j * th)
        # sum_{m=0..N} (1 - m/M) x^m = (M - (M+1) x + x^(M+1)) / (M (1-x)^2)
        s = (M - (M + 1) * x + x ** (M + 1)) / (M * (1.0 - x) ** 2)
        return 2.0 * s.real - 1.0

    return density


def fejer_bracket(group: ZnGroup, N: int, r: float, d: int, ball: Ball, *,
                  quad_factor: int = 4, sdp_tol: float = 1e-8,
                  sdp_max_iter: int = 100, window_cap: int = 66):
    """Multiplier plus norm bracket on Z, upper bound from the circle density.

    The density is nonnegative, so its balanced quadrature split certifies
    upper = quadrature mean = 1 up to float summation, at every order d.
    Returns (multiplier, bracket).
    """
    if not (isinstance(group, ZnGroup) and group.n == 1):
        raise MultiplierError("the density certificate route needs the group Z")
    phi = fejer_multiplier(group, N, r)
    Q = max(quad_factor * (N + 1), 16)
    cert = density_quadrature_certificate(group, fejer_poisson_density(N, r), Q=Q)
    bracket = compute_bracket(group, phi, d, ball, certificate=cert,
                              sdp_tol=sdp_tol, sdp_max_iter=sdp_max_iter,
                              window_cap=window_cap)
    return phi, bracket


# ---------------------------------------------------------------------------
# quadrature averaging
# ---------------------------------------------------------------------------

def quadrature_average(samples: Sequence[Multiplier], weights,
                       cutoff: float = 1e-14, name: str | None = None):
    """Pointwise weighted average of a grid of multipliers.

    All samples must share a kind (finite or radial).  Averaged values with
    modulus below cutoff are dropped as floating-point dust; the dropped
    mass is returned alongside the result as (multiplier, dropped_mass).
    """
    samples = list(samples)
    w = np.asarray(weights, dtype=float)
    if len(samples) != w.shape[0] or w.ndim != 1:
        raise MultiplierError(
            f"{len(samples)} samples need as many weights, got shape {w.shape}")
    if not samples:
        raise MultiplierError("cannot average an empty sample grid")
    kinds = {s.kind for s in samples}
    if kinds == {"radial"}:
        length = max(len(s.coeffs) for s in samples)
        acc = np.zeros(length, dtype=complex)
        for wq, s in zip(w, samples):
            c = np.asarray(s.coeffs, dtype=complex)
            acc[:c.shape[0]] += wq * c
        small = np.abs(acc) < cutoff
        dropped = float(np.abs(acc[small]).sum())
        acc[small] = 0.0
        nz = np.nonzero(acc)[0]
        coeffs = list(acc[:nz[-1] + 1]) if nz.size else []
        avg = Multiplier.radial(samples[0].group, coeffs,
                                name=name or f"avg-{samples[0].name}")
        return avg, dropped
    if kinds == {"finite"}:
        acc_map: dict = {}
        for wq, s in zip(w, samples):
            for t, v in s.support_items():
                acc_map[t] = acc_map.get(t, 0j) + wq * v
        dropped = sum(abs(v) for v in acc_map.values() if abs(v) < cutoff)
        support = {t: v for t, v in acc_map.items() if abs(v) >= cutoff}
        avg = Multiplier.finite(samples[0].group, support,
                                name=name or f"avg-{samples[0].name}")
        return avg, float(dropped)
    raise MultiplierError(f"averaging needs uniform finite or radial samples, got kinds {sorted(kinds)}")


def averaged_bound(weights, bounds) -> float:
    """Norm bound for a weighted average: sum of w_q * b_q, weights >= 0.

    Valid because norm balls are convex; a negative weight would break the
    argument, so it is rejected.
    """
    w = np.asarray(weights, dtype=float)
    b = np.asarray(bounds, dtype=float)
    if w.shape != b.shape or w.ndim != 1:
        raise MultiplierError(f"weights {w.shape} and bounds {b.shape} must match")
    if w.size and w.min() < 0.0:
        raise MultiplierError(f"averaged bounds need nonnegative weights, got {w.min()}")
    return float(w @ b)


# ---------------------------------------------------------------------------
# tree operator family
# ---------------------------------------------------------------------------

class TreeFamily:
    """Shared combinatorics for one free group and one ball radius.

    Everything independent of the parameter z is tabulated once: prefix
    chains of every ball element (the sparsity pattern of the feature
    matrix V), the parent links its inverse needs, and for each generator
    the index map of left multiplication with the outer-sphere rerouting
    already matched up.  Points of the family, and the shifted evaluations
    the difference-quotient checks need, then cost one sparse refill each.
    """

    def __init__(self, rank: int = 2, radius: int = 6, *,
                 ball: Ball | None = None, cap: int = 500_000):
        if radius < 3:
            raise FamilyError(f"ball radius must be >= 3 for the interior checks, got {radius}")
        if ball is not None:
            if not isinstance(ball.group, FreeGroup):
                raise FamilyError("tree families need a free-group ball")
            if ball.radius != radius:
                raise FamilyError(f"ball radius {ball.radius} does not match {radius}")
            self.group = ball.group
            self.ball = ball
        else:
            if not 1 <= rank <= 26:
                raise FamilyError(f"free rank must be in 1..26, got {rank}")
            self.group = FreeGroup(rank)
            self.ball = build_ball(self.group, radius, cap=cap)
        self.radius = radius
        n = len(self.ball)
        index = self.ball.index
        elements = self.ball.elements

        # V pattern: column x holds z^len(x) at the basepoint row plus
        # c * z^(len(x)-i) at each proper prefix row (c = sqrt(1 - z^2)).
        rows, cols, exps, base = [], [], [], []
        parent = np.zeros(n, dtype=np.intp)
        for j, x in enumerate(elements):
            rows.append(0)
            cols.append(j)
            exps.append(len(x))
            base.append(True)
            for i in range(1, len(x) + 1):
                rows.append(index[x[:i]])
                cols.append(j)
                exps.append(len(x) - i)
                base.append(False)
            if x:
                parent[j] = index[x[:-1]]
        self._v_rows = np.asarray(rows, dtype=np.intp)
        self._v_cols = np.asarray(cols, dtype=np.intp)
        self._v_exps = np.asarray(exps, dtype=np.intp)
        self._v_base = np.asarray(base, dtype=bool)
        self._parent = parent

        # inverse pattern: delta_x = (v_x - z v_parent(x)) / c, column e is e_0
        self._iv_rows = np.concatenate([[0], np.stack([np.arange(1, n), parent[1:]], axis=1).ravel()]) \
            if n > 1 else np.zeros(1, dtype=np.intp)
        self._iv_cols = np.concatenate([[0], np.repeat(np.arange(1, n), 2)]) \
            if n > 1 else np.zeros(1, dtype=np.intp)
        # 0: literal 1, 1: 1/c, 2: -z/c
        self._iv_kind = np.concatenate([[0], np.tile([1, 2], n - 1)]) \
            if n > 1 else np.zeros(1, dtype=np.intp)

        # left-multiplication index maps, overflow columns rerouted to the
        # unreached rows (both live on the outer sphere; sorted order pairs them)
        self._perm: dict = {}
        for s in self.group.generators():
            img = np.empty(n, dtype=np.intp)
            for j, x in enumerate(elements):
                img[j] = index.get(self.group.multiply(s, x), -1)
            out_cols = np.nonzero(img < 0)[0]
            unhit = np.setdiff1d(np.arange(n), img[img >= 0], assume_unique=False)
            assert out_cols.shape == unhit.shape
            assert all(self.ball.lengths[j] == radius for j in out_cols)
            img[out_cols] = unhit
            self._perm[s] = img

    # -- per-parameter matrices ------------------------------------------------

    def _pair(self, z: complex):
        """Sparse (V, V^-1) at the parameter z; both are exact by pattern."""
        z = complex(z)
        if abs(z) >= 1.0:
            raise FamilyError(f"parameter must satisfy |z| < 1, got |z| = {abs(z)}")
        n = len(self.ball)
        c = cmath.sqrt(1.0 - z * z)
        zpow = z ** np.arange(self.radius + 1, dtype=float)
        if z == 0:
            zpow = np.zeros(self.radius + 1, dtype=complex)
            zpow[0] = 1.0
        vals = np.where(self._v_base, zpow[self._v_exps], c * zpow[self._v_exps])
        V = sp.csr_matrix((vals, (self._v_rows, self._v_cols)), shape=(n, n))
        table = np.array([1.0, 1.0 / c, -z / c], dtype=complex)
        Vinv = sp.csc_matrix((table[self._iv_kind], (self._iv_rows, self._iv_cols)),
                             shape=(n, n))
        return V, Vinv

    def point(self, z: complex, *, check: bool = True, tol: float = 1e-8) -> "TreeFamilyPoint":
        pt = TreeFamilyPoint(self, complex(z))
        if check:
            pt.run_contract_checks(tol)
        return pt

    def coefficient_path(self, z: complex, t) -> complex:
        """Basepoint coefficient of the word t at parameter z, light route.

        Rebuilds only the two sparse factors and walks the letters of t with
        matrix-vector products; exact for len(t) <= radius because no
        intermediate index ever reaches a rerouted column.
        """
        self.group.validate(t)
        if len(t) > self.radius:
            raise FamilyError(f"word of length {len(t)} does not fit in radius {self.radius}")
        V, Vinv = self._pair(z)
        n = len(self.ball)
        w = np.zeros(n, dtype=complex)
        w[0] = 1.0
        for letter in reversed(t):
            u = Vinv @ w
            shuffled = np.zeros(n, dtype=complex)
            shuffled[self._perm[(letter,)]] = u
            w = V @ shuffled
        return complex(w[0])

    def holomorphy_residual(self, t, z0: complex, h: float) -> float:
        """Cauchy-Riemann defect of z -> coefficient(t) by central differences.

        For an analytic coefficient the defect is h^2 |f'''| / 6 + O(h^4),
        so halving h divides it by about 4; words of length >= 3 keep the
        third derivative away from zero.
        """
        z0 = complex(z0)
        if h <= 0:
            raise FamilyError(f"step must be positive, got {h}")
        steps = (z0 + h, z0 - h, z0 + 1j * h, z0 - 1j * h)
        if any(abs(w) >= 1.0 for w in steps):
            raise FamilyError(f"difference step {h} leaves the open unit disk at {z0}")
        f = lambda w: self.coefficient_path(w, t)
        fx = (f(z0 + h) - f(z0 - h)) / (2.0 * h)
        dy = (f(z0 + 1j * h) - f(z0 - 1j * h)) / (2.0 * h)
        return abs(0.5 * (fx + 1j * dy))

    def cr_ratio(self, t, z0: complex, h: float = 1e-3) -> float:
        """residual(h) / residual(h/2); about 4 when the coefficient is analytic."""
        num = self.holomorphy_residual(t, z0, h)
        den = self.holomorphy_residual(t, z0, h / 2.0)
        if den == 0.0:
            return math.inf
        return num / den


class TreeFamilyPoint:
    """Operators pi_z(s) = V P_s V^-1 on the ball basis at one parameter z.

    V's columns are the prefix feature vectors, P_s the rerouted index map
    of left multiplication.  Claims are interior-restricted: test words and
    column ranges of length <= radius - margin never touch the rerouting,
    so coefficient and orthogonality residuals are float noise, not model
    error.  The empirical bound is a certified sample from below of the
    true operator-norm supremum, nothing more.
    """

    margin = 2

    def __init__(self, family: TreeFamily, z: complex):
        self.family = family
        self.z = complex(z)
        self.radius = family.radius
        self.V, self.Vinv = family._pair(z)
        self._pi_cache: dict = {}
        self._bound: float | None = None
        self._zpow = np.array([power_coefficient(self.z, k)
                               for k in range(self.radius + 1)])

    # -- basic operators -------------------------------------------------------

    def pi_matrix(self, s) -> sp.csr_matrix:
        """Generator operator as a sparse matrix (built once, then cached)."""
        if s not in self._pi_cache:
            if s not in self.family._perm:
                raise FamilyError(f"{s!r} is not a generator")
            perm = self.family._perm[s]
            A = self.Vinv.tocoo()
            shifted = sp.csr_matrix((A.data, (perm[A.row], A.col)), shape=A.shape)
            self._pi_cache[s] = (self.V @ shifted).tocsr()
        return self._pi_cache[s]

    def apply(self, t, vec: np.ndarray) -> np.ndarray:
        """Chain the generator matrices of the word t onto a vector."""
        self.family.group.validate(t)
        w = np.asarray(vec, dtype=complex)
        for letter in reversed(t):
            w = self.pi_matrix((letter,)) @ w
        return w

    def coefficient(self, t) -> complex:
        """Basepoint matrix coefficient of the word t via the generator chain."""
        n = len(self.family.ball)
        e0 = np.zeros(n, dtype=complex)
        e0[0] = 1.0
        return complex(self.apply(t, e0)[0])

    def _interior_count(self, depth: int) -> int:
        return sum(self.family.ball.sphere_sizes[:max(depth, 0) + 1])

    # -- contract residuals ----------------------------------------------------

    def coefficient_residual(self) -> float:
        """max |coefficient(t) - z^len(t)| over the whole interior ball.

        Walks the ball breadth-first so each element costs one sparse
        matvec on top of its parent suffix; exercises the actual generator
        matrices rather than the formula they came from.
        """
        ball = self.family.ball
        m = self._interior_count(self.radius - self.margin)
        n = len(ball)
        W = np.zeros((m, n), dtype=complex)
        W[0, 0] = 1.0
        worst = 0.0
        for j in range(1, m):
            x = ball.elements[j]
            head = self.pi_matrix((x[0],))
            W[j] = head @ W[ball.index[x[1:]]]
            worst = max(worst, abs(W[j, 0] - self._zpow[len(x)]))
        return worst

    def unitarity_residual(self) -> float:
        """max over generators of ||(pi(s)* pi(s) - I)|_interior||_F.

        Zero in exact arithmetic at real parameters (the feature vectors
        are then a genuine orthogonal family); the Frobenius norm dominates
        the operator norm, erring conservative.  At non-real z the value is
        reported but means nothing: the operators are not unitary there.
        """
        m = self._interior_count(self.radius - self.margin)
        worst = 0.0
        eye = sp.identity(m, dtype=complex, format="csr")
        for s in self.family.group.generators():
            Q = self.pi_matrix(s)[:, :m]
            G = (Q.conj().T @ Q - eye).toarray()
            worst = max(worst, float(np.linalg.norm(G, "fro")))
        return worst

    def interior_map(self, t) -> sp.csr_matrix:
        """pi_z(t) restricted to columns of depth <= radius - len(t), built direct.

        The restriction keeps every needed image inside the ball, so the
        matrix equals the untruncated operator on those columns; no product
        of generator matrices (and none of their rerouting) is involved.
        """
        self.family.group.validate(t)
        ell = len(t)
        if ell > self.radius:
            raise FamilyError(f"word of length {ell} does not fit in radius {self.radius}")
        ball = self.family.ball
        n = len(ball)
        m = self._interior_count(self.radius - ell)
        mul = self.family.group.multiply
        p = np.fromiter((ball.index[mul(t, x)] for x in ball.elements[:m]),
                        dtype=np.intp, count=m)
        A = self.Vinv[:, :m].tocoo()
        shifted = sp.csr_matrix((A.data, (p[A.row], A.col)), shape=(n, m))
        return (self.V @ shifted).tocsr()

    def product_defect(self, s, t) -> float:
        """||pi(s) pi(t) - pi(st)|| on columns deep enough for both routes.

        Frobenius norm of the difference between the chained product and
        the directly built operator; float noise when the construction is
        consistent.
        """
        both = len(s) + len(t)
        if both > self.radius:
            raise FamilyError(f"combined length {both} does not fit in radius {self.radius}")
        m = self._interior_count(self.radius - both)
        prod = self.interior_map(t)[:, :m]
        for letter in reversed(s):
            prod = self.pi_matrix((letter,)) @ prod
        direct = self.interior_map(self.family.group.multiply(s, t))[:, :m]
        return float(np.linalg.norm((prod - direct).toarray(), "fro"))

    def empirical_bound(self) -> float:
        """max over ball words t of the interior-restricted norm of pi_z(t).

        A lower sample of the operator-norm supremum (power iteration
        underestimates, restriction discards columns), reported as
        empirical evidence only.  Exactly 1 at real parameters, where the
        restricted columns are orthonormal.
        """
        if self._bound is not None:
            return self._bound
        best = 1.0
        for t in self.family.ball.elements[1:]:
            M = self.interior_map(t)
            best = max(best, _sigma_max_lower(M))
        self._bound = best
        return best

    def cr_residual(self, t, h: float = 1e-3) -> float:
        return self.family.holomorphy_residual(t, self.z, h)

    def cr_ratio(self, t, h: float = 1e-3) -> float:
        return self.family.cr_ratio(t, self.z, h)

    # -- contract bundle -------------------------------------------------------

    def contract_checks(self, h: float | None = None) -> dict:
        """All residuals in one dict; enforcement lives in run_contract_checks."""
        ball = self.family.ball
        probe = ball.sphere(3)[0]  # first length-3 word: third derivative is 6 z^0
        if h is None:
            h = min(1e-3, (1.0 - abs(self.z)) / 8.0)
        return {
            "coefficient_residual": self.coefficient_residual(),
            "unitarity_residual": self.unitarity_residual(),
            "cr_residual": self.family.holomorphy_residual(probe, self.z, h),
            "cr_ratio": self.family.cr_ratio(probe, self.z, h),
        }

    def run_contract_checks(self, tol: float = 1e-8) -> dict:
        """Enforce the construction contract; FamilyError lists what failed.

        Coefficient reproduction is required everywhere, orthogonality only
        at real parameters, and the difference-quotient ratio must sit near
        the analytic value 4.
        """
        checks = self.contract_checks()
        failures = []
        if checks["coefficient_residual"] > tol:
            failures.append(f"coefficient residual {checks['coefficient_residual']:.3e} > {tol:.1e}")
        if self.z.imag == 0.0 and checks["unitarity_residual"] > tol:
            failures.append(f"unitarity residual {checks['unitarity_residual']:.3e} > {tol:.1e}")
        if not 3.5 <= checks["cr_ratio"] <= 4.5:
            failures.append(f"difference-quotient ratio {checks['cr_ratio']:.3f} outside [3.5, 4.5]")
        if failures:
            raise FamilyError("construction contract violated: " + "; ".join(failures))
        return checks


def _sigma_max_lower(M: sp.spmatrix, iters: int = 60, rtol: float = 1e-13) -> float:
    """Largest singular value from below by power iteration on M*M.

    Fixed real start vector keeps the estimate deterministic and makes it
    conjugation-equivariant: conjugate input data gives the bit-identical
    value.
    """
    m = M.shape[1]
    if m == 0:
        return 0.0
    Mh = M.conj().T.tocsr()
    x = np.full(m, 1.0 / math.sqrt(m))
    lam = 0.0
    for _ in range(iters):
        y = Mh @ (M @ x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - lam) <= rtol * max(new, 1.0):
            lam = new
            break
        lam = new
    return math.sqrt(lam)


def tree_family_point(z: complex, R: int, k: int, *, check: bool = True,
                      tol: float = 1e-8, family: TreeFamily | None = None) -> TreeFamilyPoint:
    """One checked family point on the rank-k tree, ball radius R.

    Builds a fresh skeleton unless one is supplied; grids of parameters
    should construct a TreeFamily once and call .point on it.
    """
    fam = family if family is not None else TreeFamily(k, R)
    if family is not None and (family.radius != R or family.group.rank != k):
        raise FamilyError("supplied family does not match R and k")
    return fam.point(z, check=check, tol=tol)


def empirical_bound(point: TreeFamilyPoint) -> float:
    """Operator-norm sample of a family point; empirical, never certified."""
    return point.empirical_bound()


def holomorphy_check(family: TreeFamily, t, z0: complex, h: float) -> float:
    """Cauchy-Riemann residual of the coefficient map at z0 with step h."""
    return family.holomorphy_residual(t, z0, h)


def family_report(point: TreeFamilyPoint, h: float = 1e-3) -> dict:
    """Flat JSON-ready summary of one family point's residuals and bound."""
    ball = point.family.ball
    probe = ball.sphere(3)[0]
    return {
        "z": [point.z.real, point.z.imag],
        "R": point.radius,
        "unitarity_residual": point.unitarity_residual(),
        "coefficient_residual": point.coefficient_residual(),
        "cr_residual": point.cr_residual(probe, h),
        "empirical_bound": point.empirical_bound(),
    }


def write_family_report(fh, report: dict) -> None:
    json.dump(report, fh, sort_keys=True, indent=2)
    fh.write("\n")


# ---------------------------------------------------------------------------
# averaged bounds on the tree
# ---------------------------------------------------------------------------

def averaged_family_bound(family: TreeFamily, N: int, r: float, d: int, *,
                          quad_factor: int = 4):
    """Order-d bound for the smoothed family by averaging point bounds.

    Sum of w_q * b(r e^(i theta_q))^d over the Fejer nodes, where b is the
    empirical operator-norm sample of each family point; conjugate nodes
    share their bound, halving the sweep.  Returns (value, flags); the
    flags say plainly that nothing here is certified.
    """
    if d < 1:
        raise FamilyError(f"order d must be >= 1, got {d}")
    thetas, weights = fejer_nodes(N, quad_factor)
    Q = thetas.shape[0]
    vals = np.empty(Q)
    half = Q // 2
    for q in range(half + 1):
        zq = r * cmath.exp(1j * thetas[q])
        vals[q] = family.point(zq, check=False).empirical_bound()
    for q in range(half + 1, Q):
        vals[q] = vals[Q - q]
    value = averaged_bound(weights, vals ** d)
    return value, ("empirical", "family-average")


def fejer_bracket_tree(family: TreeFamily, N: int, r: float, d: int, *,
                       quad_factor: int = 4, sdp_ball: Ball | None = None,
                       sdp_tol: float = 1e-8, sdp_max_iter: int = 100,
                       window_cap: int = 66):
    """Multiplier plus bracket on the free group; empirical upper route.

    Lower bounds come from the certified window machinery; the upper bound
    averages empirical family bounds and is flagged as such.  Returns
    (multiplier, bracket).
    """
    phi = fejer_multiplier(family.group, N, r)
    ball = sdp_ball if sdp_ball is not None else build_ball(family.group,
                                                            min(2, family.radius))
    base = compute_bracket(family.group, phi, d, ball, certificate=None,
                           sdp_tol=sdp_tol, sdp_max_iter=sdp_max_iter,
                           window_cap=window_cap)
    upper, uflags = averaged_family_bound(family, N, r, d, quad_factor=quad_factor)
    if base.upper <= upper:
        return phi, base
    return phi, NormBracket(
        phi_id=base.phi_id, d=d, window_radius=base.window_radius,
        lower=base.lower, upper=upper,
        lower_provenance=base.lower_provenance,
        upper_provenance="family-average-empirical",
        flags=base.flags + uflags)


# ---------------------------------------------------------------------------
# convergence reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    """One approximant: window residual to 1 next to its norm bracket."""

    n: int
    N: object
    r: object
    pointwise_residual: float
    lower: float
    upper: float
    flags: tuple


@dataclass
class ConvergenceReport:
    """Approximate-identity audit for a sequence of multipliers.

    success means: window residuals decrease monotonically (within float
    slack), the last one dips below success_residual, and every upper
    bound stays below the uniform constant C.
    """

    d: int
    C: float
    window_radius: int
    success_residual: float
    rows: list
    success: bool


def _upper_certainty(provenance: str, upper: float) -> str:
    if provenance == "none" or math.isinf(upper):
        return "none"
    if "sampled" in provenance or "empirical" in provenance:
        return "empirical"
    return "certified"


def convergence_report(group: GroupRealization, d: int, pairs, labels, *,
                       C: float = 1.0, window_radius: int = 1,
                       success_residual: float = 0.01,
                       ball: Ball | None = None) -> ConvergenceReport:
    """Audit a sequence of (multiplier, bracket) rows as approximants of 1.

    pairs is the sequence of (Multiplier, NormBracket); labels supplies the
    (N, r) tags of each row for the CSV (box size and 1 work fine for
    translation-invariant tents).  The pointwise residual is the sup of
    |phi(t) - 1| over the fixed window ball.
    """
    pairs = list(pairs)
    labels = list(labels)
    if len(labels) != len(pairs):
        raise MultiplierError(f"{len(pairs)} rows need as many labels, got {len(labels)}")
    window = ball if ball is not None else build_ball(group, window_radius)
    rows = []
    residuals = []
    for i, ((phi, bracket), (labN, labr)) in enumerate(zip(pairs, labels)):
        res = max(abs(complex(phi(t)) - 1.0) for t in window.elements)
        flags = tuple(bracket.flags) + (
            "lower-certified",
            "upper-" + _upper_certainty(bracket.upper_provenance, bracket.upper))
        rows.append(ConvergenceRow(n=i, N=labN, r=labr, pointwise_residual=res,
                                   lower=bracket.lower, upper=bracket.upper,
                                   flags=flags))
        residuals.append(res)
    monotone = all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    bounded = all(row.upper <= C + 1e-6 for row in rows)
    success = bool(residuals) and monotone and bounded and residuals[-1] < success_residual
    return ConvergenceReport(d=d, C=C, window_radius=window.radius,
                             success_residual=success_residual,
                             rows=rows, success=success)


_CONVERGENCE_COLS = ["n", "N", "r", "pointwise_residual", "lower", "upper", "flags"]


def write_convergence_csv(fh, report: ConvergenceReport,
                          header_lines: Iterable[str] = ()) -> None:
    """CSV dump; the header comments record the audit parameters and verdict."""
    for line in header_lines:
        fh.write(line.rstrip("\n") + "\n")
    fh.write(f"# d={report.d}\n")
    fh.write(f"# C={fmt(report.C)}\n")
    fh.write(f"# window_radius={report.window_radius}\n")
    fh.write(f"# success_residual={fmt(report.success_residual)}\n")
    fh.write(f"# result={'SUCCESS' if report.success else 'INCOMPLETE'}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(_CONVERGENCE_COLS)
    for row in report.rows:
        w.writerow([
            row.n,
            row.N if isinstance(row.N, (int, np.integer)) else fmt(float(row.N)),
            row.r if isinstance(row.r, (int, np.integer)) else fmt(float(row.r)),
            fmt(row.pointwise_residual),
            fmt(row.lower),
            fmt(row.upper),
            ";".join(row.flags),
        ])
