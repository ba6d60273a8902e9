"""Transfer matrix of the one-dimensional chain.

A single row of the model (dimers on a line of vertices, same vacancy and
broken-link potentials, with the colinear neighbours of an edge being the
next edge on either side) admits a 3x3 transfer matrix over the state of
one dual bond between consecutive vertices:

    0  no dimer crosses the bond
    l  a dimer crosses, its left half behind us
    r  a dimer crosses, its right half ahead

Row order (0, l, r).  Entries collect the vacancy weight vw when a vertex
is passed uncovered and the link weight lw when a middle edge ends up
broken; the characteristic polynomial works out to

    x^3 - vw x^2 - x + (vw - 1/ell0),

a perturbation of (x-1)(x+1)(x-vw) by eps = -1/ell0 in the constant term.
Exact chain partition functions for small lengths are also computed here by
direct enumeration, as ground truth for the matrix-element formulas.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Iterator

import numpy as np

from .model import ModelParams

Bc1D = str  # "vacant" | "packed" | "periodic"


@dataclasses.dataclass(frozen=True)
class Spectrum1D:
    """The three real eigenvalues, ordered x1 > x2 > x3 by real part, and
    the characteristic-polynomial residuals |p(xi)| after polishing."""

    x1: float
    x2: float
    x3: float
    residuals: tuple[float, float, float]

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))


# -- matrix and spectrum ---------------------------------------------------


def transfer_matrix(params: ModelParams) -> np.ndarray:
    vw = params.vacancy_weight
    lw = params.link_weight
    return np.array([
        [vw, 0.0, vw * lw],
        [lw, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ])


def char_poly(params: ModelParams) -> np.ndarray:
    """Coefficients of det(x - T), highest power first."""
    vw = params.vacancy_weight
    return np.array([1.0, -vw, -1.0, vw - 1.0 / params.ell0])


def perturbed_char_poly(params: ModelParams, eps: float) -> np.ndarray:
    """The family x^3 - vw x^2 - x + (vw + eps); eps = -1/ell0 recovers
    char_poly, eps = 0 factors as (x-1)(x+1)(x-vw)."""
    vw = params.vacancy_weight
    return np.array([1.0, -vw, -1.0, vw + eps])


def unperturbed_roots(params: ModelParams) -> tuple[float, float, float]:
    return (1.0, params.vacancy_weight, -1.0)


def root_eps_derivatives(params: ModelParams) -> tuple[float, float, float]:
    """dx/deps at eps = 0 for the three unperturbed roots, from implicit
    differentiation: x'(0) = -1/p0'(x0)."""
    vw = params.vacancy_weight
    return (-1.0 / (2.0 * (1.0 - vw)),
            1.0 / (1.0 - vw * vw),
            -1.0 / (2.0 * (1.0 + vw)))


def _polish_root(coeffs: np.ndarray, x: complex, rounds: int = 2) -> complex:
    for _ in range(rounds):
        p = np.polyval(coeffs, x)
        dp = np.polyval(np.polyder(coeffs), x)
        if dp != 0:
            x = x - p / dp
    return x


def spectrum(params: ModelParams) -> Spectrum1D:
    """Eigenvalues sorted by decreasing real part, Newton-polished.  All
    three are real for this matrix (the constant term keeps p(+-1) < 0, so
    one root exceeds 1 and one sits in (-1, 0)); complex residue beyond
    roundoff is an error."""
    coeffs = char_poly(params)
    roots = [_polish_root(coeffs, r) for r in np.roots(coeffs)]
    arr = np.array(roots)
    if np.abs(arr.imag).max() > 1e-9 * max(1.0, np.abs(arr).max()):
        raise ArithmeticError(
            f"unexpected complex transfer spectrum {arr} at {params}")
    xs = sorted(arr.real, reverse=True)
    res = tuple(abs(float(np.polyval(coeffs, x))) for x in xs)
    for x, r in zip(xs, res):
        if r > 1e-12 * max(1.0, abs(x) ** 3):
            raise ArithmeticError(f"root residual {r} too large at {params}")
    return Spectrum1D(xs[0], xs[1], xs[2], res)


def leading_eigenvalue(params: ModelParams) -> float:
    return spectrum(params).x1


def x1_first_order(params: ModelParams) -> float:
    """First-order location of the top eigenvalue, 1 + 1/(2 ell0)."""
    return 1.0 + 0.5 / params.ell0


def correlation_length(params: ModelParams) -> float:
    """xi = 1 / log|x1/x3|; x3 is the second-largest eigenvalue in modulus."""
    s = spectrum(params)
    return 1.0 / math.log(abs(s.x1 / s.x3))


def ell0(params: ModelParams) -> float:
    return params.ell0


# -- matrix-element partition functions ------------------------------------


def z_vacant(params: ModelParams, L: int) -> float:
    """<0| T^(L+1) |0> for a chain of L vertices with vacant boundaries.
    Equals the enumerated chain partition function up to one constant
    factor vw, independent of L."""
    if L < 2 or L % 2:
        raise ValueError("chain length must be even and at least 2")
    t = transfer_matrix(params)
    v = np.array([1.0, 0.0, 0.0])
    for _ in range(L + 1):
        v = t @ v
    return float(v[0])


def log_z_vacant(params: ModelParams, L: int) -> float:
    """Same matrix element in log space via rescaled iteration."""
    if L < 2 or L % 2:
        raise ValueError("chain length must be even and at least 2")
    t = transfer_matrix(params)
    v = np.array([1.0, 0.0, 0.0])
    shift = 0.0
    for _ in range(L + 1):
        v = t @ v
        m = np.abs(v).max()
        v /= m
        shift += math.log(m)
    if v[0] <= 0:
        raise ArithmeticError("nonpositive matrix element")
    return shift + math.log(v[0])


def z_periodic_1d(params: ModelParams, L: int) -> float:
    """Trace of T^L: the length-L periodic chain partition function."""
    if L < 2:
        raise ValueError("periodic chain needs at least two vertices")
    return float(np.trace(np.linalg.matrix_power(transfer_matrix(params), L)))


# -- exact chain enumeration ------------------------------------------------
#
# Doubled integer coordinates on the line: vertices even, edges odd.  A chain
# of L vertices occupies 0, 2, ..., 2(L-1); its interior edges sit at
# 1, 3, ..., 2L-3.  Boundary conditions fix every other edge: "vacant" to
# empty, "packed" to the fully packed reference (occupied iff e = 1 mod 4,
# which also pins the two edges just outside the chain to empty).  "periodic"
# wraps the chain, one potential per translation class.


def _occ_fn(edges: frozenset, L: int, bc: Bc1D) -> Callable[[int], int]:
    if bc == "periodic":
        period = 2 * L
        return lambda e: int(e % period in edges)
    if bc == "vacant":
        return lambda e: int(e in edges)
    if bc == "packed":
        lo, hi = 1, 2 * L - 3
        return lambda e: int(e in edges) if lo <= e <= hi else int(e % 4 == 1)
    raise ValueError(f"unknown 1d boundary condition {bc!r}")


def _free_coords(L: int, bc: Bc1D) -> list[int]:
    if bc == "periodic":
        return list(range(1, 2 * L, 2))
    return list(range(1, 2 * L - 2, 2))


def enumerate_chain(L: int, bc: Bc1D, max_edges: int = 22) -> Iterator[frozenset]:
    """All hard-core occupancies of the free edges, as frozensets of doubled
    coordinates."""
    free = _free_coords(L, bc)
    n = len(free)
    if n > max_edges:
        raise ValueError(f"{n} free edges exceeds the enumeration guard")
    wrap = bc == "periodic"
    for m in range(1 << n):
        if m & (m >> 1):
            continue
        if wrap and n > 1 and (m & 1) and (m >> (n - 1)) & 1:
            continue
        yield frozenset(free[i] for i in range(n) if (m >> i) & 1)


def chain_potential_counts(edges: frozenset, L: int, bc: Bc1D) -> tuple[int, int]:
    """(vacancies, broken links) over every potential whose support touches
    the chain; periodic counts one per class."""
    occ = _occ_fn(edges, L, bc)
    if bc == "periodic":
        verts = range(0, 2 * L, 2)
        mids = range(1, 2 * L, 2)
    else:
        verts = range(-2, 2 * L + 1, 2)
        mids = range(-3, 2 * L + 2, 2)
    nvac = sum(1 for v in verts if occ(v - 1) + occ(v + 1) == 0)
    nlink = sum(1 for f in mids if occ(f - 2) + occ(f + 2) == 1)
    return nvac, nlink


def z_chain(params: ModelParams, L: int, bc: Bc1D, max_edges: int = 22) -> float:
    vw = params.vacancy_weight
    lw = params.link_weight
    terms = [vw ** nv * lw ** nl
             for nv, nl in (chain_potential_counts(e, L, bc)
                            for e in enumerate_chain(L, bc, max_edges))]
    return math.fsum(sorted(terms, reverse=True))


def z_vacant_enum(params: ModelParams, L: int) -> float:
    return z_chain(params, L, "vacant")


def z_fullpacked(params: ModelParams, L: int) -> float:
    """Chain partition function with fully packed boundary reference; the
    reference configuration itself has weight exactly 1."""
    if L < 4 or L % 2:
        raise ValueError("packed boundaries need an even chain length >= 4")
    return z_chain(params, L, "packed")


def z_periodic_enum(params: ModelParams, L: int) -> float:
    return z_chain(params, L, "periodic")


def fullpacked_lower_bound(params: ModelParams, L: int) -> float:
    """1 + L^2/(16 ell0^2): two well-separated vacancies cost ell0^-2 and
    there are order L^2 ways to place them."""
    return 1.0 + L * L / (16.0 * params.ell0 ** 2)
