"""Two-parameter continued fraction expansions.

The interval map x -> k(1-m-x)/(x-m) - floor(...) generates, for m=0, the
Gauss-like (orientation reversing) expansions and, for m=1, the Renyi-like
(orientation preserving) ones.  k=1 recovers the classical regular and
backward continued fractions, with digits one less than their classical
counterparts.

An orbit carries the digit sequence, the forward "futures" x_n, the
"pasts" Y_n built from the reversed digit history, and enough Mobius data
to produce convergents and approximation coefficients two independent
ways:

* theta_direct: q_n^2 |x0 - p_n/q_n| from normalized continuants,
* theta_perron: 1/(x_{n+1} - Y_{n+1}) from the dynamic pair.

For m=0 the two agree identically (the continuant normalization
q_n = D_n * k^(-(n+1)/2) makes the identity algebraic).  For m=1 no
digit-determined normalization can reconcile them; the dynamic-pair form
is the one the plane geometry in :mod:`mkcf.geometry` is built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from mpmath import mp, mpf, mpmathify, floor as mp_floor

from .params import Params, Real


def _numeric_k(params: Params) -> mpf:
    """params.k as an mpf; orbit arithmetic always runs at working precision."""
    k = params.k
    return k if isinstance(k, mpf) else mpmathify(k)


class DomainError(ValueError):
    """Input outside the operation's domain."""


class PrecisionLossError(ArithmeticError):
    """Working precision cannot certify the result (e.g. floor near a tie)."""


class ConstructionFailedError(RuntimeError):
    """A targeted seed could not be built after bounded retries."""


@dataclass(frozen=True)
class MobiusCoeffs:
    """Coefficients of x -> (a*x + b)/(c*x + d)."""

    a: Real
    b: Real
    c: Real
    d: Real

    def apply(self, x: Real) -> Real:
        return (self.a * x + self.b) / (self.c * x + self.d)

    def det(self) -> Real:
        return self.a * self.d - self.b * self.c

    def convergent(self) -> tuple[Real, Real]:
        """Raw (p, q) with p/q the value of the finite expansion."""
        return self.b, self.d


@dataclass
class Orbit:
    """One seed's trajectory under the expansion map.

    futures[i] is x_{i+1}, pasts[i] is Y_{i+1}.  ``terminated_at`` is the
    index n with x_n = 0 when the expansion is finite.  ``trusted_depth``
    is the largest n whose digits passed the reconstruction residual
    check; entries beyond it are not produced.
    """

    x0: mpf
    digits: list[int]
    futures: list[mpf]
    pasts: list[mpf]
    terminated_at: Optional[int]
    trusted_depth: int
    mobius_prefixes: list[MobiusCoeffs] = field(repr=False, default_factory=list)

    def usable_depth(self) -> int:
        return min(self.trusted_depth, len(self.digits))


@dataclass
class ThetaSeq:
    """Approximation coefficients theta_1..theta_N with per-entry method."""

    thetas: list[mpf]
    methods: list[str]


def digit_matrix(a: int, params: Params) -> MobiusCoeffs:
    m, k = params.m, params.k
    return MobiusCoeffs(m, m * (a + k) + k * (1 - 2 * m), 1, a + k)


_OK, _ZERO, _SUSPECT = 0, 1, 2


def _raw_step(x: mpf, params: Params) -> tuple[int, mpf, int]:
    """(digit, frac, status) for one step; status distinguishes a clean step,
    a certain termination, and a floor too close to a tie to trust."""
    m = params.m
    k = _numeric_k(params)
    if not (0 < x < 1):
        raise DomainError(f"step_map needs x in (0,1), got {x}")
    y = k * (1 - m - x) / (x - m)
    fl = mp_floor(y)
    digit = int(fl)
    frac = y - fl
    if digit < 0:
        raise DomainError(f"negative digit from x={x}; input outside domain")
    # y within the zero threshold of an integer is that integer exactly:
    # the seed has a finite expansion (rounding may land on either side).
    if frac < params.zero_threshold:
        return digit, mpf(0), _ZERO
    if 1 - frac < params.zero_threshold:
        return digit + 1, mpf(0), _ZERO
    if frac < params.boundary_tolerance:
        return digit, frac, _SUSPECT
    if 1 - frac < params.boundary_tolerance:
        return digit + 1, frac - 1, _SUSPECT
    return digit, frac, _OK


def step_map(x: mpf, params: Params) -> tuple[int, mpf]:
    """One expansion step: digit = floor(k(1-m-x)/(x-m)), next = fractional part.

    Raises PrecisionLossError when x sits too close to a cylinder boundary
    for the floor to be trusted.  A fractional part below the termination
    threshold is returned as exact zero.
    """
    with mp.workprec(params.precision_bits):
        digit, frac, status = _raw_step(x, params)
        if status == _SUSPECT:
            raise PrecisionLossError(
                f"x within {params.boundary_tolerance} of a cylinder boundary"
            )
        return digit, frac


def expand(x0: Real, params: Params, depth: Optional[int] = None) -> Orbit:
    """Run the expansion to ``depth`` (default params.max_depth) or termination.

    Precision loss never raises: the orbit is truncated at the last step
    whose reconstruction residual |M_n(x_n) - x0| stayed below tolerance.
    """
    m = params.m
    n_max = params.max_depth if depth is None else min(depth, params.max_depth)
    with mp.workprec(params.precision_bits):
        k = _numeric_k(params)
        x0 = mpmathify(x0) if not isinstance(x0, mpf) else +x0
        if not (0 < x0 < 1):
            raise DomainError(f"expand needs x0 in (0,1), got {x0}")
        digits: list[int] = []
        futures: list[mpf] = []
        pasts: list[mpf] = []
        prefixes: list[MobiusCoeffs] = []
        a11, a12, a21, a22 = mpf(1), mpf(0), mpf(0), mpf(1)
        past_tail = mpf(0)  # [a_{n-1},...,a_1], zero when empty
        terminated_at = None
        trusted = 0
        x = x0
        for n in range(1, n_max + 1):
            try:
                a, x_next, status = _raw_step(x, params)
            except DomainError:
                break
            if status == _SUSPECT:
                # Near a floor tie the digit is only trustworthy if reading
                # it as an exact termination reconstructs the seed.
                x_next = mpf(0)
            digits.append(a)
            futures.append(x_next)
            if n >= 2:
                pasts.append(m - k - a - past_tail)
            past_tail = m + k * (1 - 2 * m) / (a + k + past_tail)
            if n == 1:
                pasts.append(m - k - past_tail)  # Y_1 = m - k - [a_1]
            mb, md = m * (a + k) + k * (1 - 2 * m), a + k
            a11, a12, a21, a22 = (
                a11 * m + a12,
                a11 * mb + a12 * md,
                a21 * m + a22,
                a21 * mb + a22 * md,
            )
            prefixes.append(MobiusCoeffs(a11, a12, a21, a22))
            residual = abs((a11 * x_next + a12) / (a21 * x_next + a22) - x0)
            if residual >= params.boundary_tolerance:
                digits.pop(), futures.pop(), pasts.pop(), prefixes.pop()
                break
            trusted = n
            if x_next == 0:
                terminated_at = n
                break
            x = x_next
        return Orbit(x0, digits, futures, pasts, terminated_at, trusted, prefixes)


def eval_finite(digits: Sequence[int], params: Params, tail: Real = 0) -> Real:
    """Value of the finite expansion [a_1,...,a_n] continued by ``tail``.

    Backward recursion v -> m + k(1-2m)/(a+k+v).  Exact when called with
    Fraction k and tail.  Empty digits return the tail unchanged.
    """
    m, k = params.m, params.k
    if not isinstance(k, mpf) and not isinstance(tail, mpf):
        v = tail
        for a in reversed(digits):
            v = m + k * (1 - 2 * m) / (a + k + v)
        return v
    with mp.workprec(params.precision_bits):
        k = _numeric_k(params)
        v = mpmathify(tail) if not isinstance(tail, mpf) else tail
        for a in reversed(digits):
            v = m + k * (1 - 2 * m) / (a + k + v)
        return v


def past_value(digits: Sequence[int], params: Params) -> Real:
    """Y_n for the digit prefix a_1..a_n.

    Y_1 = m - k - [a_1]; for n >= 2, Y_n = m - k - a_n - [a_{n-1},...,a_1].
    Always <= m - k, with equality only for m=1 all-zero prefixes.
    """
    if not digits:
        raise DomainError("past_value needs at least one digit")
    m, k = params.m, params.k
    if len(digits) == 1:
        return m - k - eval_finite(digits[:1], params)
    return m - k - digits[-1] - eval_finite(list(reversed(digits[:-1])), params)


def convergent_matrix(digits: Sequence[int], params: Params) -> MobiusCoeffs:
    """Left-to-right product of per-digit matrices [[m, m(a+k)+k(1-2m)], [1, a+k]].

    The finite expansion value is b/d and det = ((2m-1)k)^n.
    """
    if not digits:
        raise DomainError("convergent_matrix needs at least one digit")
    exact = not isinstance(params.k, mpf)
    if exact:
        a11, a12, a21, a22 = 1, 0, 0, 1
        for a in digits:
            mat = digit_matrix(a, params)
            a11, a12, a21, a22 = (
                a11 * mat.a + a12 * mat.c,
                a11 * mat.b + a12 * mat.d,
                a21 * mat.a + a22 * mat.c,
                a21 * mat.b + a22 * mat.d,
            )
        return MobiusCoeffs(a11, a12, a21, a22)
    with mp.workprec(params.precision_bits):
        a11, a12, a21, a22 = mpf(1), mpf(0), mpf(0), mpf(1)
        for a in digits:
            mat = digit_matrix(a, params)
            a11, a12, a21, a22 = (
                a11 * mat.a + a12 * mat.c,
                a11 * mat.b + a12 * mat.d,
                a21 * mat.a + a22 * mat.c,
                a21 * mat.b + a22 * mat.d,
            )
        return MobiusCoeffs(a11, a12, a21, a22)


def continuant_pair(mat: MobiusCoeffs, n: int, params: Params) -> tuple[Real, Real]:
    """Normalized continuants (p_n, q_n) from the n-digit Mobius product.

    (p, q) = (b, d) * k^(-(n+1)/2).  The scale leaves p/q untouched and is
    the unique one under which q_n^2 |x0 - p_n/q_n| satisfies the
    future/past identity when m=0.
    """
    with mp.workprec(params.precision_bits):
        scale = 1 / mp.sqrt(_numeric_k(params) ** (n + 1))
        return mat.b * scale, mat.d * scale


def theta_direct(x0: mpf, orbit: Orbit, n: int, params: Params) -> mpf:
    """q_n^2 |x0 - p_n/q_n| from the orbit's cached n-digit continuants."""
    if not (1 <= n <= orbit.usable_depth()):
        raise DomainError(f"n={n} outside 1..{orbit.usable_depth()}")
    with mp.workprec(params.precision_bits):
        mat = orbit.mobius_prefixes[n - 1]
        diff = x0 - mat.b / mat.d
        if orbit.terminated_at == n:
            return mpf(0)
        if abs(diff) < mpf(2) ** (-params.precision_bits + 16):
            raise PrecisionLossError(
                f"catastrophic cancellation at n={n}: raise precision_bits"
            )
        return mat.d ** 2 * abs(diff) / _numeric_k(params) ** (n + 1)


def theta_perron(x_next: Real, y_next: Real, params: Optional[Params] = None) -> Real:
    """1/(x_{n+1} - Y_{n+1}), the dynamic-pair form of theta_n."""
    gap = x_next - y_next
    if not gap > 0:
        raise DomainError(f"need x - Y > 0, got {gap}")
    if params is None:
        return 1 / gap
    with mp.workprec(params.precision_bits):
        return 1 / gap


def theta_sequence(orbit: Orbit, params: Params, method: str = "perron") -> ThetaSeq:
    """theta_1..theta_{N-1} for the orbit, by either route.

    Stops one short of the usable depth (the dynamic-pair form needs
    x_{n+1}, Y_{n+1}) and stops at termination rather than guessing.
    """
    if method not in ("perron", "direct"):
        raise DomainError(f"unknown method {method!r}")
    n_max = orbit.usable_depth() - 1
    if orbit.terminated_at is not None:
        n_max = min(n_max, orbit.terminated_at - 1)
    thetas = []
    with mp.workprec(params.precision_bits):
        for n in range(1, n_max + 1):
            if method == "perron":
                thetas.append(theta_perron(orbit.futures[n], orbit.pasts[n], params))
            else:
                thetas.append(theta_direct(orbit.x0, orbit, n, params))
    return ThetaSeq(thetas, [method] * len(thetas))


def classical_digit_translate(digits: Sequence[int], direction: str) -> list[int]:
    """Shift between map digits a_n and classical digits b_n = a_n + 1."""
    if direction == "to_classical":
        if any(a < 0 for a in digits):
            raise DomainError("map digits must be >= 0")
        return [a + 1 for a in digits]
    if direction == "from_classical":
        if any(b < 1 for b in digits):
            raise DomainError("classical digits must be >= 1")
        return [b - 1 for b in digits]
    raise DomainError(f"direction must be to_classical or from_classical, got {direction!r}")


_TAIL_STRIDE = mpf("0.61803398874989484820458683436563811772")


def seed_with_prefix(prefix: Sequence[int], tail: Real, params: Params,
                     max_retries: int = 16) -> mpf:
    """Seed whose expansion starts with ``prefix`` and continues from ``tail``.

    Built by the inverse branches (eval_finite with the tail as residual
    future) and verified by re-expansion; boundary collisions retry with a
    deterministically rotated tail.
    """
    if any(a < 0 for a in prefix):
        raise DomainError("prefix digits must be >= 0")
    with mp.workprec(params.precision_bits):
        tail = mpf(tail) if not isinstance(tail, mpf) else +tail
        if not (0 < tail < 1):
            raise DomainError(f"tail must lie in (0,1), got {tail}")
        if not prefix:
            return tail
        current = tail
        need = len(prefix)
        for _ in range(max_retries):
            x0 = eval_finite(prefix, params, tail=current)
            orbit = expand(x0, params, depth=min(need + 2, params.max_depth))
            if orbit.trusted_depth >= need and orbit.digits[:need] == list(prefix):
                return x0
            current = current + _TAIL_STRIDE
            current = current - mp_floor(current)
            if current == 0:
                current = _TAIL_STRIDE
        raise ConstructionFailedError(
            f"could not realize digit prefix {list(prefix)} after {max_retries} tries"
        )
