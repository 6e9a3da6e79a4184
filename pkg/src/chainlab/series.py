"""Sparse weighted polynomial series and first-order phase-space jets.

Series live in the three surface variables (y1, z2, conj(z2)) with the
anisotropic weights wt(y1) = 2, wt(z2) = wt(conj(z2)) = 1.  A monomial is
keyed by integer exponents (k, alpha, beta) meaning
y1**k * z2**alpha * conj(z2)**beta, of weighted degree 2*k + alpha + beta.

A series carries an optional truncation order: coefficients of weighted
degree above it are unknown and silently dropped by every operation.
``truncation_order=None`` means the series is exact (a true polynomial).

Example:

    >>> s = WeightedSeries({(0, 1, 1): 1.0})        # |z2|^2
    >>> t = s.diff("z2").diff("z2b")                # d^2/dz2 dzbar2
    >>> t.coeff(0, 0, 0)
    (1+0j)
"""

from __future__ import annotations

import numbers

WEIGHTS = {"y1": 2, "z2": 1, "z2b": 1}

_SCALAR = (numbers.Number,)


def weighted_degree(key):
    """Weighted degree 2*k + alpha + beta of a monomial key."""
    k, alpha, beta = key
    return 2 * k + alpha + beta


def _min_order(a, b):
    """Combine two truncation orders; None acts as +infinity."""
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class WeightedSeries:
    """Sparse polynomial in (y1, z2, conj(z2)) with weighted truncation."""

    __slots__ = ("coeffs", "truncation_order")

    def __init__(self, coeffs=None, truncation_order=None):
        self.truncation_order = truncation_order
        self.coeffs = {}
        if coeffs:
            for key, c in dict(coeffs).items():
                k, alpha, beta = key
                if k < 0 or alpha < 0 or beta < 0:
                    raise ValueError(f"negative exponent in monomial key {key}")
                if truncation_order is not None and weighted_degree(key) > truncation_order:
                    continue
                c = complex(c)
                if c != 0:
                    self.coeffs[(int(k), int(alpha), int(beta))] = c

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, c, truncation_order=None):
        return cls({(0, 0, 0): c}, truncation_order)

    @classmethod
    def monomial(cls, k, alpha, beta, c=1.0, truncation_order=None):
        return cls({(k, alpha, beta): c}, truncation_order)

    # -- inspection ---------------------------------------------------

    def coeff(self, k, alpha, beta):
        return self.coeffs.get((k, alpha, beta), 0j)

    def terms(self):
        """Monomials in a fixed deterministic order."""
        return sorted(self.coeffs.items())

    def min_weighted_degree(self):
        """Lowest weighted degree present, or None for the zero series."""
        if not self.coeffs:
            return None
        return min(weighted_degree(k) for k in self.coeffs)

    def max_weighted_degree(self):
        if not self.coeffs:
            return None
        return max(weighted_degree(k) for k in self.coeffs)

    def is_real_valued(self, tol=1e-12):
        """True when coeff(k,a,b) == conj(coeff(k,b,a)) for all monomials.

        Such a series takes real values whenever evaluated with
        z2b = conj(z2) and real y1.
        """
        for (k, a, b), c in self.coeffs.items():
            mirror = self.coeffs.get((k, b, a), 0j)
            if abs(c - mirror.conjugate()) > tol * (1.0 + abs(c)):
                return False
        return True

    def __repr__(self):
        n = len(self.coeffs)
        return (f"WeightedSeries({n} terms, "
                f"truncation_order={self.truncation_order})")

    def __eq__(self, other):
        if not isinstance(other, WeightedSeries):
            return NotImplemented
        return (self.coeffs == other.coeffs
                and self.truncation_order == other.truncation_order)

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if isinstance(other, _SCALAR):
            other = WeightedSeries.constant(other)
        if not isinstance(other, WeightedSeries):
            return NotImplemented
        order = _min_order(self.truncation_order, other.truncation_order)
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            out[key] = out.get(key, 0j) + c
        return WeightedSeries(out, order)

    __radd__ = __add__

    def __neg__(self):
        return WeightedSeries({k: -c for k, c in self.coeffs.items()},
                              self.truncation_order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, WeightedSeries)
                       else WeightedSeries.constant(-other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, _SCALAR):
            return WeightedSeries(
                {k: c * other for k, c in self.coeffs.items()},
                self.truncation_order)
        if not isinstance(other, WeightedSeries):
            return NotImplemented
        order = _min_order(self.truncation_order, other.truncation_order)
        out = {}
        for (k1, a1, b1), c1 in self.coeffs.items():
            for (k2, a2, b2), c2 in other.coeffs.items():
                key = (k1 + k2, a1 + a2, b1 + b2)
                if order is not None and weighted_degree(key) > order:
                    continue
                out[key] = out.get(key, 0j) + c1 * c2
        return WeightedSeries(out, order)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("series ** only supports non-negative integers")
        out = WeightedSeries.constant(1.0, self.truncation_order)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus and structure ops -------------------------------------

    def diff(self, var):
        """Partial derivative with respect to "y1", "z2" or "z2b".

        A truncation order drops by the weight of the variable: terms of
        degree t are unknown, so the derivative is unknown at t - wt(var).
        """
        if var not in WEIGHTS:
            raise ValueError(f"unknown variable {var!r}")
        pos = {"y1": 0, "z2": 1, "z2b": 2}[var]
        order = self.truncation_order
        if order is not None:
            order = order - WEIGHTS[var]
        out = {}
        for key, c in self.coeffs.items():
            n = key[pos]
            if n == 0:
                continue
            new = list(key)
            new[pos] = n - 1
            out[tuple(new)] = c * n
        return WeightedSeries(out, order)

    def conjugate(self):
        """Complex conjugate series: swaps z2 and conj(z2) exponents."""
        return WeightedSeries(
            {(k, b, a): c.conjugate() for (k, a, b), c in self.coeffs.items()},
            self.truncation_order)

    def anisotropic_scale(self, delta):
        """Pull back under (y1, z2) -> (delta^2 y1, delta z2).

        Each monomial picks up delta**weighted_degree.
        """
        return WeightedSeries(
            {key: c * delta ** weighted_degree(key)
             for key, c in self.coeffs.items()},
            self.truncation_order)

    def truncate(self, order):
        return WeightedSeries(self.coeffs,
                              _min_order(self.truncation_order, order))

    def evaluate(self, y1, z2, z2b=None):
        """Evaluate at a point.  Arguments may be scalars or Jet instances.

        z2b defaults to the conjugate of z2, which is the on-surface
        meaning of the third variable.
        """
        if z2b is None:
            z2b = z2.conjugate()
        if not self.coeffs:
            return 0j
        kmax = max(k for k, _, _ in self.coeffs)
        amax = max(a for _, a, _ in self.coeffs)
        bmax = max(b for _, _, b in self.coeffs)
        y1p = _power_table(y1, kmax)
        z2p = _power_table(z2, amax)
        z2bp = _power_table(z2b, bmax)
        total = 0j
        for (k, a, b) in sorted(self.coeffs):
            total = total + self.coeffs[(k, a, b)] * y1p[k] * z2p[a] * z2bp[b]
        return total


def _power_table(x, nmax):
    """[1, x, x**2, ..., x**nmax] built by repeated multiplication."""
    out = [1]
    acc = 1
    for _ in range(nmax):
        acc = acc * x
        out.append(acc)
    return out


# ---------------------------------------------------------------------
# First-order jets over the 8 real phase coordinates
# ---------------------------------------------------------------------

PHASE_DIRS = ("x0", "y1", "x2", "y2", "px0", "py1", "px2", "py2")


class Jet:
    """Value plus first partials along the 8 real phase directions.

    Arithmetic propagates derivatives by the chain rule, so evaluating
    any rational expression of Jets yields the expression's gradient.
    Conjugation conjugates value and partials (directions are real).
    """

    __slots__ = ("value", "partials")

    def __init__(self, value, partials=None):
        self.value = complex(value)
        if partials is None:
            partials = (0j,) * 8
        self.partials = tuple(complex(p) for p in partials)
        if len(self.partials) != 8:
            raise ValueError("Jet needs exactly 8 partials")

    @classmethod
    def variable(cls, value, index):
        p = [0j] * 8
        p[index] = 1.0 + 0j
        return cls(value, p)

    @classmethod
    def constant(cls, value):
        return cls(value)

    def __repr__(self):
        return f"Jet({self.value!r})"

    def conjugate(self):
        return Jet(self.value.conjugate(),
                   tuple(p.conjugate() for p in self.partials))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value,
                       tuple(a + b for a, b in zip(self.partials, other.partials)))
        if isinstance(other, _SCALAR):
            return Jet(self.value + other, self.partials)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, tuple(-p for p in self.partials))

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value - other.value,
                       tuple(a - b for a, b in zip(self.partials, other.partials)))
        if isinstance(other, _SCALAR):
            return Jet(self.value - other, self.partials)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            u, v = self.value, other.value
            return Jet(u * v,
                       tuple(du * v + u * dv
                             for du, dv in zip(self.partials, other.partials)))
        if isinstance(other, _SCALAR):
            return Jet(self.value * other,
                       tuple(p * other for p in self.partials))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            u, v = self.value, other.value
            if v == 0:
                raise ZeroDivisionError("Jet division by zero value")
            inv2 = 1.0 / (v * v)
            return Jet(u / v,
                       tuple((du * v - u * dv) * inv2
                             for du, dv in zip(self.partials, other.partials)))
        if isinstance(other, _SCALAR):
            return self * (1.0 / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALAR):
            return Jet.constant(other) / self
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("Jet ** only supports non-negative integers")
        out = Jet.constant(1.0)
        base = self
        e = n
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out
