"""Parameter records: polynomial parameters (alpha, beta, gamma) and
process parameters (A, B, C)."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ArgumentError, DomainError


@dataclass(frozen=True)
class CdhParams:
    """Parameters of the continuous dual Hahn family.

    ``beta`` and ``gamma`` hold the two real parameters, or for a conjugate
    pair both hold the common real part and ``im`` is nonzero, meaning
    beta = re - i*im and gamma = re + i*im.
    """
    alpha: float
    beta: float
    gamma: float
    im: float = 0.0

    def __post_init__(self):
        for v in (self.alpha, self.beta, self.gamma, self.im):
            if not math.isfinite(v):
                raise DomainError("parameters must be finite")
        if self.im != 0.0 and self.beta != self.gamma:
            raise DomainError("a conjugate pair needs equal real parts")

    @classmethod
    def real(cls, alpha, beta, gamma):
        return cls(float(alpha), float(beta), float(gamma), 0.0)

    @classmethod
    def conjugate(cls, alpha, re, im):
        if im == 0.0:
            raise DomainError("conjugate pair needs a nonzero imaginary part")
        return cls(float(alpha), float(re), float(re), abs(float(im)))

    @property
    def is_conjugate(self):
        return self.im != 0.0

    @property
    def pair_kind(self):
        return "ConjugatePair" if self.is_conjugate else "TwoReals"

    @property
    def beta_c(self):
        return complex(self.beta, -self.im)

    @property
    def gamma_c(self):
        return complex(self.gamma, self.im)

    def swapped(self):
        if self.is_conjugate:
            return self
        return CdhParams(self.alpha, self.gamma, self.beta, 0.0)

    def A(self, n):
        n = np.asarray(n, dtype=float)
        if self.is_conjugate:
            return (n + self.alpha + self.beta) ** 2 + self.im ** 2
        return (n + self.alpha + self.beta) * (n + self.alpha + self.gamma)

    def C(self, n):
        n = np.asarray(n, dtype=float)
        return n * (n - 1.0 + self.beta + self.gamma)

    def diag(self, n):
        return self.A(n) + self.C(n) - self.alpha ** 2

    def elementary(self):
        """alpha*beta + alpha*gamma + beta*gamma (real in both pair kinds)."""
        if self.is_conjugate:
            return 2.0 * self.alpha * self.beta + self.beta ** 2 + self.im ** 2
        return self.alpha * (self.beta + self.gamma) + self.beta * self.gamma

    def norm_factors(self, n):
        """Real factors whose product is beta_j = A_{j-1} C_j, j = 1..n."""
        j = np.arange(1, n + 1, dtype=float)
        if self.is_conjugate:
            return [self.A(j - 1), j, j - 1.0 + self.beta + self.gamma]
        return [j - 1.0 + self.alpha + self.beta, j - 1.0 + self.alpha + self.gamma,
                j, j - 1.0 + self.beta + self.gamma]

    def gamma_args(self):
        """Density description: |Gamma(ar_j + i(w + ai_j))|^2 factors."""
        return (np.array([self.alpha, self.beta, self.gamma]),
                np.array([0.0, -self.im, self.im]))

    def as_dict(self):
        return {"alpha": self.alpha, "beta_re": self.beta, "beta_im": -self.im if self.im else 0.0,
                "gamma_re": self.gamma, "gamma_im": self.im}


@dataclass(frozen=True)
class ProcessParams:
    """Process parameters (A, B, C).

    Either all three are real with A + C > 0 and B >= A, or C is real and
    A, B are complex conjugates with a nonzero imaginary part.
    """
    A: complex
    B: complex
    C: float

    def __post_init__(self):
        A = complex(self.A)
        B = complex(self.B)
        C = float(self.C)
        if not all(math.isfinite(v) for v in (A.real, A.imag, B.real, B.imag, C)):
            raise ArgumentError("parameters must be finite")
        if A.imag == 0.0 and B.imag == 0.0:
            if not A.real + C > 0.0:
                raise ArgumentError(f"need A + C > 0, got {A.real + C:g}")
            if B.real < A.real:
                raise ArgumentError("need B >= A for real parameters")
        else:
            if A.imag == 0.0 or B != A.conjugate():
                raise ArgumentError("complex A, B must be a conjugate pair with Im A != 0")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @classmethod
    def real(cls, A, B, C):
        return cls(complex(A), complex(B), float(C))

    @classmethod
    def conjugate(cls, re, im, C):
        return cls(complex(re, im), complex(re, -im), float(C))

    @property
    def is_real(self):
        return self.A.imag == 0.0

    @property
    def tau(self):
        return -(self.A + self.B).real / 2.0

    @property
    def start_point(self):
        """-(A - B)^2 / 4, the deterministic state at time tau."""
        return -((self.A - self.B) ** 2).real / 4.0

    @property
    def ac_bc(self):
        """(A + C)(B + C), real and positive."""
        return ((self.A + self.C) * (self.B + self.C)).real

    def marginal_cdh(self, t):
        """Polynomial parameters (C - t, A + t, B + t) of the time-t law."""
        if self.is_real:
            return CdhParams.real(self.C - t, self.A.real + t, self.B.real + t)
        return CdhParams.conjugate(self.C - t, self.A.real + t, self.A.imag)

    def mean(self, t):
        A, B, C = self.A, self.B, self.C
        return (A * B + A * C + B * C).real + 2.0 * C * t - t * t

    def variance(self, t):
        return self.ac_bc * ((self.A + self.B).real + 2.0 * t)

    def as_dict(self):
        return {"A": self.A.real, "A_im": self.A.imag, "B": self.B.real,
                "B_im": self.B.imag, "C": self.C}


def kernel_cdh(C, s, t, x):
    """Polynomial parameters (C - t, t - s -/+ sqrt(-x)) of the kernel from
    (s, x) to time t; a conjugate pair when x > 0."""
    if x > 0.0:
        return CdhParams.conjugate(C - t, t - s, math.sqrt(x))
    v = math.sqrt(-x)
    return CdhParams.real(C - t, t - s - v, t - s + v)
