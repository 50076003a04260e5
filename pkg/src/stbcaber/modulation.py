"""Coherent modulation constants.

Each scheme's conditional error probability is taken to be
``A * Q_a(sqrt(B * snr))``; the catalog supplies ``(A, B)``.
"""

import enum
import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = ["Scheme", "Modulation", "modulation_params", "parse_modulation"]


class Scheme(enum.Enum):
    BFSK = "bfsk"
    BPSK = "bpsk"
    QPSK_4QAM = "qpsk"
    MPAM = "mpam"
    MPSK = "mpsk"
    RECT_MQAM = "mqam-rect"
    NONRECT_MQAM = "mqam-nonrect"

    @property
    def m_ary(self):
        return self in (Scheme.MPAM, Scheme.MPSK, Scheme.RECT_MQAM, Scheme.NONRECT_MQAM)


@dataclass(frozen=True)
class Modulation:
    scheme: Scheme
    a_coef: float
    b_coef: float
    order: int = None

    @property
    def label(self):
        if self.order is None:
            return self.scheme.value
        return f"{self.scheme.value}{self.order}"


def modulation_params(scheme, M=None):
    """Look up ``(A, B)`` for a scheme.

    >>> modulation_params("mqam-rect", 16)
    Modulation(scheme=<Scheme.RECT_MQAM: 'mqam-rect'>, a_coef=3.0, b_coef=0.2, order=16)
    """
    scheme = Scheme(scheme)
    if not scheme.m_ary:
        if M is not None:
            raise DomainError(f"{scheme.value} does not take a modulation order")
        a, b = {Scheme.BFSK: (1.0, 1.0), Scheme.BPSK: (1.0, 2.0), Scheme.QPSK_4QAM: (2.0, 1.0)}[scheme]
        return Modulation(scheme, a, b)
    if M is None or int(M) != M or M < 2:
        raise DomainError(f"{scheme.value} needs an integer order M >= 2, got {M!r}")
    M = int(M)
    if scheme is Scheme.MPAM:
        a, b = 2.0 * (M - 1) / M, 6.0 / (M * M - 1)
    elif scheme is Scheme.MPSK:
        a, b = 2.0, 2.0 * math.sin(math.pi / M) ** 2
    elif scheme is Scheme.RECT_MQAM:
        r = math.isqrt(M)
        if r * r != M or M < 4:
            raise DomainError(f"rectangular M-QAM needs a perfect square M >= 4, got {M}")
        a, b = 4.0 * (r - 1) / r, 3.0 / (M - 1)
    else:
        a, b = 4.0, 3.0 / (M - 1)
    return Modulation(scheme, a, b, M)


def parse_modulation(text, M=None):
    """Parse ``"bpsk"``, ``"mqam-rect"`` (with ``M``) or ``"mqam-rect:16"``."""
    name, _, order = text.strip().lower().partition(":")
    if order:
        M = int(order)
    return modulation_params(name, M)
