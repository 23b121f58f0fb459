"""The regularized associator, its identities and growth diagnostics."""

from .drinfeld import phi_limit, phi_sample
from .identities import verify_hexagon, verify_pentagon
from .lbh import classify_lbh

__all__ = ['phi_limit', 'phi_sample', 'verify_hexagon', 'verify_pentagon', 'classify_lbh']
