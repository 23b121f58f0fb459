"""
KZ Associator - Drinfel'd associator from KZ parallel transport

Regularized associators, hexagon and pentagon checks, and the
infinitesimal braid relations, over truncated formal power series.
"""

__version__ = '0.1.0'
__author__ = 'KZ Associator Team'
