"""Representations of reduced enveloping algebras U_chi(g) with chi of standard Levi form.

Exact linear algebra over F_p for baby Verma modules, the standard modules
induced from Levi projectives, quasi-simple modules, their composition
factors, socle and radical series, and Ext^1 between explicit modules.
"""

from .modules import Context, GradedModule
from .series import chop, loewy, loewy_length

__version__ = "0.1.0"

__all__ = ["Context", "GradedModule", "chop", "loewy", "loewy_length"]
