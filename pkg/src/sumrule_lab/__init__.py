"""Numerical sum rules for spectral measures on the real line and the unit circle."""
__version__ = "0.1.0"

from .measures import (Measure, MeasureError, add_atoms, from_spec, integrate, jacobi_measure,
                       kl, make_reference, mix, reweight, support_classify, trig_moments,
                       verblunsky_measure)
from .oprl import (JacobiCoeffs, canonical_from_jacobi, jacobi_from_canonical,
                   jacobi_from_measure, jacobi_from_z, z_from_jacobi)
from .opuc import (SchurFunction, VerblunskyCoeffs, cmv_matrix, deformed_verblunsky,
                   gw_alpha, nevanlinna_pick_iterates, schur_iterates,
                   verblunsky_from_measure)
from .mappings import (apply_maps, dg_push, dvz_push, mobius_push, rotate_pi, szego_pull,
                       szego_push)
from .sumrules import Rule, SumRuleReport, gem_diagnostic, parse_rule, verify

__all__ = [
    "Measure", "MeasureError", "add_atoms", "from_spec", "integrate", "jacobi_measure", "kl",
    "make_reference", "mix", "reweight", "support_classify", "trig_moments",
    "verblunsky_measure", "JacobiCoeffs", "canonical_from_jacobi", "jacobi_from_canonical",
    "jacobi_from_measure", "jacobi_from_z", "z_from_jacobi", "SchurFunction",
    "VerblunskyCoeffs", "cmv_matrix", "deformed_verblunsky", "gw_alpha",
    "nevanlinna_pick_iterates", "schur_iterates", "verblunsky_from_measure", "apply_maps",
    "dg_push", "dvz_push", "mobius_push", "rotate_pi", "szego_pull", "szego_push", "Rule",
    "SumRuleReport", "gem_diagnostic", "parse_rule", "verify",
]
