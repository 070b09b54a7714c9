"""Parabolic Muckenhoupt weights on discrete space-time grids."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import (ParabolicRectangle, SpaceTimeBox, dilate, lower_part,
                       translated_lower, translated_upper, upper_part)
from .field import (Grid, LevelQuery, PrefixTable, ScalarField, as_weight, box_average,
                    box_integral, box_integral_direct, box_max, box_min, level_measure,
                    time_reverse, weighted_level_measure)
from .pwf import read_csv_field, read_pwf, write_csv_field, write_pwf
from .maximal import (EnumeratedFamily, MaximalResult, RectangleFamily, enumerate_family,
                      maximal_backward, maximal_forward, maximal_oracle)
from .weights import (ConstantReport, CheckReport, a1_constant, a1_via_maximal,
                      aq_constant, closure_check, dual_weight, gr_implication_check,
                      gurov_reshetnyak, quantitative_measure_check, reverse_holder,
                      rhi_search, self_improvement, strong_type_ratio, sublevel_condition,
                      sublevel_measure_consistency,
                      weak_type_ratio, extremal_weak_type)
from .factor import (CRResult, FactorizationResult, aq_generator, cr_build, cr_decompose,
                     jones_synthesize, rdf_factorize, rdf_operator_T)
